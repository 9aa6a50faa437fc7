#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "irsce/harness.hpp"

using irsce::ExperimentSpec;
using irsce::Strategy;

namespace {

ExperimentSpec tiny_spec() {
    ExperimentSpec spec;
    spec.base.bs_antennas = 4;
    spec.base.irs_cols = 2;
    spec.base.irs_rows = 1;
    spec.base.users = 2;
    spec.sweep_param = "p_dbm";
    spec.sweep_values = {10.0, 20.0};
    spec.trials = 8;
    spec.seed = 5;
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("noiseless single trial yields zero nmse columns") {
    ExperimentSpec spec = tiny_spec();
    spec.base.noise_psd_dbm_per_hz = -1000.0;  // effectively zero noise
    spec.trials = 1;
    spec.sweep_values = {10.0};
    const auto rows = irsce::run_experiment(spec);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.report.d1.nmse < 1e-16);
        CHECK(row.report.r1.nmse < 1e-16);
        CHECK(row.report.dk.nmse < 1e-16);
        CHECK(row.report.rk.nmse < 1e-16);
        CHECK(row.excluded_trials == 0);
    }
}

TEST_CASE("same seed gives bit-identical outputs across worker counts") {
    ExperimentSpec spec = tiny_spec();
    spec.threads = 1;
    const auto rows1 = irsce::run_experiment(spec);
    spec.threads = 4;
    const auto rows2 = irsce::run_experiment(spec);
    const std::string csv1 = irsce::rows_to_csv(rows1);
    const std::string csv2 = irsce::rows_to_csv(rows2);
    CHECK(csv1 == csv2);

    // and a different seed changes them
    spec.seed = 6;
    const auto rows3 = irsce::run_experiment(spec);
    CHECK(irsce::rows_to_csv(rows3) != csv1);
}

TEST_CASE("strategies share the channel realization within a trial") {
    ExperimentSpec spec = tiny_spec();
    spec.base.noise_psd_dbm_per_hz = -1000.0;
    spec.trials = 3;
    spec.sweep_values = {20.0};
    // with no noise both strategies are exact, so their denominators (channel
    // norms) agree exactly if and only if they saw the same realization
    const auto rows = irsce::run_experiment(spec);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].report.e_scaling_sq.isApprox(rows[1].report.e_scaling_sq, 1e-12));
}

TEST_CASE("csv shape and parseability") {
    ExperimentSpec spec = tiny_spec();
    const auto rows = irsce::run_experiment(spec);
    const std::string csv = irsce::rows_to_csv(rows);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    const auto count_fields = [](const std::string& s) {
        return 1 + std::count(s.begin(), s.end(), ',');
    };
    const auto header_fields = count_fields(line);
    CHECK(header_fields == 15);
    int data_lines = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        CHECK(count_fields(line) == header_fields);
        ++data_lines;
    }
    CHECK(data_lines == 4);  // 2 sweep values x 2 strategies
    // scientific notation with '.' decimal separator
    CHECK(csv.find("e+") != std::string::npos);
    CHECK(csv.find(',') != std::string::npos);
}

TEST_CASE("json round-trip reproduces rows") {
    ExperimentSpec spec = tiny_spec();
    const auto rows = irsce::run_experiment(spec);
    const std::string text = irsce::rows_to_json(rows);
    const auto back = irsce::rows_from_json(text);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].sweep_value == rows[i].sweep_value);
        CHECK(back[i].strategy == rows[i].strategy);
        CHECK(back[i].report.d1.nmse == rows[i].report.d1.nmse);
        CHECK(back[i].report.rk.se == rows[i].report.rk.se);
        CHECK(back[i].report.eps_scaling.mean == rows[i].report.eps_scaling.mean);
        CHECK(back[i].excluded_trials == rows[i].excluded_trials);
        REQUIRE(back[i].predictions.has_value() == rows[i].predictions.has_value());
        if (rows[i].predictions) {
            CHECK(back[i].predictions->eps_d1 == rows[i].predictions->eps_d1);
        }
    }
}

TEST_CASE("emit_csv writes the file and rejects empty input") {
    ExperimentSpec spec = tiny_spec();
    spec.trials = 2;
    spec.sweep_values = {12.0};
    const auto rows = irsce::run_experiment(spec);
    const std::string path = "harness_test_out.csv";
    irsce::emit_csv(rows, path);
    CHECK(slurp(path) == irsce::rows_to_csv(rows));
    std::remove(path.c_str());
    CHECK_THROWS_AS(irsce::emit_csv({}, path), std::invalid_argument);
}

TEST_CASE("figure presets pin the stated parameters") {
    const auto fig3 = irsce::figure_preset("fig3");
    CHECK(fig3.base.bs_antennas == 40);
    CHECK(fig3.base.irs_cols * fig3.base.irs_rows == 32);
    CHECK(fig3.base.users == 4);
    CHECK(fig3.sweep_param == "p_dbm");
    CHECK(fig3.sweep_values.front() == 10.0);
    CHECK(fig3.sweep_values.back() == 30.0);
    CHECK(fig3.base.beta_ib == doctest::Approx(std::pow(10.0, 0.3)));
    CHECK(fig3.base.r_d == 0.0);

    const auto fig5 = irsce::figure_preset("fig5");
    CHECK(fig5.base.irs_cols * fig5.base.irs_rows == 20);
    CHECK(fig5.base.users == 2);
    CHECK(fig5.base.p_dbm == 24.0);
    CHECK(fig5.sweep_param == "bs_antennas");

    const auto fig8 = irsce::figure_preset("fig8");
    CHECK(fig8.sweep_param == "r_d");
    CHECK(fig8.base.r_r == 0.0);
    CHECK(fig8.base.r_rk == 0.0);
    CHECK(fig8.base.p_dbm == 16.0);

    CHECK_THROWS_AS(irsce::figure_preset("fig12"), std::invalid_argument);
}

TEST_CASE("spec json honours dB fields and overrides") {
    const std::string text = R"({
      "config": {"bs_antennas": 6, "irs_cols": 2, "irs_rows": 3, "users": 3,
                 "beta_ib_db": 3.0, "wide_regime": "orthogonal"},
      "sweep": {"param": "p_dbm", "values": [10, 14]},
      "trials": 17, "seed": 99, "strategies": ["2pce"],
      "emit_predictions": false
    })";
    const auto spec = irsce::spec_from_json(text);
    CHECK(spec.base.bs_antennas == 6);
    CHECK(spec.base.beta_ib == doctest::Approx(std::pow(10.0, 0.3)));
    CHECK(spec.base.wide_regime == irsce::WideRegime::Orthogonal);
    CHECK(spec.trials == 17);
    CHECK(spec.seed == 99);
    CHECK(spec.strategies.size() == 1);
    CHECK(spec.strategies[0] == Strategy::TwoPhase);
    CHECK_FALSE(spec.emit_predictions);

    const auto round = irsce::spec_from_json(irsce::spec_to_json(spec));
    CHECK(round.base.beta_ib == doctest::Approx(spec.base.beta_ib));
    CHECK(round.trials == spec.trials);
}

TEST_CASE("apply_sweep validates the axis") {
    irsce::SystemConfig cfg;
    irsce::apply_sweep(cfg, "irs_elements", 24);
    CHECK(cfg.irs_rows == 6);
    CHECK_THROWS_AS(irsce::apply_sweep(cfg, "irs_elements", 25), std::invalid_argument);
    CHECK_THROWS_AS(irsce::apply_sweep(cfg, "unknown", 1.0), std::invalid_argument);
    irsce::apply_sweep(cfg, "beta_ib_db", 3.0);
    CHECK(cfg.beta_ib == doctest::Approx(std::pow(10.0, 0.3)));
}

TEST_CASE("experiment spec validation") {
    ExperimentSpec spec = tiny_spec();
    spec.trials = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = tiny_spec();
    spec.sweep_values.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = tiny_spec();
    spec.strategies.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
