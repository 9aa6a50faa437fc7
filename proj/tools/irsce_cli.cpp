// Command-line front end: Monte Carlo sweeps, closed-form prediction and
// the validation suites.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "irsce/analysis.hpp"
#include "irsce/checks.hpp"
#include "irsce/harness.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int report_results(const std::vector<irsce::checks::CheckResult>& results) {
    bool ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        ok = ok && r.pass;
    }
    std::printf("%s\n", ok ? "all checks passed" : "SOME CHECKS FAILED");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-aided uplink channel estimation simulator"};
    app.require_subcommand(1);

    // ---- run ----
    auto* run = app.add_subcommand("run", "run a Monte Carlo sweep");
    std::string preset, config_path, out_path, json_path, strategies_arg, regime_arg;
    int trials = -1, threads = 0;
    std::uint64_t seed = 0;
    bool no_predictions = false;
    run->add_option("--preset", preset, "figure preset name (fig3, fig4a, ...)");
    run->add_option("--config", config_path, "experiment spec JSON file");
    run->add_option("--trials", trials, "Monte Carlo trials per sweep value");
    auto* seed_opt = run->add_option("--seed", seed, "base RNG seed");
    run->add_option("--out", out_path, "CSV output path");
    run->add_option("--json", json_path, "JSON output path");
    run->add_option("--strategies", strategies_arg, "comma list: 2pce,3pce");
    run->add_option("--regime", regime_arg, "M<N regime: shared|orthogonal");
    run->add_option("--threads", threads, "worker threads (0 = hardware)");
    run->add_flag("--no-predictions", no_predictions, "omit closed-form columns");

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "closed forms only, no simulation");
    std::string predict_config, predict_preset, predict_out;
    double e_scaling_sq = 1.0;
    predict->add_option("--config", predict_config, "experiment spec JSON file");
    predict->add_option("--preset", predict_preset, "figure preset name");
    predict->add_option("--emu-sq", e_scaling_sq,
                        "per-element expected squared scaling factor");
    predict->add_option("--out", predict_out, "JSON output path");

    // ---- validate ----
    auto* validate = app.add_subcommand("validate", "run a property suite");
    std::string suite;
    int validate_trials = 0;
    std::uint64_t validate_seed = 42;
    validate->add_option("--suite", suite, "lemmas|noiseless|mse")->required();
    validate->add_option("--trials", validate_trials, "instances or trials override");
    validate->add_option("--seed", validate_seed, "suite RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            irsce::ExperimentSpec spec;
            if (!preset.empty() && !config_path.empty()) {
                std::fprintf(stderr, "use either --preset or --config, not both\n");
                return 1;
            }
            if (!preset.empty()) {
                spec = irsce::figure_preset(preset);
            } else if (!config_path.empty()) {
                spec = irsce::spec_from_json(slurp(config_path));
            } else {
                std::fprintf(stderr, "run needs --preset or --config\n");
                return 1;
            }
            if (trials > 0) spec.trials = trials;
            if (seed_opt->count() > 0) spec.seed = seed;
            if (threads > 0) spec.threads = threads;
            if (no_predictions) spec.emit_predictions = false;
            if (!out_path.empty()) spec.output_path = out_path;
            if (!strategies_arg.empty()) {
                spec.strategies.clear();
                std::stringstream ss(strategies_arg);
                std::string token;
                while (std::getline(ss, token, ',')) {
                    if (token == "2pce") {
                        spec.strategies.push_back(irsce::Strategy::TwoPhase);
                    } else if (token == "3pce") {
                        spec.strategies.push_back(irsce::Strategy::ThreePhase);
                    } else {
                        throw std::invalid_argument("unknown strategy: " + token);
                    }
                }
            }
            if (!regime_arg.empty()) {
                if (regime_arg == "shared") {
                    spec.base.wide_regime = irsce::WideRegime::Shared;
                } else if (regime_arg == "orthogonal") {
                    spec.base.wide_regime = irsce::WideRegime::Orthogonal;
                } else {
                    throw std::invalid_argument("unknown regime: " + regime_arg);
                }
            }

            const auto rows = irsce::run_experiment(spec);
            if (!spec.output_path.empty()) {
                irsce::emit_csv(rows, spec.output_path);
                std::printf("wrote %s\n", spec.output_path.c_str());
            }
            if (!json_path.empty()) {
                irsce::emit_json(rows, json_path);
                std::printf("wrote %s\n", json_path.c_str());
            }
            if (spec.output_path.empty() && json_path.empty()) {
                std::fputs(irsce::rows_to_csv(rows).c_str(), stdout);
            }
            return 0;
        }

        if (*predict) {
            irsce::ExperimentSpec spec;
            if (!predict_preset.empty()) {
                spec = irsce::figure_preset(predict_preset);
            } else if (!predict_config.empty()) {
                spec = irsce::spec_from_json(slurp(predict_config));
            } else {
                std::fprintf(stderr, "predict needs --preset or --config\n");
                return 1;
            }
            const auto jnum = [](double v) -> std::string {
                if (std::isnan(v)) return "null";
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.9e", v);
                return buf;
            };
            const double undefined = std::nan("");
            std::string out = "[\n";
            bool first = true;
            for (double value : spec.sweep_values) {
                irsce::SystemConfig cfg = spec.base;
                irsce::apply_sweep(cfg, spec.sweep_param, value);
                cfg.validate();
                const Eigen::VectorXd e =
                    Eigen::VectorXd::Constant(cfg.irs_elements(), e_scaling_sq);
                const auto in = irsce::make_asymptotic_inputs(cfg, e);
                const auto first_phase = irsce::mse_phase1_2pce(in);
                const bool tall = cfg.bs_antennas >= cfg.irs_elements();
                irsce::Phase2Mse second{undefined, undefined};
                double base_scaling = undefined;
                double base_d = cfg.bs_antennas * in.sigma2_mw / in.p_mw;
                double base_r1 = (1.0 + cfg.users) * base_d / cfg.users;
                // the M < N scaling rows are undefined when M divides N
                try {
                    if (cfg.users >= 2) {
                        second = tall ? irsce::mse_phase2_2pce_simultaneous(in)
                                      : irsce::mse_phase2_2pce_orthogonal(in);
                    }
                    const auto base = irsce::mse_3pce_table(in);
                    base_scaling = tall ? base.scaling_m_ge_n : base.scaling_m_lt_n;
                } catch (const std::invalid_argument&) {
                }
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%s  {\"sweep\": %.9g, ",
                              first ? "" : ",\n", value);
                out += buf;
                out += "\"2pce\": {\"eps_d1\": " + jnum(first_phase.direct) +
                       ", \"eps_r1\": " + jnum(first_phase.reflected) +
                       ", \"eps_dk\": " + jnum(second.direct) +
                       ", \"eps_scaling\": " + jnum(second.scaling) +
                       "}, \"3pce\": {\"eps_d_total\": " + jnum(base_d) +
                       ", \"eps_r1\": " + jnum(base_r1) +
                       ", \"eps_scaling\": " + jnum(base_scaling) + "}}";
                first = false;
            }
            out += "\n]\n";
            if (!predict_out.empty()) {
                std::ofstream f(predict_out, std::ios::binary);
                f << out;
                std::printf("wrote %s\n", predict_out.c_str());
            } else {
                std::fputs(out.c_str(), stdout);
            }
            return 0;
        }

        if (*validate) {
            if (suite == "lemmas") {
                const int n = validate_trials > 0 ? validate_trials : 1000;
                return report_results(irsce::checks::lemma_suite(validate_seed, n));
            }
            if (suite == "noiseless") {
                const int n = validate_trials > 0 ? validate_trials : 100;
                return report_results(irsce::checks::noiseless_suite(validate_seed, n));
            }
            if (suite == "mse") {
                const int n = validate_trials > 0 ? validate_trials : 500;
                return report_results(irsce::checks::mse_suite(validate_seed, n));
            }
            std::fprintf(stderr, "unknown suite '%s' (lemmas|noiseless|mse)\n",
                         suite.c_str());
            return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
