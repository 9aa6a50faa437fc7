#include "irsce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "irsce/estimator.hpp"

namespace irsce {

namespace {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string format_sci(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.8e", v);
    return buf;
}

struct StrategyTrial {
    bool ok = false;
    TrialErrors errors;
};

Predictions make_predictions(Strategy strategy, const SystemConfig& cfg,
                             const Eigen::VectorXd& e_scaling_sq) {
    const AsymptoticInputs in = make_asymptotic_inputs(cfg, e_scaling_sq);
    const bool tall = cfg.bs_antennas >= cfg.irs_elements();
    Predictions pred;
    const double undefined = std::numeric_limits<double>::quiet_NaN();
    if (strategy == Strategy::TwoPhase) {
        const Phase1Mse first = mse_phase1_2pce(in);
        pred.eps_d1 = first.direct;
        pred.eps_r1 = first.reflected;
        if (cfg.users >= 2) {
            // the M < N scaling formula is undefined when M divides N
            try {
                const Phase2Mse second = tall ? mse_phase2_2pce_simultaneous(in)
                                              : mse_phase2_2pce_orthogonal(in);
                pred.eps_dk = second.direct;
                pred.eps_scaling = second.scaling;
            } catch (const std::invalid_argument&) {
                pred.eps_dk = undefined;
                pred.eps_scaling = undefined;
            }
        }
        pred.eps_d_total = pred.eps_d1 + (cfg.users - 1) * pred.eps_dk;
    } else {
        try {
            const ThreePhaseMse base = mse_3pce_table(in);
            pred.eps_d_total = base.direct_total;
            pred.eps_d1 = base.direct_total / cfg.users;  // phase 1 treats users alike
            pred.eps_dk = pred.eps_d1;
            pred.eps_r1 = base.reflected_typical;
            pred.eps_scaling = tall ? base.scaling_m_ge_n : base.scaling_m_lt_n;
        } catch (const std::invalid_argument&) {
            const double d = cfg.bs_antennas * cfg.noise_variance_mw() / cfg.tx_power_mw();
            pred.eps_d_total = d;
            pred.eps_d1 = d / cfg.users;
            pred.eps_dk = pred.eps_d1;
            pred.eps_r1 = (1.0 + cfg.users) * d / cfg.users;
            pred.eps_scaling = undefined;
        }
    }
    return pred;
}

}  // namespace

void ExperimentSpec::validate() const {
    base.validate();
    if (sweep_values.empty()) throw std::invalid_argument("spec: sweep values are empty");
    if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
    if (strategies.empty()) throw std::invalid_argument("spec: no strategies selected");
    SystemConfig probe = base;
    for (double v : sweep_values) {
        probe = base;
        apply_sweep(probe, sweep_param, v);
        probe.validate();
    }
}

void apply_sweep(SystemConfig& cfg, const std::string& param, double value) {
    if (param == "p_dbm") cfg.p_dbm = value;
    else if (param == "alpha_ub") cfg.alpha_ub = value;
    else if (param == "alpha_ui") cfg.alpha_ui = value;
    else if (param == "alpha_ib") cfg.alpha_ib = value;
    else if (param == "beta_ub") cfg.beta_ub = value;
    else if (param == "beta_ui") cfg.beta_ui = value;
    else if (param == "beta_ib") cfg.beta_ib = value;
    else if (param == "beta_ub_db") cfg.beta_ub = db_to_linear(value);
    else if (param == "beta_ui_db") cfg.beta_ui = db_to_linear(value);
    else if (param == "beta_ib_db") cfg.beta_ib = db_to_linear(value);
    else if (param == "r_d") cfg.r_d = value;
    else if (param == "r_r") cfg.r_r = value;
    else if (param == "r_rk") cfg.r_rk = value;
    else if (param == "bs_antennas") cfg.bs_antennas = static_cast<int>(value);
    else if (param == "irs_elements") {
        const int n = static_cast<int>(value);
        if (n % cfg.irs_cols != 0) {
            throw std::invalid_argument("apply_sweep: irs_elements must be a multiple of "
                                        "irs_cols");
        }
        cfg.irs_rows = n / cfg.irs_cols;
    } else {
        throw std::invalid_argument("apply_sweep: unknown parameter '" + param + "'");
    }
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const bool want_2p = std::count(spec.strategies.begin(), spec.strategies.end(),
                                    Strategy::TwoPhase) > 0;
    const bool want_3p = std::count(spec.strategies.begin(), spec.strategies.end(),
                                    Strategy::ThreePhase) > 0;
    std::vector<ResultRow> rows;

    for (std::size_t vi = 0; vi < spec.sweep_values.size(); ++vi) {
        SystemConfig cfg = spec.base;
        apply_sweep(cfg, spec.sweep_param, spec.sweep_values[vi]);
        const auto t0 = std::chrono::steady_clock::now();

        const Geometry geom = build_geometry(cfg);
        const ChannelModel model(cfg, geom);
        const TrainingSchedule sched2p =
            build_2pce(cfg.bs_antennas, cfg.irs_elements(), cfg.users, cfg.wide_regime);
        const TrainingSchedule sched3p =
            build_3pce(cfg.bs_antennas, cfg.irs_elements(), cfg.users);
        const double p_mw = cfg.tx_power_mw();
        const double sigma2_mw = cfg.noise_variance_mw();

        std::vector<StrategyTrial> out2p(spec.trials), out3p(spec.trials);
        std::atomic<int> next{0};
        const auto worker = [&]() {
            for (int trial = next.fetch_add(1); trial < spec.trials;
                 trial = next.fetch_add(1)) {
                try {
                    RngStream channel_stream(spec.seed, vi, trial, 0);
                    const ChannelRealization real = model.sample(channel_stream);
                    if (want_2p) {
                        try {
                            RngStream noise(spec.seed, vi, trial, 1);
                            const EstimateSet est =
                                run_2pce(real, sched2p, p_mw, sigma2_mw, noise);
                            out2p[trial] = {true, trial_errors(real, est)};
                        } catch (const std::exception&) {
                        }
                    }
                    if (want_3p) {
                        try {
                            RngStream noise(spec.seed, vi, trial, 2);
                            const EstimateSet est =
                                run_3pce(real, sched3p, p_mw, sigma2_mw, noise);
                            out3p[trial] = {true, trial_errors(real, est)};
                        } catch (const std::exception&) {
                        }
                    }
                } catch (const std::exception&) {
                    // channel sampling failed; both strategies excluded
                }
            }
        };
        int workers = spec.threads > 0 ? spec.threads
                                       : static_cast<int>(std::thread::hardware_concurrency());
        workers = std::max(1, std::min(workers, spec.trials));
        {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const auto reduce = [&](Strategy strategy, const std::vector<StrategyTrial>& outs) {
            ResultRow row;
            row.sweep_value = spec.sweep_values[vi];
            row.strategy = strategy;
            std::vector<TrialErrors> kept;
            kept.reserve(outs.size());
            for (const auto& o : outs) {
                if (o.ok) kept.push_back(o.errors);
            }
            row.excluded_trials = spec.trials - static_cast<int>(kept.size());
            row.report = aggregate_trials(kept);
            if (spec.emit_predictions && !kept.empty()) {
                row.predictions = make_predictions(strategy, cfg, row.report.e_scaling_sq);
            }
            row.wall_time_s = elapsed;
            return row;
        };
        if (want_2p) rows.push_back(reduce(Strategy::TwoPhase, out2p));
        if (want_3p) rows.push_back(reduce(Strategy::ThreePhase, out3p));
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out =
        "sweep,strategy,nmse_d1,nmse_r1,nmse_dk,nmse_rk,se_d1,se_r1,se_dk,se_rk,"
        "pred_eps_d1,pred_eps_r1,pred_eps_dk,pred_eps_scaling,pred_eps_d_total\n";
    for (const auto& row : rows) {
        out += format_sci(row.sweep_value);
        out += ',';
        out += to_string(row.strategy);
        const auto& r = row.report;
        for (double v : {r.d1.nmse, r.r1.nmse, r.dk.nmse, r.rk.nmse, r.d1.se, r.r1.se,
                         r.dk.se, r.rk.se}) {
            out += ',';
            out += format_sci(v);
        }
        if (row.predictions) {
            const auto& p = *row.predictions;
            for (double v : {p.eps_d1, p.eps_r1, p.eps_dk, p.eps_scaling, p.eps_d_total}) {
                out += ',';
                out += format_sci(v);
            }
        } else {
            out += ",,,,,";
        }
        out += '\n';
    }
    return out;
}

namespace {

json row_to_json(const ResultRow& row) {
    json j;
    j["sweep"] = row.sweep_value;
    j["strategy"] = to_string(row.strategy);
    j["report"] = json::parse(row.report.to_json());
    if (row.predictions) {
        const auto& p = *row.predictions;
        j["predictions"] = {{"eps_d1", p.eps_d1},
                            {"eps_r1", p.eps_r1},
                            {"eps_dk", p.eps_dk},
                            {"eps_scaling", p.eps_scaling},
                            {"eps_d_total", p.eps_d_total}};
    }
    j["excluded_trials"] = row.excluded_trials;
    j["wall_time_s"] = row.wall_time_s;
    return j;
}

GroupStat group_from_json(const json& j) {
    return {j.at("value").get<double>(), j.at("se").get<double>()};
}

MeanStat mean_from_json(const json& j) {
    return {j.at("value").get<double>(), j.at("se").get<double>()};
}

}  // namespace

std::string rows_to_json(const std::vector<ResultRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) arr.push_back(row_to_json(row));
    return arr.dump(2);
}

std::vector<ResultRow> rows_from_json(const std::string& text) {
    const json arr = json::parse(text);
    std::vector<ResultRow> rows;
    for (const auto& j : arr) {
        ResultRow row;
        row.sweep_value = j.at("sweep").get<double>();
        row.strategy = j.at("strategy").get<std::string>() == "2pce" ? Strategy::TwoPhase
                                                                     : Strategy::ThreePhase;
        const json& rep = j.at("report");
        row.report.trials = rep.at("trials").get<std::size_t>();
        row.report.d_all = group_from_json(rep.at("nmse").at("d_all"));
        row.report.r_all = group_from_json(rep.at("nmse").at("r_all"));
        row.report.d1 = group_from_json(rep.at("nmse").at("d1"));
        row.report.r1 = group_from_json(rep.at("nmse").at("r1"));
        row.report.dk = group_from_json(rep.at("nmse").at("dk"));
        row.report.rk = group_from_json(rep.at("nmse").at("rk"));
        row.report.eps_d1 = mean_from_json(rep.at("mse").at("eps_d1"));
        row.report.eps_r1 = mean_from_json(rep.at("mse").at("eps_r1"));
        row.report.eps_dk = mean_from_json(rep.at("mse").at("eps_dk"));
        row.report.eps_d_total = mean_from_json(rep.at("mse").at("eps_d_total"));
        row.report.eps_scaling = mean_from_json(rep.at("mse").at("eps_scaling"));
        const auto scal = rep.at("e_scaling_sq").get<std::vector<double>>();
        row.report.e_scaling_sq =
            Eigen::Map<const Eigen::VectorXd>(scal.data(), scal.size());
        if (j.contains("predictions")) {
            Predictions p;
            p.eps_d1 = j["predictions"].at("eps_d1").get<double>();
            p.eps_r1 = j["predictions"].at("eps_r1").get<double>();
            p.eps_dk = j["predictions"].at("eps_dk").get<double>();
            p.eps_scaling = j["predictions"].at("eps_scaling").get<double>();
            p.eps_d_total = j["predictions"].at("eps_d_total").get<double>();
            row.predictions = p;
        }
        row.excluded_trials = j.at("excluded_trials").get<int>();
        row.wall_time_s = j.at("wall_time_s").get<double>();
        rows.push_back(row);
    }
    return rows;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot write " + path);
    out << rows_to_csv(rows);
}

void emit_json(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("emit_json: no rows");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_json: cannot write " + path);
    out << rows_to_json(rows);
}

ExperimentSpec figure_preset(const std::string& name) {
    ExperimentSpec spec;
    // Shared baseline: M=40, N=32 (4x8), K=4, beta_ib = 3 dB, other Rician
    // factors and correlations zero.
    if (name == "fig3") {
        spec.sweep_param = "p_dbm";
        spec.sweep_values = {10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
    } else if (name == "fig4a") {
        spec.sweep_param = "alpha_ub";
        spec.sweep_values = {3.0, 3.5, 4.0, 4.5, 5.0, 5.5};
    } else if (name == "fig4b") {
        spec.sweep_param = "alpha_ib";
        spec.sweep_values = {2.0, 2.2, 2.6, 3.0, 3.4, 3.8};
    } else if (name == "fig5") {
        spec.sweep_param = "bs_antennas";
        spec.sweep_values = {8, 12, 16, 20, 24, 28, 32, 36, 40};
        spec.base.irs_rows = 5;  // N = 20
        spec.base.users = 2;
        spec.base.p_dbm = 24.0;
    } else if (name == "fig6") {
        spec.sweep_param = "irs_elements";
        spec.sweep_values = {8, 12, 16, 24, 28, 32, 36, 40};
        spec.base.bs_antennas = 20;
        spec.base.users = 2;
        spec.base.p_dbm = 24.0;
    } else if (name == "fig7a") {
        spec.sweep_param = "beta_ib_db";
        spec.sweep_values = {0, 2, 4, 6, 8, 10};
        spec.base.beta_ui = 0.0;
    } else if (name == "fig7b") {
        spec.sweep_param = "beta_ui_db";
        spec.sweep_values = {0, 2, 4, 6, 8, 10};
        spec.base.beta_ib = 0.0;
    } else if (name == "fig8") {
        spec.sweep_param = "r_d";
        spec.sweep_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += n + " ";
        throw std::invalid_argument("figure_preset: unknown name '" + name +
                                    "'; available: " + names);
    }
    return spec;
}

std::vector<std::string> preset_names() {
    return {"fig3", "fig4a", "fig4b", "fig5", "fig6", "fig7a", "fig7b", "fig8"};
}

namespace {

SystemConfig config_from_json(const json& j) {
    SystemConfig cfg;
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("bs_antennas", cfg.bs_antennas);
    get("irs_cols", cfg.irs_cols);
    get("irs_rows", cfg.irs_rows);
    get("users", cfg.users);
    get("p_dbm", cfg.p_dbm);
    get("noise_psd_dbm_per_hz", cfg.noise_psd_dbm_per_hz);
    get("bandwidth_hz", cfg.bandwidth_hz);
    get("beta_ub", cfg.beta_ub);
    get("beta_ui", cfg.beta_ui);
    get("beta_ib", cfg.beta_ib);
    if (j.contains("beta_ub_db")) cfg.beta_ub = db_to_linear(j["beta_ub_db"].get<double>());
    if (j.contains("beta_ui_db")) cfg.beta_ui = db_to_linear(j["beta_ui_db"].get<double>());
    if (j.contains("beta_ib_db")) cfg.beta_ib = db_to_linear(j["beta_ib_db"].get<double>());
    get("alpha_ub", cfg.alpha_ub);
    get("alpha_ui", cfg.alpha_ui);
    get("alpha_ib", cfg.alpha_ib);
    get("r_d", cfg.r_d);
    get("r_r", cfg.r_r);
    get("r_rk", cfg.r_rk);
    get("l0_db", cfg.l0_db);
    get("d0_m", cfg.d0_m);
    get("lambda_m", cfg.lambda_m);
    const auto get_vec3 = [&](const char* key, Vec3& v) {
        if (j.contains(key)) {
            const auto arr = j.at(key).get<std::vector<double>>();
            if (arr.size() != 3) throw std::invalid_argument("config: bad position array");
            v = {arr[0], arr[1], arr[2]};
        }
    };
    get_vec3("bs_ref", cfg.bs_ref);
    get_vec3("irs_ref", cfg.irs_ref);
    if (j.contains("user_positions")) {
        for (const auto& arr : j.at("user_positions")) {
            const auto pos = arr.get<std::vector<double>>();
            if (pos.size() != 3) throw std::invalid_argument("config: bad user position");
            cfg.user_positions.push_back({pos[0], pos[1], pos[2]});
        }
    }
    get("reference_loss", cfg.reference_loss);
    if (j.contains("wide_regime")) {
        const std::string regime = j["wide_regime"].get<std::string>();
        if (regime == "shared") cfg.wide_regime = WideRegime::Shared;
        else if (regime == "orthogonal") cfg.wide_regime = WideRegime::Orthogonal;
        else throw std::invalid_argument("config: wide_regime must be shared|orthogonal");
    }
    return cfg;
}

json config_to_json(const SystemConfig& cfg) {
    json j;
    j["bs_antennas"] = cfg.bs_antennas;
    j["irs_cols"] = cfg.irs_cols;
    j["irs_rows"] = cfg.irs_rows;
    j["users"] = cfg.users;
    j["p_dbm"] = cfg.p_dbm;
    j["noise_psd_dbm_per_hz"] = cfg.noise_psd_dbm_per_hz;
    j["bandwidth_hz"] = cfg.bandwidth_hz;
    j["beta_ub"] = cfg.beta_ub;
    j["beta_ui"] = cfg.beta_ui;
    j["beta_ib"] = cfg.beta_ib;
    j["alpha_ub"] = cfg.alpha_ub;
    j["alpha_ui"] = cfg.alpha_ui;
    j["alpha_ib"] = cfg.alpha_ib;
    j["r_d"] = cfg.r_d;
    j["r_r"] = cfg.r_r;
    j["r_rk"] = cfg.r_rk;
    j["l0_db"] = cfg.l0_db;
    j["d0_m"] = cfg.d0_m;
    j["lambda_m"] = cfg.lambda_m;
    j["bs_ref"] = {cfg.bs_ref.x, cfg.bs_ref.y, cfg.bs_ref.z};
    j["irs_ref"] = {cfg.irs_ref.x, cfg.irs_ref.y, cfg.irs_ref.z};
    if (!cfg.user_positions.empty()) {
        json arr = json::array();
        for (const auto& p : cfg.user_positions) arr.push_back({p.x, p.y, p.z});
        j["user_positions"] = arr;
    }
    j["reference_loss"] = cfg.reference_loss;
    j["wide_regime"] = cfg.wide_regime == WideRegime::Shared ? "shared" : "orthogonal";
    return j;
}

}  // namespace

ExperimentSpec spec_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentSpec spec;
    if (j.contains("config")) spec.base = config_from_json(j["config"]);
    if (j.contains("sweep")) {
        spec.sweep_param = j["sweep"].at("param").get<std::string>();
        spec.sweep_values = j["sweep"].at("values").get<std::vector<double>>();
    }
    if (j.contains("trials")) spec.trials = j["trials"].get<int>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("strategies")) {
        spec.strategies.clear();
        for (const auto& s : j["strategies"]) {
            const std::string name = s.get<std::string>();
            if (name == "2pce") spec.strategies.push_back(Strategy::TwoPhase);
            else if (name == "3pce") spec.strategies.push_back(Strategy::ThreePhase);
            else throw std::invalid_argument("spec: unknown strategy '" + name + "'");
        }
    }
    if (j.contains("emit_predictions")) spec.emit_predictions = j["emit_predictions"];
    if (j.contains("output")) spec.output_path = j["output"];
    if (j.contains("threads")) spec.threads = j["threads"];
    return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["config"] = config_to_json(spec.base);
    j["sweep"] = {{"param", spec.sweep_param}, {"values", spec.sweep_values}};
    j["trials"] = spec.trials;
    j["seed"] = spec.seed;
    json strat = json::array();
    for (auto s : spec.strategies) strat.push_back(to_string(s));
    j["strategies"] = strat;
    j["emit_predictions"] = spec.emit_predictions;
    if (!spec.output_path.empty()) j["output"] = spec.output_path;
    if (spec.threads > 0) j["threads"] = spec.threads;
    return j.dump(2);
}

}  // namespace irsce
