#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irsce/analysis.hpp"
#include "irsce/channel.hpp"
#include "irsce/schedule.hpp"

namespace irsce {

struct Predictions {
    double eps_d1 = 0.0;
    double eps_r1 = 0.0;
    double eps_dk = 0.0;
    double eps_scaling = 0.0;
    double eps_d_total = 0.0;
};

struct ExperimentSpec {
    SystemConfig base;
    std::string sweep_param = "p_dbm";
    std::vector<double> sweep_values;
    int trials = 500;
    std::uint64_t seed = 42;
    std::vector<Strategy> strategies = {Strategy::TwoPhase, Strategy::ThreePhase};
    std::string output_path;
    bool emit_predictions = true;
    int threads = 0;  // 0 selects hardware concurrency

    void validate() const;
};

struct ResultRow {
    double sweep_value = 0.0;
    Strategy strategy = Strategy::TwoPhase;
    MseReport report;
    std::optional<Predictions> predictions;
    int excluded_trials = 0;
    double wall_time_s = 0.0;
};

// Applies one sweep parameter to a config copy; throws on unknown names.
void apply_sweep(SystemConfig& cfg, const std::string& param, double value);

// Runs the Monte Carlo sweep. Per-trial streams are keyed by
// (seed, sweep index, trial index); both strategies see the same channel
// realization and independent noise substreams. Trials run concurrently
// and are reduced in trial order, so output is deterministic for a given
// spec and seed regardless of the worker count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
void emit_json(const std::vector<ResultRow>& rows, const std::string& path);
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string rows_to_json(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_json(const std::string& text);

// Paper-figure sweeps. Figures with two panels are split into "a"/"b"
// presets (fig4a, fig4b, fig7a, fig7b).
ExperimentSpec figure_preset(const std::string& name);
std::vector<std::string> preset_names();

ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

}  // namespace irsce
