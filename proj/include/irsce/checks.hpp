#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace irsce::checks {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

bool all_pass(const std::vector<CheckResult>& results);

// Block-matrix identities, trace identities and the sample-Gram
// concentration trend.
std::vector<CheckResult> lemma_suite(std::uint64_t seed, int instances);

// Exact noiseless recovery for both strategies across the three regimes.
std::vector<CheckResult> noiseless_suite(std::uint64_t seed, int instances);

// Monte Carlo MSEs against the exact closed forms at the two reference
// dimension tuples (Rayleigh channels, reference-distance losses).
std::vector<CheckResult> mse_suite(std::uint64_t seed, int trials);

// Large-array trend of the asymptotic scaling-factor MSE.
std::vector<CheckResult> asymptotic_suite(std::uint64_t seed, int trials);

// Slot counts of generated schedules against the overhead formulas.
std::vector<CheckResult> overhead_suite(std::uint64_t seed, int grid_size);

// Formula-level comparison predicates over dimension grids.
std::vector<CheckResult> dominance_suite(std::uint64_t seed, int grid_size);

// Per-user decorrelated solve against the stacked pseudo-inverse solution.
std::vector<CheckResult> decomposition_suite(std::uint64_t seed, int instances);

}  // namespace irsce::checks
