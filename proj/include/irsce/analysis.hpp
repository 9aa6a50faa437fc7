#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "irsce/channel.hpp"
#include "irsce/estimator.hpp"

namespace irsce {

// Scalar inputs of the closed-form and asymptotic MSE expressions. The
// analysis assumes Rayleigh IRS-side links with the reference-distance
// scalar losses; the expected squared scaling factors are surrogates
// measured on the same trial set (the exact expectation diverges for
// Rayleigh fading).
struct AsymptoticInputs {
    int bs_antennas = 0;   // M
    int irs_elements = 0;  // N
    int users = 0;         // K
    double p_mw = 0.0;
    double sigma2_mw = 0.0;
    double loss_ui1 = 0.0;
    double loss_ib = 0.0;
    Eigen::VectorXd e_scaling_sq;  // per element, user-averaged E|scaling|^2
    int gamma = 0;
    int delta = 0;

    double e_scaling_total() const { return e_scaling_sq.sum(); }
};

AsymptoticInputs make_asymptotic_inputs(const SystemConfig& cfg,
                                        const Eigen::VectorXd& e_scaling_sq);

struct Phase1Mse {
    double direct = 0.0;     // typical user's direct channel
    double reflected = 0.0;  // typical user's reflected channel
};
Phase1Mse mse_phase1_2pce(const AsymptoticInputs& in);

struct Phase2Mse {
    double direct = 0.0;   // per non-typical user (exact)
    double scaling = 0.0;  // per non-typical user (asymptotic in M)
};
Phase2Mse mse_phase2_2pce_simultaneous(const AsymptoticInputs& in);  // M >= N
Phase2Mse mse_phase2_2pce_orthogonal(const AsymptoticInputs& in);    // M < N

// Baseline three-phase MSE expressions. The scaling rows are asymptotic;
// the M < N row needs delta >= 1 and is NaN when M >= N.
struct ThreePhaseMse {
    double direct_total = 0.0;       // summed over all users (exact)
    double reflected_typical = 0.0;  // exact
    double scaling_m_ge_n = 0.0;
    double scaling_m_lt_n = 0.0;
};
ThreePhaseMse mse_3pce_table(const AsymptoticInputs& in);

// Sign predicates of the baseline-minus-two-phase MSE gaps, evaluated on
// the closed-form/asymptotic expressions.
struct StrategyComparison {
    bool dominates = false;           // M >= N: every gap favors two-phase
    bool direct_dominates = false;    // M < N: total-direct gap favors two-phase
    bool direct_condition = false;    // K < gamma + 2, predicts the above
    bool reflected_dominates = false; // M < N: reflected-side gaps favor two-phase
    double direct_gap = 0.0;          // baseline minus two-phase, total direct
    double reflected_typical_gap = 0.0;
    double scaling_gap = 0.0;
};
StrategyComparison compare_strategies(const AsymptoticInputs& in);

// Per-trial squared-error tallies for one strategy.
struct TrialErrors {
    double num_d1 = 0, den_d1 = 0;
    double num_r1 = 0, den_r1 = 0;
    double num_dk = 0, den_dk = 0;
    double num_rk = 0, den_rk = 0;
    double eps_d1 = 0, eps_r1 = 0;
    double eps_dk = 0;        // per-user mean, users 2..K
    double eps_d_total = 0;   // summed over all users
    double eps_scaling = 0;   // per-user mean
    Eigen::VectorXd scaling_sq;  // per element, user-averaged |scaling|^2
};
TrialErrors trial_errors(const ChannelRealization& real, const EstimateSet& est);

struct GroupStat {
    double nmse = 0.0;
    double se = 0.0;  // trial-level jackknife
};
struct MeanStat {
    double mean = 0.0;
    double se = 0.0;
};

struct MseReport {
    std::size_t trials = 0;
    GroupStat d_all, r_all, d1, r1, dk, rk;
    MeanStat eps_d1, eps_r1, eps_dk, eps_d_total, eps_scaling;
    Eigen::VectorXd e_scaling_sq;

    std::string to_json() const;
};

MseReport aggregate_trials(const std::vector<TrialErrors>& trials);
MseReport nmse_report(const std::vector<ChannelRealization>& reals,
                      const std::vector<EstimateSet>& ests);

}  // namespace irsce
