#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "irsce/channel.hpp"
#include "irsce/schedule.hpp"

namespace irsce {

struct ReceivedBlock {
    Eigen::MatrixXcd y;            // M x tau, one column per slot
    double noise_variance = 0.0;   // linear, same power units as p
};

// y_i = sqrt(p) * sum_k a_{k,i} (h_dk + H_k theta_i) + n_i with fresh noise
// per slot.
ReceivedBlock simulate_rx(const ChannelRealization& real, const TrainingSchedule& sched,
                          double p_mw, double sigma2_mw, RngStream& rng);

struct EstimateSet {
    std::vector<Eigen::VectorXcd> direct;     // K vectors, length M
    Eigen::MatrixXcd reflected_typical;       // M x N
    std::vector<Eigen::VectorXcd> scaling;    // users 2..K, length N
    std::vector<Eigen::MatrixXcd> reflected;  // K matrices; k >= 2 rebuilt from scaling
};

// First-phase decorrelation: [h_d1, H_1] estimate = Y * V^H / (sqrt(p)(N+1)).
std::pair<Eigen::VectorXcd, Eigen::MatrixXcd> phase1_estimate(const Eigen::MatrixXcd& y1,
                                                              const Eigen::MatrixXcd& v1,
                                                              double p_mw);

struct Phase2Estimates {
    std::vector<Eigen::VectorXcd> scaling;  // index 0 corresponds to user 2
    std::vector<Eigen::VectorXcd> direct;
};

// Second-phase solvers; y2 holds only the second-phase columns.
Phase2Estimates phase2_estimate_simultaneous(const Eigen::MatrixXcd& y2,
                                             const Eigen::MatrixXcd& h1_hat,
                                             const TrainingSchedule& sched, double p_mw);
Phase2Estimates phase2_estimate_shared(const Eigen::MatrixXcd& y2,
                                       const Eigen::MatrixXcd& h1_hat,
                                       const TrainingSchedule& sched, double p_mw);
Phase2Estimates phase2_estimate_orthogonal(const Eigen::MatrixXcd& y2,
                                           const Eigen::MatrixXcd& h1_hat,
                                           const TrainingSchedule& sched, double p_mw);

// Full pipelines: simulate the training block and run the estimators.
EstimateSet run_2pce(const ChannelRealization& real, const TrainingSchedule& sched,
                     double p_mw, double sigma2_mw, RngStream& noise_rng);
EstimateSet run_2pce(const ChannelRealization& real, const SystemConfig& cfg,
                     RngStream& noise_rng);
EstimateSet run_3pce(const ChannelRealization& real, const TrainingSchedule& sched,
                     double p_mw, double sigma2_mw, RngStream& noise_rng);
EstimateSet run_3pce(const ChannelRealization& real, const SystemConfig& cfg,
                     RngStream& noise_rng);

}  // namespace irsce
