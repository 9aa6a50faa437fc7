#pragma once

#include <Eigen/Dense>
#include <vector>

#include "irsce/rng.hpp"

namespace irsce {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// Regime choice for the second training phase when the IRS has more elements
// than the BS has antennas: minimal-overhead slot sharing, or one user per
// slot window (the variant the noisy analysis assumes).
enum class WideRegime { Shared, Orthogonal };

struct SystemConfig {
    int bs_antennas = 40;  // M
    int irs_cols = 4;      // N_y (horizontal grid dimension)
    int irs_rows = 8;      // N_z (vertical grid dimension)
    int users = 4;         // K

    double p_dbm = 16.0;
    double noise_psd_dbm_per_hz = -169.0;
    double bandwidth_hz = 1e6;

    // Rician factors (linear) for user-BS, user-IRS and IRS-BS links.
    double beta_ub = 0.0;
    double beta_ui = 0.0;
    double beta_ib = 1.9952623149688795;  // 3 dB

    // Path-loss exponents.
    double alpha_ub = 5.0;
    double alpha_ui = 2.2;
    double alpha_ib = 2.2;

    // Exponential correlation coefficients in [0, 1].
    double r_d = 0.0;   // BS receive side
    double r_r = 0.0;   // IRS side of the IRS-BS link
    double r_rk = 0.0;  // IRS side of the user-IRS links

    double l0_db = -30.0;  // reference path loss
    double d0_m = 1.0;     // reference distance
    double lambda_m = 0.1; // carrier wavelength

    Vec3 bs_ref{2.0, 0.0, 0.0};
    Vec3 irs_ref{0.0, 45.0, 2.0};
    // Empty selects the default placement: users uniformly spaced on a
    // 3 m circle around (0, 48, 0).
    std::vector<Vec3> user_positions;

    // Collapse per-pair path losses to reference-point distances (the mode
    // the closed-form comparisons run in).
    bool reference_loss = false;

    WideRegime wide_regime = WideRegime::Shared;

    int irs_elements() const { return irs_cols * irs_rows; }
    double tx_power_mw() const;
    double noise_variance_mw() const;
    std::vector<Vec3> resolved_user_positions() const;

    void validate() const;  // throws std::invalid_argument on bad fields
};

struct Geometry {
    std::vector<Vec3> bs_antenna_positions;   // M, ULA along x
    std::vector<Vec3> irs_element_positions;  // N, UPA in the y-z plane
    // Reference-point angles (radians).
    std::vector<double> theta_ub;             // per-user AoA at the BS
    double theta_ib = 0.0;                    // IRS -> BS AoA at the BS
    std::vector<double> phi_ui, psi_ui;       // per-user elevation/azimuth at the IRS
    double phi_ib = 0.0, psi_ib = 0.0;        // elevation/azimuth of departure toward the BS
};

Geometry build_geometry(const SystemConfig& cfg);

// l0 * (d/d0)^(-alpha), linear scale. d <= 0 throws.
double path_loss(double distance_m, double exponent, const SystemConfig& cfg);

// Exponential correlation: entry (i, j) = r^(j-i) for i <= j, conjugate fill.
Eigen::MatrixXcd exp_corr_matrix(double r, int dim);

struct ChannelRealization {
    std::vector<Eigen::VectorXcd> direct;     // K vectors, length M
    std::vector<Eigen::VectorXcd> user_irs;   // K vectors, length N
    Eigen::MatrixXcd irs_bs;                  // M x N
    std::vector<Eigen::MatrixXcd> reflected;  // K matrices, M x N
    std::vector<Eigen::VectorXcd> scaling;    // users 2..K, length N
};

// Precomputes correlation square roots, LoS components and per-pair path
// losses for a config; sample() is then a pure function of the stream.
class ChannelModel {
public:
    ChannelModel(const SystemConfig& cfg, const Geometry& geom);

    ChannelRealization sample(RngStream& rng) const;

    // Reference-distance scalar losses used by the closed-form analysis.
    double loss_ub_ref(int user) const { return loss_ub_ref_[user]; }
    double loss_ui_ref(int user) const { return loss_ui_ref_[user]; }
    double loss_ib_ref() const { return loss_ib_ref_; }

private:
    void sample_raw(RngStream& rng, ChannelRealization& out) const;

    int m_, n_, k_;
    double beta_ub_, beta_ui_, beta_ib_;
    bool bs_uncorr_ = true, irs_uncorr_ = true, irs_user_uncorr_ = true;
    Eigen::MatrixXcd corr_bs_sqrt_;        // M x M
    Eigen::MatrixXcd corr_irs_sqrt_;       // N x N, IRS-BS link
    Eigen::MatrixXcd corr_irs_user_sqrt_;  // N x N, user-IRS links
    std::vector<Eigen::VectorXcd> los_direct_;    // per user
    std::vector<Eigen::VectorXcd> los_user_irs_;  // per user
    Eigen::MatrixXcd los_irs_bs_;
    std::vector<Eigen::VectorXd> loss_ub_;   // per user, per antenna
    std::vector<Eigen::VectorXd> loss_ui_;   // per user, per element
    Eigen::MatrixXd loss_ib_;                // per antenna x element
    std::vector<double> loss_ub_ref_, loss_ui_ref_;
    double loss_ib_ref_ = 0.0;
};

}  // namespace irsce
