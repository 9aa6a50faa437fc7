#include "irsce/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "irsce/linalg.hpp"

namespace irsce {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::complex<double> unit_phase(double phase) {
    return {std::cos(phase), std::sin(phase)};
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double SystemConfig::tx_power_mw() const { return std::pow(10.0, p_dbm / 10.0); }

double SystemConfig::noise_variance_mw() const {
    return std::pow(10.0, (noise_psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz)) / 10.0);
}

std::vector<Vec3> SystemConfig::resolved_user_positions() const {
    if (!user_positions.empty()) return user_positions;
    std::vector<Vec3> pos(users);
    const Vec3 center{0.0, 48.0, 0.0};
    const double radius = 3.0;
    for (int k = 0; k < users; ++k) {
        const double angle = 2.0 * kPi * k / users;
        pos[k] = {center.x + radius * std::cos(angle), center.y + radius * std::sin(angle),
                  center.z};
    }
    return pos;
}

void SystemConfig::validate() const {
    if (bs_antennas < 1) throw std::invalid_argument("config: bs_antennas must be >= 1");
    if (irs_cols < 1 || irs_rows < 1)
        throw std::invalid_argument("config: IRS grid dimensions must be >= 1");
    if (users < 1) throw std::invalid_argument("config: users must be >= 1");
    if (beta_ub < 0.0 || beta_ui < 0.0 || beta_ib < 0.0)
        throw std::invalid_argument("config: Rician factors must be >= 0");
    for (double r : {r_d, r_r, r_rk}) {
        if (r < 0.0 || r > 1.0)
            throw std::invalid_argument("config: correlation coefficients must be in [0, 1]");
    }
    if (alpha_ub <= 0.0 || alpha_ui <= 0.0 || alpha_ib <= 0.0)
        throw std::invalid_argument("config: path-loss exponents must be > 0");
    if (d0_m <= 0.0 || lambda_m <= 0.0 || bandwidth_hz <= 0.0)
        throw std::invalid_argument("config: d0, lambda and bandwidth must be > 0");
    if (!user_positions.empty() && static_cast<int>(user_positions.size()) != users)
        throw std::invalid_argument("config: user_positions size must equal users");
}

Geometry build_geometry(const SystemConfig& cfg) {
    cfg.validate();
    Geometry geom;
    const double spacing_bs = cfg.lambda_m / 2.0;
    const double spacing_irs = cfg.lambda_m / 8.0;

    geom.bs_antenna_positions.resize(cfg.bs_antennas);
    for (int m = 0; m < cfg.bs_antennas; ++m) {
        geom.bs_antenna_positions[m] = {cfg.bs_ref.x + m * spacing_bs, cfg.bs_ref.y,
                                        cfg.bs_ref.z};
    }
    geom.irs_element_positions.resize(cfg.irs_elements());
    for (int n = 0; n < cfg.irs_elements(); ++n) {
        const int col = n % cfg.irs_cols;  // horizontal index, fast
        const int row = n / cfg.irs_cols;  // vertical index, slow
        geom.irs_element_positions[n] = {cfg.irs_ref.x, cfg.irs_ref.y + col * spacing_irs,
                                         cfg.irs_ref.z + row * spacing_irs};
    }

    const auto users = cfg.resolved_user_positions();
    const double d_irs_bs = distance(cfg.irs_ref, cfg.bs_ref);
    if (d_irs_bs <= 0.0) throw std::invalid_argument("geometry: IRS coincides with BS");

    geom.theta_ub.resize(cfg.users);
    geom.phi_ui.resize(cfg.users);
    geom.psi_ui.resize(cfg.users);
    for (int k = 0; k < cfg.users; ++k) {
        const double d_ub = distance(users[k], cfg.bs_ref);
        const double d_ui = distance(users[k], cfg.irs_ref);
        if (d_ub <= 0.0 || d_ui <= 0.0)
            throw std::invalid_argument("geometry: user coincides with BS or IRS reference");
        geom.theta_ub[k] = std::asin((users[k].x - cfg.bs_ref.x) / d_ub);
        // Direction cosines along the IRS grid axes determine the planar
        // steering phases; recover (phi, psi) from them.
        const double th = (users[k].y - cfg.irs_ref.y) / d_ui;
        const double tv = (users[k].z - cfg.irs_ref.z) / d_ui;
        geom.phi_ui[k] = std::asin(std::min(1.0, std::hypot(th, tv)));
        geom.psi_ui[k] = std::atan2(tv, th);
    }
    geom.theta_ib = std::asin((cfg.irs_ref.x - cfg.bs_ref.x) / d_irs_bs);
    const double th = (cfg.bs_ref.y - cfg.irs_ref.y) / d_irs_bs;
    const double tv = (cfg.bs_ref.z - cfg.irs_ref.z) / d_irs_bs;
    geom.phi_ib = std::asin(std::min(1.0, std::hypot(th, tv)));
    geom.psi_ib = std::atan2(tv, th);
    return geom;
}

double path_loss(double distance_m, double exponent, const SystemConfig& cfg) {
    if (distance_m <= 0.0) throw std::invalid_argument("path_loss: distance must be > 0");
    return std::pow(10.0, cfg.l0_db / 10.0) * std::pow(distance_m / cfg.d0_m, -exponent);
}

Eigen::MatrixXcd exp_corr_matrix(double r, int dim) {
    Eigen::MatrixXcd corr(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            corr(i, j) = std::pow(r, std::abs(j - i));
        }
    }
    return corr;
}

ChannelModel::ChannelModel(const SystemConfig& cfg, const Geometry& geom)
    : m_(cfg.bs_antennas),
      n_(cfg.irs_elements()),
      k_(cfg.users),
      beta_ub_(cfg.beta_ub),
      beta_ui_(cfg.beta_ui),
      beta_ib_(cfg.beta_ib) {
    bs_uncorr_ = cfg.r_d == 0.0;
    irs_uncorr_ = cfg.r_r == 0.0;
    irs_user_uncorr_ = cfg.r_rk == 0.0;
    corr_bs_sqrt_ = linalg::hermitian_sqrt(exp_corr_matrix(cfg.r_d, m_));
    // Grid correlation factors share one coefficient per matrix; with the
    // column-fast element ordering the vertical factor is the slow axis.
    corr_irs_sqrt_ = linalg::hermitian_sqrt(
        linalg::kron(exp_corr_matrix(cfg.r_r, cfg.irs_rows),
                     exp_corr_matrix(cfg.r_r, cfg.irs_cols)));
    corr_irs_user_sqrt_ = linalg::hermitian_sqrt(
        linalg::kron(exp_corr_matrix(cfg.r_rk, cfg.irs_rows),
                     exp_corr_matrix(cfg.r_rk, cfg.irs_cols)));

    const auto users = cfg.resolved_user_positions();
    const double wave = cfg.lambda_m;
    const double spacing_bs = wave / 2.0;
    const double spacing_irs = wave / 8.0;

    loss_ub_ref_.resize(k_);
    loss_ui_ref_.resize(k_);
    loss_ib_ref_ = path_loss(distance(cfg.irs_ref, cfg.bs_ref), cfg.alpha_ib, cfg);

    loss_ub_.resize(k_);
    loss_ui_.resize(k_);
    loss_ib_.resize(m_, n_);
    for (int k = 0; k < k_; ++k) {
        loss_ub_ref_[k] = path_loss(distance(users[k], cfg.bs_ref), cfg.alpha_ub, cfg);
        loss_ui_ref_[k] = path_loss(distance(users[k], cfg.irs_ref), cfg.alpha_ui, cfg);
        loss_ub_[k].resize(m_);
        loss_ui_[k].resize(n_);
        for (int m = 0; m < m_; ++m) {
            loss_ub_[k](m) =
                cfg.reference_loss
                    ? loss_ub_ref_[k]
                    : path_loss(distance(users[k], geom.bs_antenna_positions[m]), cfg.alpha_ub,
                                cfg);
        }
        for (int n = 0; n < n_; ++n) {
            loss_ui_[k](n) =
                cfg.reference_loss
                    ? loss_ui_ref_[k]
                    : path_loss(distance(users[k], geom.irs_element_positions[n]), cfg.alpha_ui,
                                cfg);
        }
    }
    for (int m = 0; m < m_; ++m) {
        for (int n = 0; n < n_; ++n) {
            loss_ib_(m, n) = cfg.reference_loss
                                 ? loss_ib_ref_
                                 : path_loss(distance(geom.bs_antenna_positions[m],
                                                      geom.irs_element_positions[n]),
                                             cfg.alpha_ib, cfg);
        }
    }

    // LoS steering entries: phase-only array factors scaled by the square
    // root of the per-pair path loss.
    los_direct_.resize(k_);
    los_user_irs_.resize(k_);
    const auto planar_phase = [&](int n, double phi, double psi) {
        const int col = n % cfg.irs_cols;
        const int row = n / cfg.irs_cols;
        return 2.0 * kPi * spacing_irs *
               (col * std::sin(phi) * std::cos(psi) + row * std::sin(phi) * std::sin(psi)) /
               wave;
    };
    for (int k = 0; k < k_; ++k) {
        los_direct_[k].resize(m_);
        for (int m = 0; m < m_; ++m) {
            const double phase = 2.0 * kPi * m * spacing_bs * std::sin(geom.theta_ub[k]) / wave;
            los_direct_[k](m) = std::sqrt(loss_ub_[k](m)) * unit_phase(phase);
        }
        los_user_irs_[k].resize(n_);
        for (int n = 0; n < n_; ++n) {
            los_user_irs_[k](n) = std::sqrt(loss_ui_[k](n)) *
                                  unit_phase(planar_phase(n, geom.phi_ui[k], geom.psi_ui[k]));
        }
    }
    los_irs_bs_.resize(m_, n_);
    for (int m = 0; m < m_; ++m) {
        const double bs_phase = 2.0 * kPi * m * spacing_bs * std::sin(geom.theta_ib) / wave;
        for (int n = 0; n < n_; ++n) {
            los_irs_bs_(m, n) = std::sqrt(loss_ib_(m, n)) * unit_phase(bs_phase) *
                                unit_phase(planar_phase(n, geom.phi_ib, geom.psi_ib));
        }
    }
}

void ChannelModel::sample_raw(RngStream& rng, ChannelRealization& out) const {
    const double w_los_ub = std::sqrt(beta_ub_ / (1.0 + beta_ub_));
    const double w_nlos_ub = std::sqrt(1.0 / (1.0 + beta_ub_));
    const double w_los_ui = std::sqrt(beta_ui_ / (1.0 + beta_ui_));
    const double w_nlos_ui = std::sqrt(1.0 / (1.0 + beta_ui_));
    const double w_los_ib = std::sqrt(beta_ib_ / (1.0 + beta_ib_));
    const double w_nlos_ib = std::sqrt(1.0 / (1.0 + beta_ib_));
    const bool bs_uncorr = bs_uncorr_;
    const bool irs_uncorr = irs_uncorr_;
    const bool irs_user_uncorr = irs_user_uncorr_;

    out.direct.resize(k_);
    out.user_irs.resize(k_);
    for (int k = 0; k < k_; ++k) {
        Eigen::VectorXcd z(m_);
        for (int m = 0; m < m_; ++m) z(m) = rng.cgaussian(loss_ub_[k](m));
        if (!bs_uncorr) z = corr_bs_sqrt_ * z;
        out.direct[k] = w_los_ub * los_direct_[k] + w_nlos_ub * z;

        Eigen::VectorXcd zr(n_);
        for (int n = 0; n < n_; ++n) zr(n) = rng.cgaussian(loss_ui_[k](n));
        if (!irs_user_uncorr) zr = corr_irs_user_sqrt_ * zr;
        out.user_irs[k] = w_los_ui * los_user_irs_[k] + w_nlos_ui * zr;
    }
    Eigen::MatrixXcd f(m_, n_);
    for (int m = 0; m < m_; ++m) {
        for (int n = 0; n < n_; ++n) f(m, n) = rng.cgaussian(loss_ib_(m, n));
    }
    if (!bs_uncorr) f = corr_bs_sqrt_ * f;
    if (!irs_uncorr) f = f * corr_irs_sqrt_;
    out.irs_bs = w_los_ib * los_irs_bs_ + w_nlos_ib * f;
}

ChannelRealization ChannelModel::sample(RngStream& rng) const {
    ChannelRealization out;
    sample_raw(rng, out);
    // Scaling factors are undefined when the typical user's IRS channel has
    // a (measure-zero) vanishing entry; resample once, then give up.
    const auto degenerate = [&]() {
        return out.user_irs[0].cwiseAbs().minCoeff() < 1e-12;
    };
    if (degenerate()) {
        sample_raw(rng, out);
        if (degenerate()) {
            throw std::runtime_error(
                "sample_realization: typical user's IRS channel entry below 1e-12 twice");
        }
    }

    out.reflected.resize(k_);
    for (int k = 0; k < k_; ++k) {
        out.reflected[k] = out.irs_bs * out.user_irs[k].asDiagonal();
    }
    out.scaling.resize(k_ > 0 ? k_ - 1 : 0);
    for (int k = 1; k < k_; ++k) {
        out.scaling[k - 1] = out.user_irs[k].cwiseQuotient(out.user_irs[0]);
    }
    return out;
}

}  // namespace irsce
