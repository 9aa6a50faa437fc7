#include "irsce/estimator.hpp"

#include <stdexcept>

#include "irsce/linalg.hpp"

namespace irsce {

namespace {

// Stacks [h1_hat * diag(pattern_col), I_M] rows for the given slots.
Eigen::MatrixXcd stack_design(const Eigen::MatrixXcd& h1_hat,
                              const Eigen::MatrixXcd& patterns,
                              const std::vector<int>& slots) {
    const Eigen::Index m = h1_hat.rows(), n = h1_hat.cols();
    Eigen::MatrixXcd q(m * static_cast<Eigen::Index>(slots.size()), n + m);
    for (std::size_t j = 0; j < slots.size(); ++j) {
        q.block(j * m, 0, m, n) = h1_hat * patterns.col(slots[j]).asDiagonal();
        q.block(j * m, n, m, m) = Eigen::MatrixXcd::Identity(m, m);
    }
    return q;
}

int second_phase_start(const TrainingSchedule& sched) {
    return sched.phase_boundaries.empty() ? 0 : sched.phase_boundaries.front();
}

}  // namespace

ReceivedBlock simulate_rx(const ChannelRealization& real, const TrainingSchedule& sched,
                          double p_mw, double sigma2_mw, RngStream& rng) {
    const Eigen::Index m = real.irs_bs.rows();
    const int users = sched.users;
    const int tau = sched.slots();
    if (static_cast<int>(real.direct.size()) != users ||
        real.irs_bs.cols() != sched.patterns.rows()) {
        throw std::invalid_argument("simulate_rx: realization and schedule dims differ");
    }
    ReceivedBlock block;
    block.noise_variance = sigma2_mw;
    block.y.resize(m, tau);
    const double amp = std::sqrt(p_mw);
    for (int i = 0; i < tau; ++i) {
        Eigen::VectorXcd direct_sum = Eigen::VectorXcd::Zero(m);
        Eigen::VectorXcd gated = Eigen::VectorXcd::Zero(real.irs_bs.cols());
        for (int k = 0; k < users; ++k) {
            const std::complex<double> a = sched.pilots(k, i);
            if (a == std::complex<double>(0.0, 0.0)) continue;
            direct_sum += a * real.direct[k];
            gated += a * real.user_irs[k].cwiseProduct(sched.patterns.col(i));
        }
        Eigen::VectorXcd noise(m);
        for (Eigen::Index r = 0; r < m; ++r) noise(r) = rng.cgaussian(sigma2_mw);
        block.y.col(i) = amp * (direct_sum + real.irs_bs * gated) + noise;
    }
    return block;
}

std::pair<Eigen::VectorXcd, Eigen::MatrixXcd> phase1_estimate(const Eigen::MatrixXcd& y1,
                                                              const Eigen::MatrixXcd& v1,
                                                              double p_mw) {
    const Eigen::Index n1 = v1.rows();
    const Eigen::MatrixXcd composite = y1 * v1.adjoint() / (std::sqrt(p_mw) * n1);
    return {composite.col(0), composite.rightCols(n1 - 1)};
}

Phase2Estimates phase2_estimate_simultaneous(const Eigen::MatrixXcd& y2,
                                             const Eigen::MatrixXcd& h1_hat,
                                             const TrainingSchedule& sched, double p_mw) {
    const int users = sched.users;
    const Eigen::Index m = h1_hat.rows(), n = h1_hat.cols();
    const int half = users - 1;
    const int start = second_phase_start(sched);
    const double cond_h1 = linalg::cond(h1_hat);
    if (!(cond_h1 < 1e10)) {
        throw std::runtime_error("phase2_estimate_simultaneous: typical reflected estimate "
                                 "rank-deficient (condition number " +
                                 std::to_string(cond_h1) + ")");
    }

    Eigen::MatrixXcd v(2 * m, n + m);
    v.topLeftCorner(m, n) = h1_hat;
    v.bottomLeftCorner(m, n) = -h1_hat;
    v.topRightCorner(m, m) = Eigen::MatrixXcd::Identity(m, m);
    v.bottomRightCorner(m, m) = Eigen::MatrixXcd::Identity(m, m);

    // Decorrelate per user, then solve the two-row system once per user.
    Eigen::MatrixXcd rhs(2 * m, half);
    for (int u = 0; u < half; ++u) {
        Eigen::VectorXcd z1 = Eigen::VectorXcd::Zero(m);
        Eigen::VectorXcd z2 = Eigen::VectorXcd::Zero(m);
        for (int i = 0; i < half; ++i) {
            z1 += std::conj(sched.pilots(u + 1, start + i)) * y2.col(i);
            z2 += std::conj(sched.pilots(u + 1, start + half + i)) * y2.col(half + i);
        }
        rhs.col(u) << z1, z2;
    }
    const Eigen::MatrixXcd solved =
        linalg::solve_full_col_rank(v, rhs, "phase2_estimate_simultaneous: design matrix") /
        (std::sqrt(p_mw) * half);

    Phase2Estimates out;
    out.scaling.resize(half);
    out.direct.resize(half);
    for (int u = 0; u < half; ++u) {
        out.scaling[u] = solved.col(u).head(n);
        out.direct[u] = solved.col(u).tail(m);
    }
    return out;
}

Phase2Estimates phase2_estimate_shared(const Eigen::MatrixXcd& y2,
                                       const Eigen::MatrixXcd& h1_hat,
                                       const TrainingSchedule& sched, double p_mw) {
    const int users = sched.users;
    const Eigen::Index m = h1_hat.rows(), n = h1_hat.cols();
    const IndexSets sets = make_index_sets(static_cast<int>(m), static_cast<int>(n), users);
    const int gamma = sets.gamma;
    const int half = users - 1;
    const int start = second_phase_start(sched);
    const double amp = std::sqrt(p_mw);

    Phase2Estimates out;
    out.scaling.assign(half, Eigen::VectorXcd::Zero(n));
    out.direct.resize(half);

    // Window solves: per user, chi_a scaling factors and the direct channel.
    for (int u = 0; u < half; ++u) {
        const auto& chi_a = sets.chi_a[u];
        const Eigen::Index na = static_cast<Eigen::Index>(chi_a.size());
        Eigen::MatrixXcd h1_sub(m, na);
        for (Eigen::Index j = 0; j < na; ++j) h1_sub.col(j) = h1_hat.col(chi_a[j]);

        Eigen::MatrixXcd design(gamma * m, na + m);
        Eigen::VectorXcd stacked(gamma * m);
        for (int o = 0; o < gamma; ++o) {
            const int local = u * gamma + o;
            Eigen::VectorXcd gated(na);
            for (Eigen::Index j = 0; j < na; ++j) {
                gated(j) = sched.patterns(chi_a[j], start + local);
            }
            design.block(o * m, 0, m, na) = h1_sub * gated.asDiagonal();
            design.block(o * m, na, m, m) = Eigen::MatrixXcd::Identity(m, m);
            stacked.segment(o * m, m) = y2.col(local);
        }
        const Eigen::VectorXcd solved =
            linalg::solve_full_col_rank(design, stacked,
                                        "phase2_estimate_shared: window design matrix") /
            amp;
        for (Eigen::Index j = 0; j < na; ++j) out.scaling[u](chi_a[j]) = solved(j);
        out.direct[u] = solved.tail(m);
    }

    // Shared slots: subtract everything already known, then solve the slot's
    // position-paired factors from the matching reflected columns.
    std::vector<std::vector<char>> in_chi_a(half, std::vector<char>(n, 0));
    for (int u = 0; u < half; ++u) {
        for (int elem : sets.chi_a[u]) in_chi_a[u][elem] = 1;
    }
    for (int local = half * gamma; local < sched.slots() - start; ++local) {
        const auto& pairs = sched.slot_pairs[start + local];
        if (pairs.empty()) continue;
        const int count = static_cast<int>(pairs.users.size());
        Eigen::VectorXcd residual = y2.col(local) / amp;
        std::vector<char> seen_user(users, 0);
        for (int j = 0; j < count; ++j) {
            const int user = pairs.users[j];
            if (seen_user[user]) continue;
            seen_user[user] = 1;
            residual -= out.direct[user - 1];
            for (int elem = 0; elem < n; ++elem) {
                const std::complex<double> coeff = sched.patterns(elem, start + local);
                if (coeff != std::complex<double>(0.0, 0.0) && in_chi_a[user - 1][elem]) {
                    residual -= coeff * out.scaling[user - 1](elem) * h1_hat.col(elem);
                }
            }
        }
        Eigen::MatrixXcd columns(m, count);
        for (int j = 0; j < count; ++j) {
            columns.col(j) =
                sched.patterns(pairs.elements[j], start + local) * h1_hat.col(pairs.elements[j]);
        }
        const Eigen::VectorXcd solved = linalg::solve_full_col_rank(
            columns, residual, "phase2_estimate_shared: slot-sharing system");
        for (int j = 0; j < count; ++j) {
            out.scaling[pairs.users[j] - 1](pairs.elements[j]) = solved(j);
        }
    }
    return out;
}

Phase2Estimates phase2_estimate_orthogonal(const Eigen::MatrixXcd& y2,
                                           const Eigen::MatrixXcd& h1_hat,
                                           const TrainingSchedule& sched, double p_mw) {
    const int users = sched.users;
    const Eigen::Index m = h1_hat.rows(), n = h1_hat.cols();
    const int gamma = regime_gamma(static_cast<int>(m), static_cast<int>(n));
    const int half = users - 1;
    const int start = second_phase_start(sched);

    // Every user's window uses the same pattern shape, so one design matrix
    // serves all of them.
    std::vector<int> window(gamma + 1);
    for (int o = 0; o <= gamma; ++o) window[o] = start + o;
    const Eigen::MatrixXcd design = stack_design(h1_hat, sched.patterns, window);

    Eigen::MatrixXcd rhs((gamma + 1) * m, half);
    for (int u = 0; u < half; ++u) {
        for (int o = 0; o <= gamma; ++o) {
            rhs.block(o * m, u, m, 1) = y2.col(u * (gamma + 1) + o);
        }
    }
    const Eigen::MatrixXcd solved =
        linalg::solve_full_col_rank(design, rhs,
                                    "phase2_estimate_orthogonal: design matrix") /
        std::sqrt(p_mw);

    Phase2Estimates out;
    out.scaling.resize(half);
    out.direct.resize(half);
    for (int u = 0; u < half; ++u) {
        out.scaling[u] = solved.col(u).head(n);
        out.direct[u] = solved.col(u).tail(m);
    }
    return out;
}

EstimateSet run_2pce(const ChannelRealization& real, const TrainingSchedule& sched,
                     double p_mw, double sigma2_mw, RngStream& noise_rng) {
    const ReceivedBlock block = simulate_rx(real, sched, p_mw, sigma2_mw, noise_rng);
    const int users = sched.users;
    const int n = sched.elements;
    const int tau1 = n + 1;

    EstimateSet est;
    est.direct.resize(users);
    const Eigen::MatrixXcd v1 = phase1_reflection(n);
    auto [hd1, h1] = phase1_estimate(block.y.leftCols(tau1), v1, p_mw);
    est.direct[0] = hd1;
    est.reflected_typical = h1;

    if (users >= 2) {
        const Eigen::MatrixXcd y2 = block.y.rightCols(sched.slots() - tau1);
        Phase2Estimates second;
        switch (sched.regime) {
            case Regime::Simultaneous:
                second = phase2_estimate_simultaneous(y2, h1, sched, p_mw);
                break;
            case Regime::SharedSlots:
                second = phase2_estimate_shared(y2, h1, sched, p_mw);
                break;
            case Regime::OrthogonalSlots:
                second = phase2_estimate_orthogonal(y2, h1, sched, p_mw);
                break;
        }
        est.scaling = std::move(second.scaling);
        for (int u = 0; u < users - 1; ++u) est.direct[u + 1] = second.direct[u];
    }

    est.reflected.resize(users);
    est.reflected[0] = est.reflected_typical;
    for (int k = 1; k < users; ++k) {
        est.reflected[k] = est.reflected_typical * est.scaling[k - 1].asDiagonal();
    }
    return est;
}

EstimateSet run_2pce(const ChannelRealization& real, const SystemConfig& cfg,
                     RngStream& noise_rng) {
    const TrainingSchedule sched =
        build_2pce(cfg.bs_antennas, cfg.irs_elements(), cfg.users, cfg.wide_regime);
    return run_2pce(real, sched, cfg.tx_power_mw(), cfg.noise_variance_mw(), noise_rng);
}

EstimateSet run_3pce(const ChannelRealization& real, const TrainingSchedule& sched,
                     double p_mw, double sigma2_mw, RngStream& noise_rng) {
    const ReceivedBlock block = simulate_rx(real, sched, p_mw, sigma2_mw, noise_rng);
    const int users = sched.users;
    const int n = sched.elements;
    const Eigen::Index m = block.y.rows();
    const double amp = std::sqrt(p_mw);

    EstimateSet est;
    est.direct.resize(users);

    // Direct channels by pilot decorrelation.
    for (int k = 0; k < users; ++k) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(m);
        for (int i = 0; i < users; ++i) {
            acc += std::conj(sched.pilots(k, i)) * block.y.col(i);
        }
        est.direct[k] = acc / (amp * users);
    }

    // Typical user's reflected channel from the DFT-pattern block.
    const Eigen::MatrixXcd y2 = block.y.middleCols(users, n);
    const Eigen::MatrixXcd theta = sched.patterns.middleCols(users, n);
    est.reflected_typical =
        (y2 - amp * est.direct[0] * Eigen::RowVectorXcd::Ones(n)) * theta.adjoint() /
        (amp * n);

    if (users >= 2) {
        est.scaling.resize(users - 1);
        const int start3 = users + n;
        if (m >= n) {
            Eigen::MatrixXcd residuals(m, users - 1);
            for (int u = 0; u + 1 < users; ++u) {
                residuals.col(u) = block.y.col(start3 + u) / amp - est.direct[u + 1];
            }
            const Eigen::MatrixXcd solved = linalg::solve_full_col_rank(
                est.reflected_typical, residuals, "run_3pce: typical reflected estimate");
            for (int u = 0; u + 1 < users; ++u) est.scaling[u] = solved.col(u);
        } else {
            // All remaining scaling factors share the slot budget; solve the
            // stacked system over every shared slot at once.
            const int slots3 = sched.slots() - start3;
            const Eigen::Index unknowns = static_cast<Eigen::Index>(users - 1) * n;
            Eigen::MatrixXcd design = Eigen::MatrixXcd::Zero(slots3 * m, unknowns);
            Eigen::VectorXcd rhs(slots3 * m);
            for (int j = 0; j < slots3; ++j) {
                const auto& pairs = sched.slot_pairs[start3 + j];
                Eigen::VectorXcd residual = block.y.col(start3 + j) / amp;
                std::vector<char> seen_user(users, 0);
                for (std::size_t idx = 0; idx < pairs.users.size(); ++idx) {
                    const int user = pairs.users[idx];
                    if (!seen_user[user]) {
                        seen_user[user] = 1;
                        residual -= est.direct[user];
                    }
                }
                for (int user = 1; user < users; ++user) {
                    if (!seen_user[user]) continue;
                    for (int elem = 0; elem < n; ++elem) {
                        const std::complex<double> coeff = sched.patterns(elem, start3 + j);
                        if (coeff != std::complex<double>(0.0, 0.0)) {
                            design.block(j * m, (user - 1) * n + elem, m, 1) =
                                coeff * est.reflected_typical.col(elem);
                        }
                    }
                }
                rhs.segment(j * m, m) = residual;
            }
            const Eigen::VectorXcd solved = linalg::solve_full_col_rank(
                design, rhs, "run_3pce: slot-sharing system");
            for (int u = 0; u + 1 < users; ++u) {
                est.scaling[u] = solved.segment(static_cast<Eigen::Index>(u) * n, n);
            }
        }
    }

    est.reflected.resize(users);
    est.reflected[0] = est.reflected_typical;
    for (int k = 1; k < users; ++k) {
        est.reflected[k] = est.reflected_typical * est.scaling[k - 1].asDiagonal();
    }
    return est;
}

EstimateSet run_3pce(const ChannelRealization& real, const SystemConfig& cfg,
                     RngStream& noise_rng) {
    const TrainingSchedule sched = build_3pce(cfg.bs_antennas, cfg.irs_elements(), cfg.users);
    return run_3pce(real, sched, cfg.tx_power_mw(), cfg.noise_variance_mw(), noise_rng);
}

}  // namespace irsce
