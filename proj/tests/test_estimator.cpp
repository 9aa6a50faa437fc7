#include <doctest.h>

#include <cmath>

#include "irsce/analysis.hpp"
#include "irsce/estimator.hpp"
#include "irsce/linalg.hpp"

using irsce::ChannelModel;
using irsce::ChannelRealization;
using irsce::EstimateSet;
using irsce::RngStream;
using irsce::Strategy;
using irsce::SystemConfig;
using irsce::TrainingSchedule;

namespace {

SystemConfig test_config(int m, int n_cols, int n_rows, int k) {
    SystemConfig cfg;
    cfg.bs_antennas = m;
    cfg.irs_cols = n_cols;
    cfg.irs_rows = n_rows;
    cfg.users = k;
    return cfg;
}

double relative_error(const EstimateSet& est, const ChannelRealization& real) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < real.direct.size(); ++k) {
        num += (est.direct[k] - real.direct[k]).squaredNorm();
        den += real.direct[k].squaredNorm();
        num += (est.reflected[k] - real.reflected[k]).squaredNorm();
        den += real.reflected[k].squaredNorm();
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("simulate_rx basics") {
    const SystemConfig cfg = test_config(3, 2, 2, 2);
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(41);
    const ChannelRealization real = model.sample(ch_rng);

    // all pilots zero and no noise -> all-zero received block
    TrainingSchedule silent = irsce::build_2pce(3, 4, 2);
    silent.pilots.setZero();
    RngStream rng1(42);
    const auto rx0 = irsce::simulate_rx(real, silent, 2.0, 0.0, rng1);
    CHECK(rx0.y.cwiseAbs().maxCoeff() == 0.0);

    // single user, no reflection, no noise -> every column is sqrt(p) h_d1
    TrainingSchedule direct_only = silent;
    direct_only.pilots.row(0).setOnes();
    direct_only.patterns.setZero();
    RngStream rng2(43);
    const auto rx1 = irsce::simulate_rx(real, direct_only, 4.0, 0.0, rng2);
    for (int i = 0; i < rx1.y.cols(); ++i) {
        CHECK((rx1.y.col(i) - 2.0 * real.direct[0]).norm() < 1e-12);
    }
}

TEST_CASE("simulate_rx noise has the configured variance") {
    const SystemConfig cfg = test_config(8, 4, 4, 2);
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(44);
    const ChannelRealization real = model.sample(ch_rng);
    const TrainingSchedule sched = irsce::build_2pce(8, 16, 2);

    const double sigma2 = 0.37;
    RngStream quiet(45);
    const auto clean = irsce::simulate_rx(real, sched, 1.0, 0.0, quiet);
    double acc = 0.0;
    int count = 0;
    const int reps = 100000 / (sched.slots() * 8) + 1;
    RngStream noisy_rng(46);
    for (int rep = 0; rep < reps; ++rep) {
        const auto noisy = irsce::simulate_rx(real, sched, 1.0, sigma2, noisy_rng);
        acc += (noisy.y - clean.y).cwiseAbs2().sum();
        count += static_cast<int>(noisy.y.size());
    }
    CHECK(acc / count == doctest::Approx(sigma2).epsilon(0.03));
}

TEST_CASE("phase 1 recovers the composite channel exactly without noise") {
    const SystemConfig cfg = test_config(5, 2, 2, 1);
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(47);
    const ChannelRealization real = model.sample(ch_rng);
    const TrainingSchedule sched = irsce::build_2pce(5, 4, 1);
    RngStream rng(48);
    const auto rx = irsce::simulate_rx(real, sched, 2.5, 0.0, rng);
    const auto [hd1, h1] =
        irsce::phase1_estimate(rx.y, irsce::phase1_reflection(4), 2.5);
    CHECK((hd1 - real.direct[0]).norm() < 1e-10 * real.direct[0].norm());
    CHECK((h1 - real.reflected[0]).norm() < 1e-10 * real.reflected[0].norm());

    const auto [zero_d, zero_h] = irsce::phase1_estimate(
        Eigen::MatrixXcd::Zero(5, 5), irsce::phase1_reflection(4), 2.5);
    CHECK(zero_d.norm() == 0.0);
    CHECK(zero_h.norm() == 0.0);
}

TEST_CASE("phase 1 direct-channel error statistics match the closed form") {
    // E{err err^H} = (sigma^2/p) I entrywise, and the direct MSE is
    // M sigma^2 / (p (N+1))
    const int m = 4, n = 4;
    const SystemConfig cfg = test_config(m, 2, 2, 1);
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(49);
    const ChannelRealization real = model.sample(ch_rng);
    const TrainingSchedule sched = irsce::build_2pce(m, n, 1);
    const double p = 2.0, sigma2 = 0.8;
    const int trials = 5000;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
    double mse_d = 0.0;
    RngStream rng(50);
    const Eigen::MatrixXcd v1 = irsce::phase1_reflection(n);
    for (int t = 0; t < trials; ++t) {
        const auto rx = irsce::simulate_rx(real, sched, p, sigma2, rng);
        const Eigen::MatrixXcd composite = rx.y * v1.adjoint() / (std::sqrt(p) * (n + 1));
        Eigen::MatrixXcd truth(m, n + 1);
        truth.col(0) = real.direct[0];
        truth.rightCols(n) = real.reflected[0];
        const Eigen::MatrixXcd err = truth - composite;
        acc += err * err.adjoint();
        mse_d += err.col(0).squaredNorm();
    }
    acc /= trials;
    const Eigen::MatrixXcd expect =
        (sigma2 / p) * Eigen::MatrixXcd::Identity(m, m);
    for (int i = 0; i < m; ++i) {
        CHECK(std::abs(acc(i, i) - expect(i, i)) < 0.05 * std::abs(expect(i, i)));
    }
    CHECK(mse_d / trials ==
          doctest::Approx(m * sigma2 / (p * (n + 1))).epsilon(0.05));
}

TEST_CASE("noiseless two-phase recovery is exact in all regimes") {
    struct Case {
        int m, cols, rows, k;
        irsce::WideRegime regime;
    };
    for (const Case c : {Case{6, 2, 2, 3, irsce::WideRegime::Shared},
                         Case{3, 1, 7, 3, irsce::WideRegime::Shared},
                         Case{4, 2, 5, 2, irsce::WideRegime::Orthogonal}}) {
        SystemConfig cfg = test_config(c.m, c.cols, c.rows, c.k);
        cfg.wide_regime = c.regime;
        const auto geom = irsce::build_geometry(cfg);
        const ChannelModel model(cfg, geom);
        const TrainingSchedule sched =
            irsce::build_2pce(c.m, cfg.irs_elements(), c.k, c.regime);
        RngStream ch_rng(51);
        for (int rep = 0; rep < 25; ++rep) {
            const ChannelRealization real = model.sample(ch_rng);
            RngStream noise(52, rep);
            const EstimateSet est = irsce::run_2pce(real, sched, 2.0, 0.0, noise);
            CHECK(relative_error(est, real) < 1e-8);
        }
    }
}

TEST_CASE("second-phase solvers are exact given the true typical channel") {
    struct Case {
        int m, cols, rows, k;
        irsce::WideRegime regime;
    };
    for (const Case c : {Case{6, 2, 2, 3, irsce::WideRegime::Shared},
                         Case{3, 1, 7, 3, irsce::WideRegime::Shared},
                         Case{4, 2, 5, 2, irsce::WideRegime::Orthogonal}}) {
        SystemConfig cfg = test_config(c.m, c.cols, c.rows, c.k);
        const auto geom = irsce::build_geometry(cfg);
        const ChannelModel model(cfg, geom);
        const TrainingSchedule sched =
            irsce::build_2pce(c.m, cfg.irs_elements(), c.k, c.regime);
        const int n = cfg.irs_elements();
        const double p = 2.0;
        RngStream ch_rng(151);
        for (int rep = 0; rep < 10; ++rep) {
            const ChannelRealization real = model.sample(ch_rng);
            RngStream quiet(152, rep);
            const auto rx = irsce::simulate_rx(real, sched, p, 0.0, quiet);
            const Eigen::MatrixXcd y2 = rx.y.rightCols(sched.slots() - (n + 1));
            irsce::Phase2Estimates est;
            switch (sched.regime) {
                case irsce::Regime::Simultaneous:
                    est = irsce::phase2_estimate_simultaneous(y2, real.reflected[0],
                                                              sched, p);
                    break;
                case irsce::Regime::SharedSlots:
                    est = irsce::phase2_estimate_shared(y2, real.reflected[0], sched, p);
                    break;
                case irsce::Regime::OrthogonalSlots:
                    est = irsce::phase2_estimate_orthogonal(y2, real.reflected[0],
                                                            sched, p);
                    break;
            }
            for (int u = 0; u + 1 < c.k; ++u) {
                const double mu_scale = real.scaling[u].cwiseAbs().maxCoeff();
                CHECK((est.scaling[u] - real.scaling[u]).cwiseAbs().maxCoeff() <
                      1e-9 * (1.0 + mu_scale));
                CHECK((est.direct[u] - real.direct[u + 1]).norm() <
                      1e-9 * (1.0 + real.direct[u + 1].norm()));
            }
        }
    }
}

TEST_CASE("noiseless three-phase recovery is exact in both regimes") {
    for (auto [m, cols, rows, k] :
         std::vector<std::array<int, 4>>{{6, 2, 2, 3}, {3, 1, 7, 3}, {4, 2, 5, 2}}) {
        const SystemConfig cfg = test_config(m, cols, rows, k);
        const auto geom = irsce::build_geometry(cfg);
        const ChannelModel model(cfg, geom);
        const TrainingSchedule sched = irsce::build_3pce(m, cfg.irs_elements(), k);
        RngStream ch_rng(53);
        for (int rep = 0; rep < 25; ++rep) {
            const ChannelRealization real = model.sample(ch_rng);
            RngStream noise(54, rep);
            const EstimateSet est = irsce::run_3pce(real, sched, 2.0, 0.0, noise);
            CHECK(relative_error(est, real) < 1e-8);
        }
    }
}

TEST_CASE("decorrelated second-phase solve equals the stacked pseudo-inverse") {
    // the per-user decomposition is algebraically the full LS solution;
    // generic well-scaled instances keep both SVD routes comparable
    RngStream rng(55);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 7);
        const int m = n + static_cast<int>(rng.next_u64() % (9 - n));
        const int k = 2 + static_cast<int>(rng.next_u64() % 3);
        const TrainingSchedule sched = irsce::build_2pce(m, n, k);
        const int tau1 = n + 1;
        const int tau2 = sched.slots() - tau1;
        const double p = 3.0;
        Eigen::MatrixXcd h1(m, n);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) h1(i, j) = rng.cgaussian(1.0);
        }
        Eigen::MatrixXcd y2(m, tau2);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < tau2; ++j) y2(i, j) = rng.cgaussian(1.0);
        }
        const auto fast = irsce::phase2_estimate_simultaneous(y2, h1, sched, p);

        // brute-force: stack the whole second-phase system and pseudo-invert
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(tau2 * m, (k - 1) * (n + m));
        Eigen::VectorXcd y_stack(tau2 * m);
        for (int i = 0; i < tau2; ++i) {
            y_stack.segment(i * m, m) = y2.col(i);
            for (int u = 0; u + 1 < k; ++u) {
                const std::complex<double> a = sched.pilots(u + 1, tau1 + i);
                w.block(i * m, u * n, m, n) =
                    a * h1 * sched.patterns.col(tau1 + i).asDiagonal();
                w.block(i * m, (k - 1) * n + u * m, m, m) =
                    a * Eigen::MatrixXcd::Identity(m, m);
            }
        }
        const Eigen::VectorXcd full =
            irsce::linalg::pinv(w) * y_stack / std::sqrt(p);
        for (int u = 0; u + 1 < k; ++u) {
            const double scale = 1.0 + full.cwiseAbs().maxCoeff();
            CHECK((fast.scaling[u] - full.segment(u * n, n)).cwiseAbs().maxCoeff() <
                  1e-9 * scale);
            CHECK((fast.direct[u] - full.segment((k - 1) * n + u * m, m))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9 * scale);
        }
    }
}

TEST_CASE("shared-regime estimate equals brute-force LS on the worked instance") {
    const int m = 2, n = 3, k = 2;
    SystemConfig cfg = test_config(m, 1, 3, k);
    cfg.wide_regime = irsce::WideRegime::Shared;
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    const TrainingSchedule sched = irsce::build_2pce(m, n, k, irsce::WideRegime::Shared);
    const int tau1 = n + 1;
    const double p = 2.0;
    RngStream ch_rng(57);
    for (int rep = 0; rep < 10; ++rep) {
        const ChannelRealization real = model.sample(ch_rng);
        RngStream noise(58, rep);
        const auto rx = irsce::simulate_rx(real, sched, p, 0.0, noise);
        const auto [hd1, h1] = irsce::phase1_estimate(
            rx.y.leftCols(tau1), irsce::phase1_reflection(n), p);
        const auto est = irsce::phase2_estimate_shared(
            rx.y.rightCols(sched.slots() - tau1), h1, sched, p);

        const int tau2 = sched.slots() - tau1;
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(tau2 * m, n + m);
        Eigen::VectorXcd y_stack(tau2 * m);
        for (int i = 0; i < tau2; ++i) {
            y_stack.segment(i * m, m) = rx.y.col(tau1 + i);
            const std::complex<double> a = sched.pilots(1, tau1 + i);
            w.block(i * m, 0, m, n) =
                a * h1 * sched.patterns.col(tau1 + i).asDiagonal();
            w.block(i * m, n, m, m) = a * Eigen::MatrixXcd::Identity(m, m);
        }
        const Eigen::VectorXcd full =
            irsce::linalg::pinv(w) * y_stack / std::sqrt(p);
        CHECK((est.scaling[0] - full.head(n)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((est.direct[0] - full.tail(m)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("orthogonal-regime direct MSE matches the closed form") {
    const int m = 8, n = 12, k = 2;
    SystemConfig cfg = test_config(m, 4, 3, k);
    cfg.wide_regime = irsce::WideRegime::Orthogonal;
    cfg.reference_loss = true;
    cfg.beta_ib = 0.0;
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    const TrainingSchedule sched =
        irsce::build_2pce(m, n, k, irsce::WideRegime::Orthogonal);
    const int gamma = irsce::regime_gamma(m, n);
    const double p = 10.0, sigma2 = 1e-4;
    const int trials = 2000;
    double mse = 0.0;
    RngStream ch_rng(59);
    RngStream noise(60);
    for (int t = 0; t < trials; ++t) {
        const ChannelRealization real = model.sample(ch_rng);
        const EstimateSet est = irsce::run_2pce(real, sched, p, sigma2, noise);
        mse += (est.direct[1] - real.direct[1]).squaredNorm();
    }
    mse /= trials;
    CHECK(mse == doctest::Approx(m * sigma2 / (p * (gamma + 1))).epsilon(0.05));
}

TEST_CASE("other users' direct MSE decouples from the IRS-link strength") {
    // M >= N second phase: the direct-channel error is pure noise, so
    // boosting the IRS-side path losses ~100x must not move it
    const int m = 8, n = 4, k = 3;
    const double p = 5.0, sigma2 = 2e-4;
    const int trials = 2000;
    const double expect = m * sigma2 / (2.0 * p * (k - 1));
    for (double alpha_ib : {2.2, 1.0}) {
        SystemConfig cfg = test_config(m, 2, 2, k);
        cfg.reference_loss = true;
        cfg.beta_ib = 0.0;
        cfg.alpha_ib = alpha_ib;
        const auto geom = irsce::build_geometry(cfg);
        const ChannelModel model(cfg, geom);
        const TrainingSchedule sched = irsce::build_2pce(m, n, k);
        double mse = 0.0;
        RngStream ch_rng(67);
        RngStream noise(68);
        for (int t = 0; t < trials; ++t) {
            const ChannelRealization real = model.sample(ch_rng);
            const EstimateSet est = irsce::run_2pce(real, sched, p, sigma2, noise);
            for (int u = 1; u < k; ++u) {
                mse += (est.direct[u] - real.direct[u]).squaredNorm() / (k - 1);
            }
        }
        mse /= trials;
        CHECK(mse == doctest::Approx(expect).epsilon(0.03));
    }
}

TEST_CASE("three-phase error matches the table rows for direct and typical user") {
    const int m = 6, n = 4, k = 3;
    SystemConfig cfg = test_config(m, 2, 2, k);
    cfg.reference_loss = true;
    cfg.beta_ib = 0.0;
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    const TrainingSchedule sched = irsce::build_3pce(m, n, k);
    const double p = 5.0, sigma2 = 3e-4;
    const int trials = 2000;
    double mse_d = 0.0, mse_r1 = 0.0;
    RngStream ch_rng(61);
    RngStream noise(62);
    for (int t = 0; t < trials; ++t) {
        const ChannelRealization real = model.sample(ch_rng);
        const EstimateSet est = irsce::run_3pce(real, sched, p, sigma2, noise);
        for (int u = 0; u < k; ++u) {
            mse_d += (est.direct[u] - real.direct[u]).squaredNorm();
        }
        mse_r1 += (est.reflected_typical - real.reflected[0]).squaredNorm();
    }
    mse_d /= trials;
    mse_r1 /= trials;
    CHECK(mse_d == doctest::Approx(m * sigma2 / p).epsilon(0.05));
    CHECK(mse_r1 == doctest::Approx((1.0 + k) * m * sigma2 / (p * k)).epsilon(0.05));
}

TEST_CASE("high power drives every nmse below 1e-9") {
    // near-unit path losses so the 1/p scaling is visible on the nmse scale
    SystemConfig cfg = test_config(5, 2, 2, 2);
    cfg.l0_db = 0.0;
    cfg.alpha_ub = cfg.alpha_ui = cfg.alpha_ib = 2.0;
    cfg.bs_ref = {1.0, 0.0, 0.0};
    cfg.irs_ref = {0.0, 1.0, 0.0};
    cfg.user_positions = {{0.2, 0.7, 0.1}, {0.7, 0.2, 0.2}};
    cfg.p_dbm = 10.0 * std::log10(1e12 * cfg.noise_variance_mw());
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(63);
    const ChannelRealization real = model.sample(ch_rng);
    RngStream noise(64);
    const EstimateSet est = irsce::run_2pce(real, cfg, noise);
    const auto report = irsce::nmse_report({real}, {est});
    CHECK(report.d1.nmse < 1e-9);
    CHECK(report.r1.nmse < 1e-9);
    CHECK(report.dk.nmse < 1e-9);
    CHECK(report.rk.nmse < 1e-9);
}

TEST_CASE("single-user config runs the first phase only") {
    SystemConfig cfg = test_config(4, 2, 2, 1);
    const auto geom = irsce::build_geometry(cfg);
    const ChannelModel model(cfg, geom);
    RngStream ch_rng(65);
    const ChannelRealization real = model.sample(ch_rng);
    RngStream noise(66);
    const EstimateSet est = irsce::run_2pce(real, cfg, noise);
    CHECK(est.direct.size() == 1);
    CHECK(est.scaling.empty());
    CHECK(est.reflected.size() == 1);
}
