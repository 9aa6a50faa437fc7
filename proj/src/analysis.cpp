#include "irsce/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace irsce {

namespace {

double sum_range(const Eigen::VectorXd& v, Eigen::Index first, Eigen::Index last) {
    if (first >= last) return 0.0;
    return v.segment(first, last - first).sum();
}

bool geq_with_slack(double a, double b) {
    return a >= b - 1e-12 * (std::abs(a) + std::abs(b) + 1e-300);
}

struct Jackknife {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double se = 0.0;
};

Jackknife jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den) {
    const std::size_t t = num.size();
    double sum_n = 0.0, sum_d = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        sum_n += num[i];
        sum_d += den[i];
    }
    Jackknife out;
    if (sum_d <= 0.0) return out;
    out.ratio = sum_n / sum_d;
    if (t < 2) return out;
    std::vector<double> loo(t);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        loo[i] = (sum_n - num[i]) / (sum_d - den[i]);
        loo_mean += loo[i];
    }
    loo_mean /= static_cast<double>(t);
    double ss = 0.0;
    for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
    out.se = std::sqrt(ss * static_cast<double>(t - 1) / static_cast<double>(t));
    return out;
}

MeanStat mean_stat(const std::vector<double>& values) {
    MeanStat out;
    const std::size_t t = values.size();
    if (t == 0) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(t);
    if (t < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(t - 1)) / std::sqrt(static_cast<double>(t));
    return out;
}

}  // namespace

AsymptoticInputs make_asymptotic_inputs(const SystemConfig& cfg,
                                        const Eigen::VectorXd& e_scaling_sq) {
    AsymptoticInputs in;
    in.bs_antennas = cfg.bs_antennas;
    in.irs_elements = cfg.irs_elements();
    in.users = cfg.users;
    in.p_mw = cfg.tx_power_mw();
    in.sigma2_mw = cfg.noise_variance_mw();
    const auto users = cfg.resolved_user_positions();
    in.loss_ui1 = path_loss(distance(users[0], cfg.irs_ref), cfg.alpha_ui, cfg);
    in.loss_ib = path_loss(distance(cfg.irs_ref, cfg.bs_ref), cfg.alpha_ib, cfg);
    if (in.bs_antennas < in.irs_elements) {
        in.gamma = regime_gamma(in.bs_antennas, in.irs_elements);
        in.delta = regime_delta(in.bs_antennas, in.irs_elements);
    }
    in.e_scaling_sq =
        e_scaling_sq.size() > 0 ? e_scaling_sq : Eigen::VectorXd::Ones(in.irs_elements);
    return in;
}

Phase1Mse mse_phase1_2pce(const AsymptoticInputs& in) {
    const double m = in.bs_antennas, n = in.irs_elements;
    Phase1Mse out;
    out.direct = m * in.sigma2_mw / (in.p_mw * (n + 1.0));
    out.reflected = m * n * in.sigma2_mw / (in.p_mw * (n + 1.0));
    return out;
}

Phase2Mse mse_phase2_2pce_simultaneous(const AsymptoticInputs& in) {
    const double m = in.bs_antennas, n = in.irs_elements, k = in.users;
    const double p = in.p_mw, s2 = in.sigma2_mw;
    const double ll = in.loss_ui1 * in.loss_ib;
    Phase2Mse out;
    out.direct = m * s2 / (2.0 * p * (k - 1.0));
    out.scaling = s2 * (n + 1.0) * n /
                      (2.0 * (k - 1.0) * m * (p * (n + 1.0) * ll + s2)) +
                  m * s2 * in.e_scaling_total() / (n * ll * p * (n + 1.0) + m * s2);
    return out;
}

Phase2Mse mse_phase2_2pce_orthogonal(const AsymptoticInputs& in) {
    if (in.delta < 1) {
        throw std::invalid_argument(
            "mse_phase2_2pce_orthogonal: delta = 0 is degenerate (M divides N)");
    }
    const double m = in.bs_antennas, n = in.irs_elements;
    const double p = in.p_mw, s2 = in.sigma2_mw;
    const double g = in.gamma, d = in.delta;
    const double ll = in.loss_ui1 * in.loss_ib;
    const Eigen::Index split = static_cast<Eigen::Index>((in.gamma - 1) * in.bs_antennas);
    const double sum_window = sum_range(in.e_scaling_sq, 0, split);
    const double sum_tail = sum_range(in.e_scaling_sq, split, in.irs_elements);

    Phase2Mse out;
    out.direct = m * s2 / (p * (g + 1.0));
    const double denom_common = p * d * (g + 1.0) * (g + 1.0) * (n + 1.0) * ll;
    const double c_window = (d * g * g + 2.0 * g + 2.0 * d - m) * s2;
    const double c_tail = (m * g * g + (3.0 * m - 1.0) * g + d) * s2;
    out.scaling = s2 * n * (n + 1.0) / (2.0 * p * m * (n + 1.0) * ll + 2.0 * m * s2) +
                  c_window * sum_window / (denom_common + c_window) +
                  c_tail * sum_tail / (denom_common + c_tail);
    return out;
}

ThreePhaseMse mse_3pce_table(const AsymptoticInputs& in) {
    const double m = in.bs_antennas, n = in.irs_elements, k = in.users;
    const double p = in.p_mw, s2 = in.sigma2_mw;
    const double ll = in.loss_ui1 * in.loss_ib;
    ThreePhaseMse out;
    out.direct_total = m * s2 / p;
    out.reflected_typical = (1.0 + k) * m * s2 / (p * k);

    const double e_first = in.e_scaling_sq.size() > 0 ? in.e_scaling_sq(0) : 0.0;
    const double e_rest = sum_range(in.e_scaling_sq, 1, in.irs_elements);
    out.scaling_m_ge_n =
        n * (n - 1.0) * (1.0 + k) * s2 / (k * m * s2 + p * k * m * n * ll) +
        k * (1.0 + k) * n * s2 / (k * (k + n) * m * s2 + p * m * n * k * k * ll) +
        (k + n) * m * s2 * e_first / (p * n * n * k * ll + (k + n) * m * s2) +
        m * s2 * e_rest / (p * n * n * ll + m * s2);

    if (in.bs_antennas < in.irs_elements) {
        if (in.delta < 1) {
            throw std::invalid_argument(
                "mse_3pce_table: delta = 0 is degenerate (M divides N)");
        }
        const double d = in.delta;
        const Eigen::Index split = static_cast<Eigen::Index>((in.gamma - 1) * in.bs_antennas);
        const double e_window = sum_range(in.e_scaling_sq, 1, split);
        const double e_tail = sum_range(in.e_scaling_sq, split, in.irs_elements);
        out.scaling_m_lt_n =
            k * (1.0 + k) * n * s2 / (p * k * k * n * m * ll + k * (k + n) * m * s2) +
            n * (n - 1.0) * (1.0 + k) * s2 / (p * n * m * k * ll + k * m * s2) +
            m * s2 * e_window / (p * n * m * ll + m * s2) +
            (k + n) * m * s2 * e_first / (p * k * n * m * ll + (k + n) * m * s2) +
            m * s2 * e_tail / (p * n * d * ll + m * s2);
    } else {
        out.scaling_m_lt_n = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

StrategyComparison compare_strategies(const AsymptoticInputs& in) {
    StrategyComparison out;
    const double k = in.users;
    const Phase1Mse first = mse_phase1_2pce(in);
    const ThreePhaseMse base = mse_3pce_table(in);
    out.reflected_typical_gap = base.reflected_typical - first.reflected;

    if (in.bs_antennas >= in.irs_elements) {
        const Phase2Mse second = mse_phase2_2pce_simultaneous(in);
        const double two_phase_direct = first.direct + (k - 1.0) * second.direct;
        out.direct_gap = base.direct_total - two_phase_direct;
        out.scaling_gap = base.scaling_m_ge_n - second.scaling;
        out.dominates = geq_with_slack(out.direct_gap, 0.0) &&
                        geq_with_slack(out.reflected_typical_gap, 0.0) &&
                        geq_with_slack(out.scaling_gap, 0.0);
    } else {
        const Phase2Mse second = mse_phase2_2pce_orthogonal(in);
        const double two_phase_direct = first.direct + (k - 1.0) * second.direct;
        out.direct_gap = base.direct_total - two_phase_direct;
        out.scaling_gap = base.scaling_m_lt_n - second.scaling;
        out.direct_dominates = geq_with_slack(out.direct_gap, 0.0);
        out.direct_condition = in.users < in.gamma + 2;
        out.reflected_dominates = geq_with_slack(out.reflected_typical_gap, 0.0) &&
                                  geq_with_slack(out.scaling_gap, 0.0);
    }
    return out;
}

TrialErrors trial_errors(const ChannelRealization& real, const EstimateSet& est) {
    const int users = static_cast<int>(real.direct.size());
    const Eigen::Index n = real.irs_bs.cols();
    TrialErrors out;
    out.scaling_sq = Eigen::VectorXd::Zero(n);

    out.num_d1 = (est.direct[0] - real.direct[0]).squaredNorm();
    out.den_d1 = real.direct[0].squaredNorm();
    out.num_r1 = (est.reflected_typical - real.reflected[0]).squaredNorm();
    out.den_r1 = real.reflected[0].squaredNorm();
    out.eps_d1 = out.num_d1;
    out.eps_r1 = out.num_r1;
    out.eps_d_total = out.num_d1;

    for (int k = 1; k < users; ++k) {
        const double err_d = (est.direct[k] - real.direct[k]).squaredNorm();
        out.num_dk += err_d;
        out.den_dk += real.direct[k].squaredNorm();
        out.num_rk += (est.reflected[k] - real.reflected[k]).squaredNorm();
        out.den_rk += real.reflected[k].squaredNorm();
        out.eps_scaling += (est.scaling[k - 1] - real.scaling[k - 1]).squaredNorm();
        out.scaling_sq += real.scaling[k - 1].cwiseAbs2();
    }
    out.eps_d_total += out.num_dk;
    if (users > 1) {
        out.eps_dk = out.num_dk / (users - 1.0);
        out.eps_scaling /= (users - 1.0);
        out.scaling_sq /= (users - 1.0);
    }
    return out;
}

MseReport aggregate_trials(const std::vector<TrialErrors>& trials) {
    MseReport report;
    report.trials = trials.size();
    if (trials.empty()) return report;
    const std::size_t t = trials.size();

    const auto group = [&](auto num_member, auto den_member) {
        std::vector<double> num(t), den(t);
        for (std::size_t i = 0; i < t; ++i) {
            num[i] = trials[i].*num_member;
            den[i] = trials[i].*den_member;
        }
        const Jackknife jk = jackknife_ratio(num, den);
        return GroupStat{jk.ratio, jk.se};
    };
    report.d1 = group(&TrialErrors::num_d1, &TrialErrors::den_d1);
    report.r1 = group(&TrialErrors::num_r1, &TrialErrors::den_r1);
    report.dk = group(&TrialErrors::num_dk, &TrialErrors::den_dk);
    report.rk = group(&TrialErrors::num_rk, &TrialErrors::den_rk);
    {
        std::vector<double> num(t), den(t);
        for (std::size_t i = 0; i < t; ++i) {
            num[i] = trials[i].num_d1 + trials[i].num_dk;
            den[i] = trials[i].den_d1 + trials[i].den_dk;
        }
        const Jackknife jk = jackknife_ratio(num, den);
        report.d_all = {jk.ratio, jk.se};
        for (std::size_t i = 0; i < t; ++i) {
            num[i] = trials[i].num_r1 + trials[i].num_rk;
            den[i] = trials[i].den_r1 + trials[i].den_rk;
        }
        const Jackknife jk2 = jackknife_ratio(num, den);
        report.r_all = {jk2.ratio, jk2.se};
    }

    const auto mean_of = [&](auto member) {
        std::vector<double> values(t);
        for (std::size_t i = 0; i < t; ++i) values[i] = trials[i].*member;
        return mean_stat(values);
    };
    report.eps_d1 = mean_of(&TrialErrors::eps_d1);
    report.eps_r1 = mean_of(&TrialErrors::eps_r1);
    report.eps_dk = mean_of(&TrialErrors::eps_dk);
    report.eps_d_total = mean_of(&TrialErrors::eps_d_total);
    report.eps_scaling = mean_of(&TrialErrors::eps_scaling);

    report.e_scaling_sq = Eigen::VectorXd::Zero(trials[0].scaling_sq.size());
    for (const auto& trial : trials) report.e_scaling_sq += trial.scaling_sq;
    report.e_scaling_sq /= static_cast<double>(t);
    return report;
}

MseReport nmse_report(const std::vector<ChannelRealization>& reals,
                      const std::vector<EstimateSet>& ests) {
    if (reals.empty() || reals.size() != ests.size()) {
        throw std::invalid_argument("nmse_report: lists must be nonempty and paired");
    }
    std::vector<TrialErrors> trials(reals.size());
    for (std::size_t i = 0; i < reals.size(); ++i) {
        trials[i] = trial_errors(reals[i], ests[i]);
    }
    return aggregate_trials(trials);
}

std::string MseReport::to_json() const {
    nlohmann::json j;
    j["trials"] = trials;
    const auto put_group = [&](const char* name, const GroupStat& g) {
        j["nmse"][name] = {{"value", g.nmse}, {"se", g.se}};
    };
    put_group("d_all", d_all);
    put_group("r_all", r_all);
    put_group("d1", d1);
    put_group("r1", r1);
    put_group("dk", dk);
    put_group("rk", rk);
    const auto put_mean = [&](const char* name, const MeanStat& s) {
        j["mse"][name] = {{"value", s.mean}, {"se", s.se}};
    };
    put_mean("eps_d1", eps_d1);
    put_mean("eps_r1", eps_r1);
    put_mean("eps_dk", eps_dk);
    put_mean("eps_d_total", eps_d_total);
    put_mean("eps_scaling", eps_scaling);
    j["e_scaling_sq"] = std::vector<double>(e_scaling_sq.data(),
                                            e_scaling_sq.data() + e_scaling_sq.size());
    return j.dump();
}

}  // namespace irsce
