#include "irsce/schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "irsce/linalg.hpp"

namespace irsce {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

TrainingSchedule empty_segment(int users, int elements, Strategy strategy, Regime regime) {
    TrainingSchedule seg;
    seg.users = users;
    seg.elements = elements;
    seg.strategy = strategy;
    seg.regime = regime;
    seg.pilots = Eigen::MatrixXcd::Zero(users, 0);
    seg.patterns = Eigen::MatrixXcd::Zero(elements, 0);
    return seg;
}

TrainingSchedule with_slots(int users, int elements, int slots, Strategy strategy,
                            Regime regime) {
    TrainingSchedule seg = empty_segment(users, elements, strategy, regime);
    seg.pilots = Eigen::MatrixXcd::Zero(users, slots);
    seg.patterns = Eigen::MatrixXcd::Zero(elements, slots);
    seg.slot_pairs.resize(slots);
    return seg;
}

TrainingSchedule concat(const TrainingSchedule& a, const TrainingSchedule& b) {
    TrainingSchedule out = a;
    const int ta = a.slots(), tb = b.slots();
    out.pilots.conservativeResize(Eigen::NoChange, ta + tb);
    out.pilots.rightCols(tb) = b.pilots;
    out.patterns.conservativeResize(Eigen::NoChange, ta + tb);
    out.patterns.rightCols(tb) = b.patterns;
    out.slot_pairs.resize(ta);
    out.slot_pairs.insert(out.slot_pairs.end(), b.slot_pairs.begin(), b.slot_pairs.end());
    out.regime = b.regime;
    return out;
}

}  // namespace

std::string to_string(Strategy s) {
    return s == Strategy::TwoPhase ? "2pce" : "3pce";
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Simultaneous: return "simultaneous";
        case Regime::SharedSlots: return "shared";
        case Regime::OrthogonalSlots: return "orthogonal";
    }
    return "?";
}

int regime_gamma(int bs_antennas, int irs_elements) {
    return (bs_antennas + irs_elements) / bs_antennas;
}

int regime_delta(int bs_antennas, int irs_elements) {
    return irs_elements - (regime_gamma(bs_antennas, irs_elements) - 1) * bs_antennas;
}

IndexSets make_index_sets(int bs_antennas, int irs_elements, int users) {
    if (bs_antennas >= irs_elements)
        throw std::invalid_argument("make_index_sets: requires M < N");
    IndexSets sets;
    sets.gamma = regime_gamma(bs_antennas, irs_elements);
    sets.delta = regime_delta(bs_antennas, irs_elements);
    sets.chi_a.resize(users > 0 ? users - 1 : 0);
    sets.chi_b.resize(sets.chi_a.size());
    for (int u = 0; u + 1 < users; ++u) {
        std::vector<char> in_b(irs_elements, 0);
        auto& chi_b = sets.chi_b[u];
        for (int j = 0; j < sets.delta; ++j) {
            const int elem = (u * sets.delta + j) % irs_elements;
            chi_b.push_back(elem);
            in_b[elem] = 1;
        }
        auto& chi_a = sets.chi_a[u];
        for (int n = 0; n < irs_elements; ++n) {
            if (!in_b[n]) chi_a.push_back(n);
        }
    }
    return sets;
}

Eigen::MatrixXcd phase1_reflection(int irs_elements) {
    return linalg::dft_matrix(irs_elements + 1);
}

TrainingSchedule phase1_schedule(int users, int irs_elements) {
    const int tau1 = irs_elements + 1;
    TrainingSchedule seg = with_slots(users, irs_elements, tau1, Strategy::TwoPhase,
                                      Regime::Simultaneous);
    const Eigen::MatrixXcd v1 = phase1_reflection(irs_elements);
    seg.pilots.row(0).setOnes();
    // column i of the reflection matrix is [1; theta_i]
    seg.patterns = v1.bottomRows(irs_elements);
    seg.phase_boundaries = {tau1};
    return seg;
}

TrainingSchedule phase2_simultaneous(int bs_antennas, int irs_elements, int users) {
    if (bs_antennas < irs_elements)
        throw std::invalid_argument("phase2_simultaneous: requires M >= N");
    if (users < 2)
        return empty_segment(users, irs_elements, Strategy::TwoPhase, Regime::Simultaneous);
    const int half = users - 1;
    TrainingSchedule seg = with_slots(users, irs_elements, 2 * half, Strategy::TwoPhase,
                                      Regime::Simultaneous);
    const Eigen::MatrixXcd dft = linalg::dft_matrix(half);
    for (int i = 0; i < 2 * half; ++i) {
        for (int u = 0; u < half; ++u) {
            seg.pilots(u + 1, i) = dft(i % half, u);
        }
        seg.patterns.col(i).setConstant(i < half ? 1.0 : -1.0);
    }
    return seg;
}

TrainingSchedule phase2_shared(int bs_antennas, int irs_elements, int users) {
    if (bs_antennas >= irs_elements)
        throw std::invalid_argument("phase2_shared: requires M < N");
    if (users < 2)
        return empty_segment(users, irs_elements, Strategy::TwoPhase, Regime::SharedSlots);
    const IndexSets sets = make_index_sets(bs_antennas, irs_elements, users);
    const int gamma = sets.gamma, delta = sets.delta;
    const int window_slots = (users - 1) * gamma;
    const int shared_slots = delta > 0 ? ceil_div((users - 1) * delta, bs_antennas) : 0;
    TrainingSchedule seg = with_slots(users, irs_elements, window_slots + shared_slots,
                                      Strategy::TwoPhase, Regime::SharedSlots);

    // Per-user windows: gamma-1 slots tile chi_a in blocks of M, then one
    // slot flips all of chi_a to -1.
    for (int u = 0; u + 1 < users; ++u) {
        const auto& chi_a = sets.chi_a[u];
        for (int o = 0; o < gamma; ++o) {
            const int slot = u * gamma + o;
            seg.pilots(u + 1, slot) = 1.0;
            if (o < gamma - 1) {
                for (int j = o * bs_antennas;
                     j < std::min<int>((o + 1) * bs_antennas, chi_a.size()); ++j) {
                    seg.patterns(chi_a[j], slot) = 1.0;
                }
            } else {
                for (int elem : chi_a) seg.patterns(elem, slot) = -1.0;
            }
        }
    }

    // Shared slots cover the chi_b pairs in global position order.
    const int total_pairs = (users - 1) * delta;
    for (int j = 0; j < shared_slots; ++j) {
        const int slot = window_slots + j;
        const int first = j * bs_antennas;
        const int count = std::min(bs_antennas, total_pairs - first);
        auto& pairs = seg.slot_pairs[slot];
        for (int pos = first; pos < first + count; ++pos) {
            const int user = pos / delta + 1;  // 0-based id of a non-typical user
            const int elem = pos % irs_elements;
            pairs.users.push_back(user);
            pairs.elements.push_back(elem);
            seg.pilots(user, slot) = 1.0;
            seg.patterns(elem, slot) = 1.0;
        }
    }
    return seg;
}

TrainingSchedule phase2_orthogonal(int bs_antennas, int irs_elements, int users) {
    if (bs_antennas >= irs_elements)
        throw std::invalid_argument("phase2_orthogonal: requires M < N");
    if (users < 2)
        return empty_segment(users, irs_elements, Strategy::TwoPhase,
                             Regime::OrthogonalSlots);
    const int gamma = regime_gamma(bs_antennas, irs_elements);
    TrainingSchedule seg = with_slots(users, irs_elements, (users - 1) * (gamma + 1),
                                      Strategy::TwoPhase, Regime::OrthogonalSlots);
    for (int u = 0; u + 1 < users; ++u) {
        for (int o = 0; o <= gamma; ++o) {
            const int slot = u * (gamma + 1) + o;
            seg.pilots(u + 1, slot) = 1.0;
            if (o < gamma) {
                const int first = o * bs_antennas;
                const int last = std::min((o + 1) * bs_antennas, irs_elements);
                for (int n = first; n < last; ++n) seg.patterns(n, slot) = 1.0;
            } else {
                seg.patterns.col(slot).setConstant(-1.0);
            }
        }
    }
    return seg;
}

TrainingSchedule build_2pce(int bs_antennas, int irs_elements, int users,
                            WideRegime wide_regime) {
    TrainingSchedule sched = phase1_schedule(users, irs_elements);
    if (users < 2) return sched;
    TrainingSchedule second;
    if (bs_antennas >= irs_elements) {
        second = phase2_simultaneous(bs_antennas, irs_elements, users);
    } else if (wide_regime == WideRegime::Shared) {
        second = phase2_shared(bs_antennas, irs_elements, users);
        const int gamma = regime_gamma(bs_antennas, irs_elements);
        sched.phase_boundaries.push_back(sched.slots() + (users - 1) * gamma);
    } else {
        second = phase2_orthogonal(bs_antennas, irs_elements, users);
    }
    sched = concat(sched, second);
    sched.phase_boundaries.push_back(sched.slots());
    return sched;
}

TrainingSchedule build_3pce(int bs_antennas, int irs_elements, int users) {
    const int m = bs_antennas, n = irs_elements, k = users;

    // Direct channels: K slots of DFT pilots with every element off.
    TrainingSchedule sched = with_slots(k, n, k, Strategy::ThreePhase,
                                        bs_antennas >= irs_elements
                                            ? Regime::Simultaneous
                                            : Regime::SharedSlots);
    const Eigen::MatrixXcd dft_users = linalg::dft_matrix(k);
    for (int i = 0; i < k; ++i) {
        for (int u = 0; u < k; ++u) sched.pilots(u, i) = dft_users(i, u);
    }
    sched.phase_boundaries = {k};

    // Typical user's reflected channel: N slots of DFT reflection patterns.
    TrainingSchedule second = with_slots(k, n, n, Strategy::ThreePhase, sched.regime);
    second.pilots.row(0).setOnes();
    second.patterns = linalg::dft_matrix(n);
    sched = concat(sched, second);
    sched.phase_boundaries.push_back(k + n);

    if (k >= 2) {
        TrainingSchedule third;
        if (m >= n) {
            // One dedicated full-reflection slot per remaining user.
            third = with_slots(k, n, k - 1, Strategy::ThreePhase, Regime::Simultaneous);
            for (int u = 1; u < k; ++u) {
                third.pilots(u, u - 1) = 1.0;
                third.patterns.col(u - 1).setOnes();
            }
        } else {
            // Slot sharing over all (K-1)*N scaling factors in position order.
            const int total_pairs = (k - 1) * n;
            const int slots3 = ceil_div(total_pairs, m);
            third = with_slots(k, n, slots3, Strategy::ThreePhase, Regime::SharedSlots);
            for (int j = 0; j < slots3; ++j) {
                const int first = j * m;
                const int count = std::min(m, total_pairs - first);
                auto& pairs = third.slot_pairs[j];
                for (int pos = first; pos < first + count; ++pos) {
                    const int user = pos / n + 1;
                    const int elem = pos % n;
                    pairs.users.push_back(user);
                    pairs.elements.push_back(elem);
                    third.pilots(user, j) = 1.0;
                    third.patterns(elem, j) = 1.0;
                }
            }
        }
        sched = concat(sched, third);
    }
    sched.strategy = Strategy::ThreePhase;
    sched.phase_boundaries.push_back(sched.slots());
    return sched;
}

int training_overhead(int bs_antennas, int irs_elements, int users, Strategy strategy) {
    if (bs_antennas < 1 || irs_elements < 1 || users < 1)
        throw std::invalid_argument("training_overhead: dimensions must be >= 1");
    const int m = bs_antennas, n = irs_elements, k = users;
    const int shared = k >= 2 ? ceil_div((k - 1) * n, m) : 0;
    if (strategy == Strategy::TwoPhase) {
        return m >= n ? n + 2 * k - 1 : n + k + shared;
    }
    return k + n + std::max(k - 1, shared);
}

std::string schedule_to_json(const TrainingSchedule& sched) {
    nlohmann::json j;
    j["users"] = sched.users;
    j["elements"] = sched.elements;
    j["strategy"] = to_string(sched.strategy);
    j["regime"] = to_string(sched.regime);
    j["phase_boundaries"] = sched.phase_boundaries;
    nlohmann::json slots = nlohmann::json::array();
    for (int i = 0; i < sched.slots(); ++i) {
        nlohmann::json slot;
        nlohmann::json pilot = nlohmann::json::array();
        for (int u = 0; u < sched.users; ++u) {
            pilot.push_back({sched.pilots(u, i).real(), sched.pilots(u, i).imag()});
        }
        nlohmann::json pattern = nlohmann::json::array();
        for (int n = 0; n < sched.elements; ++n) {
            pattern.push_back({sched.patterns(n, i).real(), sched.patterns(n, i).imag()});
        }
        slot["pilot"] = pilot;
        slot["pattern"] = pattern;
        if (!sched.slot_pairs.empty() && !sched.slot_pairs[i].empty()) {
            slot["pair_users"] = sched.slot_pairs[i].users;
            slot["pair_elements"] = sched.slot_pairs[i].elements;
        }
        slots.push_back(slot);
    }
    j["slots"] = slots;
    return j.dump();
}

TrainingSchedule schedule_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    TrainingSchedule sched;
    sched.users = j.at("users").get<int>();
    sched.elements = j.at("elements").get<int>();
    const std::string strategy = j.at("strategy").get<std::string>();
    sched.strategy = strategy == "2pce" ? Strategy::TwoPhase : Strategy::ThreePhase;
    const std::string regime = j.at("regime").get<std::string>();
    if (regime == "simultaneous") sched.regime = Regime::Simultaneous;
    else if (regime == "shared") sched.regime = Regime::SharedSlots;
    else sched.regime = Regime::OrthogonalSlots;
    sched.phase_boundaries = j.at("phase_boundaries").get<std::vector<int>>();
    const auto& slots = j.at("slots");
    const int tau = static_cast<int>(slots.size());
    sched.pilots = Eigen::MatrixXcd::Zero(sched.users, tau);
    sched.patterns = Eigen::MatrixXcd::Zero(sched.elements, tau);
    sched.slot_pairs.resize(tau);
    for (int i = 0; i < tau; ++i) {
        const auto& slot = slots[i];
        for (int u = 0; u < sched.users; ++u) {
            sched.pilots(u, i) = {slot.at("pilot")[u][0].get<double>(),
                                  slot.at("pilot")[u][1].get<double>()};
        }
        for (int n = 0; n < sched.elements; ++n) {
            sched.patterns(n, i) = {slot.at("pattern")[n][0].get<double>(),
                                    slot.at("pattern")[n][1].get<double>()};
        }
        if (slot.contains("pair_users")) {
            sched.slot_pairs[i].users = slot["pair_users"].get<std::vector<int>>();
            sched.slot_pairs[i].elements = slot["pair_elements"].get<std::vector<int>>();
        }
    }
    return sched;
}

}  // namespace irsce
