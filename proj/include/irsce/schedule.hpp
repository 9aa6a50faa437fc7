#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "irsce/channel.hpp"

namespace irsce {

enum class Strategy { TwoPhase, ThreePhase };

enum class Regime { Simultaneous, SharedSlots, OrthogonalSlots };

std::string to_string(Strategy s);
std::string to_string(Regime r);

// Position-ordered (user, element) pairs jointly covered by one slot of a
// slot-sharing phase; pair j is the one solved from position j in that slot.
struct SlotPairs {
    std::vector<int> users;     // 0-based user ids
    std::vector<int> elements;  // 0-based element ids
    bool empty() const { return users.empty(); }
};

struct TrainingSchedule {
    int users = 0;     // K
    int elements = 0;  // N
    Strategy strategy = Strategy::TwoPhase;
    Regime regime = Regime::Simultaneous;
    Eigen::MatrixXcd pilots;            // K x tau, entries of modulus 0 or 1
    Eigen::MatrixXcd patterns;          // N x tau, entries of modulus 0 or 1
    std::vector<int> phase_boundaries;  // cumulative slot counts per phase
    std::vector<SlotPairs> slot_pairs;  // per slot; empty unless slot-sharing

    int slots() const { return static_cast<int>(pilots.cols()); }
};

// Element-index bookkeeping for the shared regime: per non-typical user the
// split of {0..N-1} into the window-estimated set (chi_a) and the
// slot-sharing remainder (chi_b) of size delta.
struct IndexSets {
    std::vector<std::vector<int>> chi_a;  // index 0 corresponds to user 2
    std::vector<std::vector<int>> chi_b;
    int gamma = 0;
    int delta = 0;
};

int regime_gamma(int bs_antennas, int irs_elements);
int regime_delta(int bs_antennas, int irs_elements);
IndexSets make_index_sets(int bs_antennas, int irs_elements, int users);

// First phase: typical user transmits ones for N+1 slots while the
// reflection pattern matrix runs through the (N+1)-point DFT columns.
Eigen::MatrixXcd phase1_reflection(int irs_elements);  // (N+1) x (N+1)
TrainingSchedule phase1_schedule(int users, int irs_elements);

// Second-phase segments (slots numbered locally from 0).
TrainingSchedule phase2_simultaneous(int bs_antennas, int irs_elements, int users);
TrainingSchedule phase2_shared(int bs_antennas, int irs_elements, int users);
TrainingSchedule phase2_orthogonal(int bs_antennas, int irs_elements, int users);

// Full training blocks.
TrainingSchedule build_2pce(int bs_antennas, int irs_elements, int users,
                            WideRegime wide_regime = WideRegime::Shared);
TrainingSchedule build_3pce(int bs_antennas, int irs_elements, int users);

// Total training slots per strategy (the shared regime when M < N).
int training_overhead(int bs_antennas, int irs_elements, int users, Strategy strategy);

// JSON form used by golden-file tests: per-slot pilot and pattern rows.
std::string schedule_to_json(const TrainingSchedule& sched);
TrainingSchedule schedule_from_json(const std::string& text);

}  // namespace irsce
