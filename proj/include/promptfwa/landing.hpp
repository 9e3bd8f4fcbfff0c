#pragma once

#include <span>
#include <vector>

#include "promptfwa/problems.hpp"

namespace promptfwa::landing {

using problems::AircraftLandingInstance;
using problems::LandingSchedule;

/// Landing times for a fixed single-runway sequence.
struct SequenceScheduleResult {
    std::vector<double> times;  // indexed by sequence position; empty when infeasible
    double cost = 0;            // +inf when infeasible
    bool feasible = false;
};

/// Optimal landing times for the planes in `sequence` order.
///
/// Minimizes weighted earliness plus lateness subject to each plane's window and
/// the separation between every ordered pair of the sequence (not only
/// neighbours). Among optimal time vectors the lexicographically smallest, in
/// sequence order, is returned. Throws problems::InputError if `sequence` is not
/// a permutation of the planes.
SequenceScheduleResult solve_sequence(const AircraftLandingInstance& inst, std::span<const int> sequence);

/// Earliest times satisfying windows' lower ends and all separations in sequence
/// order; the sequence admits a feasible schedule iff none exceeds its latest time.
std::vector<double> earliest_times(const AircraftLandingInstance& inst, std::span<const int> sequence);

/// Re-indexes sequence-position times by plane id (all planes on runway 1).
LandingSchedule to_schedule(std::span<const int> sequence, const SequenceScheduleResult& result);

/// Plane ids sorted by target time, ties by id.
std::vector<int> target_order(const AircraftLandingInstance& inst);

}  // namespace promptfwa::landing
