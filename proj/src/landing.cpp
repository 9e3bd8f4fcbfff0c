#include "promptfwa/landing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "promptfwa/simplex.hpp"

namespace promptfwa::landing {

namespace {

constexpr double kTol = 1e-9;

void require_permutation(std::span<const int> seq, std::size_t n) {
    if (seq.size() != n) throw problems::InputError("sequence length does not match plane count");
    std::vector<char> seen(n, 0);
    for (int p : seq) {
        if (p < 0 || static_cast<std::size_t>(p) >= n || seen[p]) throw problems::InputError("sequence is not a permutation of the planes");
        seen[p] = 1;
    }
}

/// Separation pairs (i < j, sequence positions) not implied by longer chains.
std::vector<std::pair<std::size_t, std::size_t>> essential_separations(const AircraftLandingInstance& inst,
                                                                         std::span<const int> seq) {
    const std::size_t n = seq.size();
    auto sep = [&](std::size_t i, std::size_t j) { return inst.separation(seq[i], seq[j]); };
    // longest[i][j]: longest chain of separations from position i to j.
    std::vector<double> longest(n * n, -std::numeric_limits<double>::infinity());
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    for (std::size_t span = 1; span < n; ++span) {
        for (std::size_t i = 0; i + span < n; ++i) {
            const std::size_t j = i + span;
            double via = -std::numeric_limits<double>::infinity();
            for (std::size_t k = i + 1; k < j; ++k) via = std::max(via, longest[i * n + k] + longest[k * n + j]);
            const double direct = sep(i, j);
            if (direct > via) kept.emplace_back(i, j);
            longest[i * n + j] = std::max(direct, via);
        }
    }
    return kept;
}

}  // namespace

std::vector<double> earliest_times(const AircraftLandingInstance& inst, std::span<const int> seq) {
    std::vector<double> t(seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
        double lo = inst.planes[seq[k]].earliest;
        for (std::size_t i = 0; i < k; ++i) lo = std::max(lo, t[i] + inst.separation(seq[i], seq[k]));
        t[k] = lo;
    }
    return t;
}

SequenceScheduleResult solve_sequence(const AircraftLandingInstance& inst, std::span<const int> seq) {
    const std::size_t n = inst.size();
    require_permutation(seq, n);

    SequenceScheduleResult result;
    result.cost = std::numeric_limits<double>::infinity();

    const auto lo = earliest_times(inst, seq);
    for (std::size_t k = 0; k < n; ++k)
        if (lo[k] > inst.planes[seq[k]].latest + kTol) return result;

    // Columns: t_k, earliness u_k, lateness v_k per position, then one surplus per kept separation.
    lp::LinearProgram model;
    std::vector<std::size_t> tcol(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pl = inst.planes[seq[k]];
        tcol[k] = model.add_var(pl.earliest, pl.latest, 0.0);
        const std::size_t u = model.add_var(0.0, lp::kInfinity, pl.penalty_early);
        const std::size_t v = model.add_var(0.0, lp::kInfinity, pl.penalty_late);
        model.add_row({{tcol[k], 1.0}, {u, 1.0}, {v, -1.0}}, pl.target);
    }
    for (const auto& [i, j] : essential_separations(inst, seq)) {
        const std::size_t w = model.add_var(0.0, lp::kInfinity, 0.0);
        model.add_row({{tcol[j], 1.0}, {tcol[i], -1.0}, {w, -1.0}}, inst.separation(seq[i], seq[j]));
    }

    lp::BoundedSimplex simplex(model);
    if (simplex.solve() != lp::LpStatus::optimal) return result;

    std::vector<double> objective(model.num_vars(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        objective[tcol[k]] = 1.0;
        simplex.minimize_on_optimal_face(objective);
        objective[tcol[k]] = 0.0;
    }

    result.times.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pl = inst.planes[seq[k]];
        result.times[k] = std::clamp(simplex.value(tcol[k]), pl.earliest, pl.latest);
    }
    result.feasible = true;
    result.cost = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pl = inst.planes[seq[k]];
        const double t = result.times[k];
        result.cost += pl.penalty_early * std::max(0.0, pl.target - t) + pl.penalty_late * std::max(0.0, t - pl.target);
    }
    return result;
}

LandingSchedule to_schedule(std::span<const int> seq, const SequenceScheduleResult& result) {
    LandingSchedule sched;
    sched.times.assign(seq.size(), 0.0);
    sched.runway.assign(seq.size(), 1);
    for (std::size_t k = 0; k < seq.size() && k < result.times.size(); ++k) sched.times[seq[k]] = result.times[k];
    return sched;
}

std::vector<int> target_order(const AircraftLandingInstance& inst) {
    std::vector<int> order(inst.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return inst.planes[a].target < inst.planes[b].target; });
    return order;
}

}  // namespace promptfwa::landing
