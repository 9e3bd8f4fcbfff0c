#include "promptfwa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace promptfwa::problems {

namespace {

// Absolute slack for window and separation checks, so LP-produced times that
// land a rounding error outside a bound are not rejected.
constexpr double kFeasTol = 1e-9;

[[noreturn]] void invalid_instance(const std::string& what) { throw ParseError(what, 0); }

}  // namespace

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::airland: return "airland";
        case ProblemKind::flowshop: return "flowshop";
        case ProblemKind::pmedian: return "pmedian";
        case ProblemKind::epp: return "epp";
    }
    return "?";
}

ProblemKind problem_kind_from_string(std::string_view name) {
    if (name == "airland") return ProblemKind::airland;
    if (name == "flowshop") return ProblemKind::flowshop;
    if (name == "pmedian") return ProblemKind::pmedian;
    if (name == "epp") return ProblemKind::epp;
    throw ParseError("unknown problem '" + std::string(name) + "'", 0);
}

std::string_view to_string(Sense sense) { return sense == Sense::minimize ? "min" : "max"; }

Sense sense_from_string(std::string_view name) {
    if (name == "min") return Sense::minimize;
    if (name == "max") return Sense::maximize;
    throw ParseError("unknown sense '" + std::string(name) + "'", 0);
}

std::string_view to_string(Violation v) {
    switch (v) {
        case Violation::none: return "none";
        case Violation::window: return "window";
        case Violation::separation: return "separation";
        case Violation::not_a_permutation: return "not-a-permutation";
        case Violation::cardinality: return "cardinality";
        case Violation::bad_index: return "bad-index";
        case Violation::empty_group: return "empty-group";
        case Violation::bad_label: return "bad-label";
    }
    return "?";
}

ProblemKind kind_of(const Instance& instance) {
    return static_cast<ProblemKind>(instance.index());
}

void validate(const AircraftLandingInstance& inst) {
    const std::size_t n = inst.size();
    if (n == 0) invalid_instance("airland instance has no planes");
    if (inst.n_runways != 1) invalid_instance("only single-runway instances are supported");
    if (inst.separation.rows != n || inst.separation.cols != n)
        invalid_instance("separation matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    for (std::size_t p = 0; p < n; ++p) {
        const Plane& pl = inst.planes[p];
        if (!(pl.earliest <= pl.target && pl.target <= pl.latest))
            invalid_instance("window violation for plane " + std::to_string(p));
        if (pl.penalty_early < 0 || pl.penalty_late < 0)
            invalid_instance("negative penalty for plane " + std::to_string(p));
    }
    for (double s : inst.separation.data)
        if (!(s >= 0)) invalid_instance("negative separation");
}

void validate(const FlowShopInstance& inst) {
    if (inst.n_jobs() == 0 || inst.m_machines() == 0) invalid_instance("flow shop needs at least one job and machine");
    if (inst.proc.data.size() != inst.n_jobs() * inst.m_machines()) invalid_instance("processing matrix shape mismatch");
    for (double p : inst.proc.data)
        if (!(p >= 0)) invalid_instance("negative processing time");
}

void validate(const PMedianInstance& inst) {
    const std::size_t n = inst.n_vertices();
    if (n == 0 || inst.dist.cols != n) invalid_instance("distance matrix must be square and nonempty");
    if (inst.p < 1 || inst.p > n) invalid_instance("p must lie in 1..n");
    for (std::size_t i = 0; i < n; ++i) {
        if (inst.dist(i, i) != 0) invalid_instance("distance diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(inst.dist(i, j) >= 0)) invalid_instance("negative distance");
            if (inst.dist(i, j) != inst.dist(j, i)) invalid_instance("distance matrix is not symmetric");
        }
    }
}

void validate(const EppInstance& inst) {
    if (inst.n_individuals() < static_cast<std::size_t>(EppInstance::group_count))
        invalid_instance("equitable partition needs at least 8 individuals");
    if (inst.m_attributes() == 0) invalid_instance("equitable partition needs at least one attribute");
    for (int a : inst.attrs.data)
        if (a != 0 && a != 1) invalid_instance("attributes must be binary");
}

void validate(const Instance& inst) {
    std::visit([](const auto& i) { validate(i); }, inst);
}

double landing_penalty(const AircraftLandingInstance& inst, const std::vector<double>& times) {
    double cost = 0;
    for (std::size_t p = 0; p < inst.size(); ++p) {
        const Plane& pl = inst.planes[p];
        cost += pl.penalty_early * std::max(0.0, pl.target - times[p]) +
                pl.penalty_late * std::max(0.0, times[p] - pl.target);
    }
    return cost;
}

EvaluationOutcome evaluate_landing(const AircraftLandingInstance& inst, const LandingSchedule& sched) {
    const std::size_t n = inst.size();
    if (sched.times.size() != n) throw InputError("schedule has " + std::to_string(sched.times.size()) + " times, expected " + std::to_string(n));
    if (!sched.runway.empty() && sched.runway.size() != n) throw InputError("runway assignment length mismatch");

    auto runway_of = [&](std::size_t p) { return sched.runway.empty() ? 1 : sched.runway[p]; };

    for (std::size_t p = 0; p < n; ++p) {
        const int r = runway_of(p);
        if (r < 1 || r > inst.n_runways)
            return EvaluationOutcome::invalid(Violation::bad_index, "plane " + std::to_string(p) + " on unknown runway");
        const double t = sched.times[p];
        const Plane& pl = inst.planes[p];
        if (!std::isfinite(t) || t < pl.earliest - kFeasTol || t > pl.latest + kFeasTol)
            return EvaluationOutcome::invalid(Violation::window, "plane " + std::to_string(p) + " outside its window");
    }
    auto too_close = [&](std::size_t i, std::size_t j) {
        return EvaluationOutcome::invalid(Violation::separation,
                                          "planes " + std::to_string(i) + " and " + std::to_string(j) + " too close");
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || runway_of(i) != runway_of(j)) continue;
            const double ti = sched.times[i];
            const double tj = sched.times[j];
            if (tj - ti > kFeasTol && tj - ti < inst.separation(i, j) - kFeasTol) return too_close(i, j);
        }
    }
    // Planes landing together are fine when some order of the tied group meets every gap.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (runway_of(a) != runway_of(b)) return runway_of(a) < runway_of(b);
        return sched.times[a] < sched.times[b];
    });
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo + 1;
        while (hi < n && runway_of(order[hi]) == runway_of(order[lo]) &&
               sched.times[order[hi]] - sched.times[order[hi - 1]] <= kFeasTol)
            ++hi;
        if (hi - lo > 1) {
            // Edge a -> b: a must land first, since b followed by a breaks the gap.
            const std::size_t g = hi - lo;
            std::vector<std::size_t> indeg(g, 0);
            std::vector<std::vector<std::size_t>> succ(g);
            for (std::size_t a = 0; a < g; ++a)
                for (std::size_t b = 0; b < g; ++b) {
                    if (a == b) continue;
                    const std::size_t pa = order[lo + a], pb = order[lo + b];
                    const double gap = std::fabs(sched.times[pa] - sched.times[pb]);
                    if (gap < inst.separation(pb, pa) - kFeasTol) {
                        succ[a].push_back(b);
                        ++indeg[b];
                    }
                }
            std::vector<std::size_t> ready;
            for (std::size_t a = 0; a < g; ++a)
                if (indeg[a] == 0) ready.push_back(a);
            std::size_t placed = 0;
            while (!ready.empty()) {
                const std::size_t a = ready.back();
                ready.pop_back();
                ++placed;
                for (std::size_t b : succ[a])
                    if (--indeg[b] == 0) ready.push_back(b);
            }
            if (placed < g) return too_close(order[lo], order[lo + 1]);
        }
        lo = hi;
    }
    return EvaluationOutcome::ok(landing_penalty(inst, sched.times));
}

namespace {

bool is_permutation_of_n(const std::vector<int>& v, std::size_t n) {
    if (v.size() != n) return false;
    std::vector<char> seen(n, 0);
    for (int x : v) {
        if (x < 0 || static_cast<std::size_t>(x) >= n || seen[x]) return false;
        seen[x] = 1;
    }
    return true;
}

}  // namespace

EvaluationOutcome evaluate_flowshop(const FlowShopInstance& inst, const JobPermutation& perm) {
    const std::size_t n = inst.n_jobs();
    const std::size_t m = inst.m_machines();
    if (!is_permutation_of_n(perm.order, n))
        return EvaluationOutcome::invalid(Violation::not_a_permutation, "job order is not a permutation of 0..n-1");

    // completion[j] holds C(k, j) for the job currently at position k.
    std::vector<double> completion(m, 0.0);
    for (int job : perm.order) {
        double prev_machine = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            completion[j] = std::max(completion[j], prev_machine) + inst.proc(job, j);
            prev_machine = completion[j];
        }
    }
    return EvaluationOutcome::ok(completion[m - 1]);
}

EvaluationOutcome evaluate_pmedian(const PMedianInstance& inst, const MedianSet& medians) {
    const std::size_t n = inst.n_vertices();
    std::vector<int> chosen = medians.vertices;
    for (int v : chosen)
        if (v < 0 || static_cast<std::size_t>(v) >= n)
            return EvaluationOutcome::invalid(Violation::bad_index, "median " + std::to_string(v) + " out of range");
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    if (chosen.size() != inst.p || medians.vertices.size() != inst.p)
        return EvaluationOutcome::invalid(Violation::cardinality,
                                          "expected " + std::to_string(inst.p) + " distinct medians");

    double total = 0;
    for (std::size_t v = 0; v < n; ++v) {
        double nearest = inst.dist(v, chosen.front());
        for (int m : chosen) nearest = std::min(nearest, inst.dist(v, m));
        total += nearest;
    }
    return EvaluationOutcome::ok(total);
}

EvaluationOutcome evaluate_epp(const EppInstance& inst, const GroupAssignment& assign, EppOptions options) {
    constexpr int G = EppInstance::group_count;
    const std::size_t n = inst.n_individuals();
    const std::size_t m = inst.m_attributes();
    if (assign.labels.size() != n)
        throw InputError("assignment has " + std::to_string(assign.labels.size()) + " labels, expected " + std::to_string(n));

    std::vector<int> group_size(G, 0);
    for (int label : assign.labels) {
        if (label < 1 || label > G) return EvaluationOutcome::invalid(Violation::bad_label, "label " + std::to_string(label) + " outside 1..8");
        ++group_size[label - 1];
    }
    if (options.require_all_groups)
        for (int g = 0; g < G; ++g)
            if (group_size[g] == 0) return EvaluationOutcome::invalid(Violation::empty_group, "group " + std::to_string(g + 1) + " is empty");

    // counts(g, a): members of group g with attribute a set.
    Matrix<int> counts(G, m, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) counts(assign.labels[i] - 1, a) += inst.attrs(i, a);

    double total = 0;
    for (std::size_t a = 0; a < m; ++a) {
        double sum = 0;
        for (int g = 0; g < G; ++g) sum += counts(g, a);
        const double mean = sum / G;
        double dev = 0;
        for (int g = 0; g < G; ++g) dev += std::abs(counts(g, a) - mean);
        total += dev / G;
    }
    return EvaluationOutcome::ok(total);
}

EvaluationOutcome evaluate(const Instance& inst, const Solution& solution, EppOptions options) {
    if (inst.index() != solution.index()) throw InputError("solution does not match the instance's problem");
    switch (kind_of(inst)) {
        case ProblemKind::airland:
            return evaluate_landing(std::get<AircraftLandingInstance>(inst), std::get<LandingSchedule>(solution));
        case ProblemKind::flowshop:
            return evaluate_flowshop(std::get<FlowShopInstance>(inst), std::get<JobPermutation>(solution));
        case ProblemKind::pmedian:
            return evaluate_pmedian(std::get<PMedianInstance>(inst), std::get<MedianSet>(solution));
        case ProblemKind::epp:
            return evaluate_epp(std::get<EppInstance>(inst), std::get<GroupAssignment>(solution), options);
    }
    throw InputError("unknown problem");
}

PerformanceRatio performance_ratio(double best, double reference, Sense sense) {
    if (best == reference) return {1.0, sense};
    const double denominator = sense == Sense::minimize ? best : reference;
    if (!(denominator > 0))
        throw DomainError("performance ratio denominator must be positive (best=" + std::to_string(best) +
                          ", reference=" + std::to_string(reference) + ")");
    const double value = sense == Sense::minimize ? reference / best : best / reference;
    if (!(value >= 0)) throw DomainError("performance ratio is negative");
    return {value, sense};
}

double outcome_ratio(const EvaluationOutcome& outcome, double reference, Sense sense) {
    if (!outcome.feasible || !outcome.objective) return 0.0;
    return performance_ratio(*outcome.objective, reference, sense).value;
}

}  // namespace promptfwa::problems
