#pragma once
// Independent reference computations. Nothing here calls the library's solvers
// or evaluators, so agreement is a real cross-check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "promptfwa/problems.hpp"
#include "promptfwa/rng.hpp"

namespace oracle {

using namespace promptfwa::problems;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridResult {
    std::vector<double> times;  // by sequence position
    double cost = kInf;
    bool feasible = false;
};

struct GridTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exhaustive search over times on a grid of `step`, planes landing in `seq` order.
inline GridResult grid_schedule(const AircraftLandingInstance& inst, const std::vector<int>& seq, double step) {
    const std::size_t n = seq.size();
    double combos = 1;
    for (int p : seq) combos *= std::floor((inst.planes[p].latest - inst.planes[p].earliest) / step) + 1;
    if (combos > 1e6) throw GridTooLarge("grid larger than 10^6 combinations");

    GridResult best;
    std::vector<double> t(n);
    auto cost_of = [&] {
        double c = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto& pl = inst.planes[seq[k]];
            if (t[k] < pl.target) c += pl.penalty_early * (pl.target - t[k]);
            else c += pl.penalty_late * (t[k] - pl.target);
        }
        return c;
    };
    auto dfs = [&](auto&& self, std::size_t k) -> void {
        if (k == n) {
            const double c = cost_of();
            if (c < best.cost) {
                best.cost = c;
                best.times = t;
                best.feasible = true;
            }
            return;
        }
        const auto& pl = inst.planes[seq[k]];
        const long steps = static_cast<long>(std::floor((pl.latest - pl.earliest) / step));
        for (long s = 0; s <= steps; ++s) {
            t[k] = pl.earliest + static_cast<double>(s) * step;
            bool ok = true;
            for (std::size_t j = 0; j < k && ok; ++j) ok = t[k] - t[j] >= inst.separation(seq[j], seq[k]);
            if (ok) self(self, k + 1);
        }
    };
    dfs(dfs, 0);
    return best;
}

// C[k][j] = max(C[k-1][j], C[k][j-1]) + p, written out as a full table.
inline double makespan(const FlowShopInstance& inst, const std::vector<int>& perm) {
    const std::size_t n = perm.size(), m = inst.m_machines();
    std::vector<std::vector<double>> C(n + 1, std::vector<double>(m + 1, 0.0));
    for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t j = 1; j <= m; ++j) C[k][j] = std::max(C[k - 1][j], C[k][j - 1]) + inst.proc(perm[k - 1], j - 1);
    return C[n][m];
}

inline double pmedian_cost(const PMedianInstance& inst, const std::vector<int>& medians) {
    double total = 0;
    for (std::size_t v = 0; v < inst.n_vertices(); ++v) {
        double d = kInf;
        for (int m : medians) d = std::min(d, inst.dist(v, m));
        total += d;
    }
    return total;
}

// Sum over attributes of the mean absolute deviation of the 8 group counts.
inline double epp_cost(const EppInstance& inst, const std::vector<int>& labels) {
    double total = 0;
    for (std::size_t a = 0; a < inst.m_attributes(); ++a) {
        double counts[8] = {};
        for (std::size_t i = 0; i < labels.size(); ++i) counts[labels[i] - 1] += inst.attrs(i, a);
        const double mean = std::accumulate(counts, counts + 8, 0.0) / 8.0;
        double dev = 0;
        for (double c : counts) dev += std::fabs(c - mean);
        total += dev / 8.0;
    }
    return total;
}

// Restricted growth strings over labels 1..8 using all 8 labels: one labeling
// per partition into 8 blocks, which covers every objective value up to relabeling.
template <class F>
void for_each_canonical_labeling(std::size_t n, F&& f) {
    std::vector<int> a(n, 0);
    auto rec = [&](auto&& self, std::size_t i, int used) -> void {
        if (n - i < static_cast<std::size_t>(8 - used)) return;
        if (i == n) {
            f(a);
            return;
        }
        for (int g = 1; g <= std::min(used + 1, 8); ++g) {
            a[i] = g;
            self(self, i + 1, std::max(used, g));
        }
    };
    rec(rec, 0, 0);
}

// ---- generators ----------------------------------------------------------------

inline AircraftLandingInstance random_landing(promptfwa::Rng& rng, std::size_t n) {
    AircraftLandingInstance inst;
    for (std::size_t p = 0; p < n; ++p) {
        Plane pl;
        pl.earliest = static_cast<double>(rng.between(0, 5));
        pl.target = pl.earliest + static_cast<double>(rng.between(0, 6));
        pl.latest = pl.target + static_cast<double>(rng.between(0, 6));
        pl.penalty_early = static_cast<double>(rng.between(0, 5));
        pl.penalty_late = static_cast<double>(rng.between(0, 5));
        inst.planes.push_back(pl);
    }
    inst.separation = Matrix<double>(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) inst.separation(i, j) = static_cast<double>(rng.between(0, 4));
    return inst;
}

inline FlowShopInstance random_flowshop(promptfwa::Rng& rng, std::size_t n, std::size_t m) {
    FlowShopInstance inst{Matrix<double>(n, m)};
    for (auto& x : inst.proc.data) x = static_cast<double>(rng.between(0, 9));
    return inst;
}

inline PMedianInstance random_pmedian(promptfwa::Rng& rng, std::size_t n, std::size_t p) {
    PMedianInstance inst{p, Matrix<double>(n, n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) inst.dist(i, j) = inst.dist(j, i) = static_cast<double>(rng.between(1, 20));
    return inst;
}

inline EppInstance random_epp(promptfwa::Rng& rng, std::size_t n, std::size_t m) {
    EppInstance inst{Matrix<int>(n, m)};
    for (auto& x : inst.attrs.data) x = rng.chance(0.5) ? 1 : 0;
    return inst;
}

}  // namespace oracle
