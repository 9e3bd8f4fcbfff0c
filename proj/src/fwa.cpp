#include "promptfwa/fwa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "promptfwa/landing.hpp"

namespace promptfwa::fwa {

using problems::AircraftLandingInstance;
using problems::EppInstance;
using problems::FlowShopInstance;
using problems::PMedianInstance;

namespace {

// max(1, floor(n * rate)) as in the reference loop; a zero rate disables mutation.
std::size_t mutation_target(std::size_t n, double rate) {
    if (rate <= 0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * rate)));
}


using Key = std::vector<int>;
constexpr int kGroups = EppInstance::group_count;

std::size_t payload_size(const Instance& instance) {
    return std::visit(
        [](const auto& inst) -> std::size_t {
            using T = std::decay_t<decltype(inst)>;
            if constexpr (std::is_same_v<T, AircraftLandingInstance>) return inst.size();
            else if constexpr (std::is_same_v<T, FlowShopInstance>) return inst.n_jobs();
            else if constexpr (std::is_same_v<T, PMedianInstance>) return inst.n_vertices();
            else return inst.n_individuals();
        },
        instance);
}

Individual from_sequence(std::vector<int> seq, landing::SequenceScheduleResult r) {
    Individual ind;
    ind.payload = std::move(seq);
    ind.fitness = r.feasible ? r.cost : kInfeasible;
    ind.times = std::move(r.times);
    return ind;
}

Individual airland_individual(const AircraftLandingInstance& inst, std::vector<int> seq) {
    auto r = landing::solve_sequence(inst, seq);
    return from_sequence(std::move(seq), std::move(r));
}

std::vector<int> positions_of(std::span<const int> seq) {
    std::vector<int> pos(seq.size());
    for (std::size_t k = 0; k < seq.size(); ++k) pos[seq[k]] = static_cast<int>(k);
    return pos;
}

// Moves the plane at cur_pos so that it ends up at new_pos.
std::vector<int> apply_insertion(const std::vector<int>& idx, int cur_pos, int new_pos) {
    std::vector<int> out = idx;
    if (new_pos == cur_pos) return out;
    const int plane = out[cur_pos];
    out.erase(out.begin() + cur_pos);
    out.insert(out.begin() + new_pos, plane);
    return out;
}

int clampi(long v, long lo, long hi) { return static_cast<int>(std::clamp(v, lo, hi)); }

// Python's int() on a float truncates toward zero.
long trunc_normal(Rng& rng, double sigma) { return static_cast<long>(std::trunc(rng.normal(0.0, sigma))); }

// ---- guided landing operators ------------------------------------------------

struct LandingGuide {
    const AircraftLandingInstance& inst;
    std::size_t n;
    std::vector<int> target_pos;
    std::vector<double> penalties;

    explicit LandingGuide(const AircraftLandingInstance& i) : inst(i), n(i.size()) {
        target_pos = positions_of(landing::target_order(i));
        penalties.resize(n);
        for (std::size_t p = 0; p < n; ++p) penalties[p] = i.planes[p].penalty_early + i.planes[p].penalty_late;
    }

    std::vector<double> displacement(const std::vector<int>& pos) const {
        std::vector<double> d(n);
        for (std::size_t p = 0; p < n; ++p) d[p] = std::abs(pos[p] - target_pos[p]);
        return d;
    }

    int argmax(const std::vector<double>& v) const {
        return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    }
};

struct Weights {
    std::vector<double> w;
    std::vector<int> pos;
    std::vector<double> disp;
};

Weights explode_weights(const LandingGuide& g, const std::vector<int>& idx) {
    Weights out;
    out.pos = positions_of(idx);
    out.disp = g.displacement(out.pos);
    out.w.resize(g.n);
    for (std::size_t p = 0; p < g.n; ++p) out.w[p] = 1.0 + out.disp[p] * (1.0 + g.penalties[p]);
    return out;
}

Weights mutate_weights(const LandingGuide& g, const std::vector<int>& idx) {
    Weights out;
    out.pos = positions_of(idx);
    out.disp = g.displacement(out.pos);
    out.w.resize(g.n);
    for (std::size_t p = 0; p < g.n; ++p) out.w[p] = 1.0 + (out.disp[p] + 1.0) * (g.penalties[p] + 1.0);
    return out;
}

void adjacent_swap(std::vector<int>& idx, std::size_t p) { std::swap(idx[p], idx[p + 1]); }

// Accepts adjacent swaps that lower the LP cost.
Individual explode_local_improve(const LandingGuide& g, Individual best, int trials, Rng& rng) {
    if (g.n < 2) return best;
    while (trials-- > 0) {
        auto cand = best.payload;
        adjacent_swap(cand, rng.below(g.n - 1));
        auto r = landing::solve_sequence(g.inst, cand);
        if (r.feasible && r.cost < best.fitness) best = from_sequence(std::move(cand), std::move(r));
    }
    return best;
}

std::vector<Individual> explode_guided(const LandingGuide& g, const Individual& firework, int amp,
                                       const FwaParams& params, Rng& rng) {
    const std::size_t n = g.n;
    const std::size_t per_fw = std::max<std::size_t>(1, params.sp_size / params.fw_size);
    std::vector<Individual> out;
    std::set<Key> seen{firework.payload};
    static constexpr double kMoveMix[] = {0.5, 0.3, 0.2};

    for (std::size_t s = 0; s < per_fw; ++s) {
        for (int tries = 0; tries < 10; ++tries) {
            auto idx = firework.payload;
            auto [w, pos, disp] = explode_weights(g, idx);
            const long steps = rng.between(1, std::max(1, amp));
            for (long step = 0; step < steps; ++step) {
                const std::size_t move = rng.weighted(kMoveMix);
                if (move == 0) {
                    // pos is only refreshed by insertions, so after a swap it may be stale.
                    const std::size_t i = rng.weighted(w);
                    std::size_t j = rng.weighted(w);
                    if (i == j) j = (j + 1) % n;
                    std::swap(idx[pos[i]], idx[pos[j]]);
                } else if (move == 1) {
                    const std::size_t k = rng.weighted(w);
                    const long jitter = trunc_normal(rng, std::max(1, amp / 2));
                    const int new_pos = clampi(g.target_pos[k] + jitter, 0, static_cast<long>(n) - 1);
                    pos = positions_of(idx);
                    idx = apply_insertion(idx, pos[k], new_pos);
                } else if (n >= 2) {
                    const long hi = std::min<long>(static_cast<long>(n), amp + 2);
                    long length = hi > 2 ? rng.between(2, hi - 1) : 2;
                    length = std::max<long>(2, std::min<long>(static_cast<long>(n), length));
                    const long start = rng.between(0, static_cast<long>(n) - length);
                    std::reverse(idx.begin() + start, idx.begin() + start + length);
                }
            }
            if (seen.count(idx)) continue;

            auto r = landing::solve_sequence(g.inst, idx);
            if (!r.feasible) {
                bool repaired = false;
                auto cand = idx;
                for (int a = 0; a < 3 && n >= 2; ++a) {
                    adjacent_swap(cand, rng.below(n - 1));
                    auto r2 = landing::solve_sequence(g.inst, cand);
                    if (r2.feasible) {
                        idx = cand;
                        r = std::move(r2);
                        repaired = true;
                        break;
                    }
                }
                if (!repaired) continue;
            }
            auto ind = explode_local_improve(g, from_sequence(std::move(idx), std::move(r)), std::min(3, amp), rng);
            if (seen.count(ind.payload)) continue;
            seen.insert(ind.payload);
            out.push_back(std::move(ind));
            break;
        }
    }
    return out;
}

std::vector<int> mutate_once(const LandingGuide& g, const std::vector<int>& base, Rng& rng) {
    const std::size_t n = g.n;
    const long nl = static_cast<long>(n);
    Weights wt = mutate_weights(g, base);
    auto idx = base;
    static constexpr double kOpMix[] = {0.35, 0.35, 0.2, 0.1};
    const int steps = 1 + (rng.uniform() < 0.5 ? 1 : 0);
    for (int s = 0; s < steps; ++s) {
        const std::size_t op = rng.weighted(kOpMix);
        if (op == 0 && n >= 2) {
            const std::size_t i = rng.weighted(wt.w);
            std::size_t j = rng.weighted(wt.w);
            if (i == j) j = (j + 1) % n;
            const int ip = wt.pos[i], jp = wt.pos[j];
            std::swap(idx[ip], idx[jp]);
            wt.pos[idx[ip]] = ip;
            wt.pos[idx[jp]] = jp;
        } else if (op == 1) {
            const std::size_t k = rng.uniform() < 0.6 ? static_cast<std::size_t>(g.argmax(wt.disp)) : rng.weighted(wt.w);
            const long sigma = std::max<long>(1, nl / 10);
            const int new_pos = clampi(g.target_pos[k] + trunc_normal(rng, static_cast<double>(sigma)), 0, nl - 1);
            idx = apply_insertion(idx, positions_of(idx)[k], new_pos);
            wt = mutate_weights(g, idx);
        } else if (op == 2 && n >= 3) {
            const long len = rng.between(2, std::min<long>(8, nl));
            const long start = rng.between(0, nl - len);
            std::reverse(idx.begin() + start, idx.begin() + start + len);
            wt = mutate_weights(g, idx);
        } else if (op == 3) {
            const long len = n >= 4 ? rng.between(1, 3) : 1;
            if (nl > len) {
                const long start = rng.between(0, nl - len);
                std::vector<int> block(idx.begin() + start, idx.begin() + start + len);
                std::vector<int> rest(idx.begin(), idx.begin() + start);
                rest.insert(rest.end(), idx.begin() + start + len, idx.end());
                double mean = 0;
                for (int p : block) mean += g.target_pos[p];
                mean /= static_cast<double>(len);
                const long tgt = static_cast<long>(std::nearbyint(mean));  // ties to even
                const long jitter = trunc_normal(rng, static_cast<double>(std::max<long>(1, nl / 12)));
                const long ins = std::clamp(tgt + jitter, 0L, nl - len);
                rest.insert(rest.begin() + ins, block.begin(), block.end());
                idx = std::move(rest);
                wt = mutate_weights(g, idx);
            }
        }
    }
    return idx;
}

Individual mutate_local_improve(const LandingGuide& g, Individual best, Rng& rng) {
    const std::size_t n = g.n;
    for (int trials = 4; trials > 0; --trials) {
        std::vector<int> cand;
        if (rng.uniform() < 0.6 && n >= 2) {
            cand = best.payload;
            adjacent_swap(cand, rng.below(n - 1));
        } else if (n >= 3) {
            const long len = rng.between(2, std::min<long>(8, static_cast<long>(n)));
            const long start = rng.between(0, static_cast<long>(n) - len);
            cand = best.payload;
            std::reverse(cand.begin() + start, cand.begin() + start + len);
        } else {
            continue;
        }
        auto r = landing::solve_sequence(g.inst, cand);
        if (r.feasible && r.cost < best.fitness) best = from_sequence(std::move(cand), std::move(r));
    }
    return best;
}

std::vector<Individual> mutate_guided(const LandingGuide& g, std::span<const Individual> sparks,
                                      const FwaParams& params, Rng& rng) {
    std::vector<Individual> out;
    if (sparks.empty()) return out;
    const std::size_t n = g.n;
    std::set<Key> seen;
    for (const auto& s : sparks) seen.insert(s.payload);

    const std::size_t target = mutation_target(sparks.size(), params.mutation_rate);
    std::vector<std::size_t> order(sparks.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(std::min(target, order.size()));

    for (std::size_t k : order) {
        const auto& base = sparks[k].payload;
        for (int attempts = 6; attempts > 0; --attempts) {
            auto cand = mutate_once(g, base, rng);
            if (seen.count(cand)) continue;
            auto r = landing::solve_sequence(g.inst, cand);
            if (!r.feasible) {
                bool repaired = false;
                auto cur = cand;
                for (int t = 0; t < 5; ++t) {
                    auto w0 = mutate_weights(g, cur);
                    const std::size_t focus =
                        rng.uniform() < 0.7 ? static_cast<std::size_t>(g.argmax(w0.disp)) : rng.weighted(w0.w);
                    const long jitter = trunc_normal(rng, static_cast<double>(std::max<long>(1, static_cast<long>(n) / 12)));
                    const int new_pos = clampi(g.target_pos[focus] + jitter, 0, static_cast<long>(n) - 1);
                    cur = apply_insertion(cur, w0.pos[focus], new_pos);
                    if (n >= 2 && rng.uniform() < 0.6) adjacent_swap(cur, rng.below(n - 1));
                    auto r2 = landing::solve_sequence(g.inst, cur);
                    if (r2.feasible) {
                        cand = cur;
                        r = std::move(r2);
                        repaired = true;
                        break;
                    }
                }
                if (!repaired) continue;
            }
            auto ind = mutate_local_improve(g, from_sequence(std::move(cand), std::move(r)), rng);
            if (seen.count(ind.payload)) continue;
            seen.insert(ind.payload);
            out.push_back(std::move(ind));
            break;
        }
        if (out.size() >= target) break;
    }
    return out;
}

// ---- uniform (baseline) moves --------------------------------------------------

void random_permutation_move(std::vector<int>& p, Rng& rng) {
    const std::size_t n = p.size();
    if (n < 2) return;
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    switch (rng.below(3)) {
        case 0:
            std::swap(p[i], p[j]);
            break;
        case 1:
            p = apply_insertion(p, static_cast<int>(i), static_cast<int>(j));
            break;
        default:
            std::reverse(p.begin() + std::min(i, j), p.begin() + std::max(i, j) + 1);
    }
}

void random_bit_swap(std::vector<int>& bits, Rng& rng) {
    std::vector<std::size_t> ones, zeros;
    for (std::size_t i = 0; i < bits.size(); ++i) (bits[i] ? ones : zeros).push_back(i);
    if (ones.empty() || zeros.empty()) return;
    bits[ones[rng.below(ones.size())]] = 0;
    bits[zeros[rng.below(zeros.size())]] = 1;
}

void cover_groups(std::vector<int>& labels, Rng& rng) {
    std::array<std::size_t, kGroups + 1> count{};
    for (int l : labels) ++count[l];
    for (int g = 1; g <= kGroups; ++g) {
        if (count[g] > 0) continue;
        std::vector<std::size_t> donors;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (count[labels[i]] > 1) donors.push_back(i);
        if (donors.empty()) return;
        const std::size_t i = donors[rng.below(donors.size())];
        --count[labels[i]];
        labels[i] = g;
        ++count[g];
    }
}

void random_relabel(std::vector<int>& labels, Rng& rng) {
    if (labels.empty()) return;
    const std::size_t i = rng.below(labels.size());
    labels[i] = 1 + static_cast<int>((static_cast<std::size_t>(labels[i] - 1) + 1 + rng.below(kGroups - 1)) % kGroups);
    cover_groups(labels, rng);
}

void random_move(Encoding enc, std::vector<int>& payload, Rng& rng) {
    switch (enc) {
        case Encoding::permutation: random_permutation_move(payload, rng); break;
        case Encoding::fixed_weight_binary: random_bit_swap(payload, rng); break;
        case Encoding::group_labels: random_relabel(payload, rng); break;
    }
}

std::vector<Individual> explode_uniform(const Instance& instance, const Individual& firework, int amp,
                                        const FwaParams& params, Rng& rng) {
    const Encoding enc = encoding_of(instance);
    const std::size_t per_fw = std::max<std::size_t>(1, params.sp_size / params.fw_size);
    std::vector<Individual> out;
    std::set<Key> seen{firework.payload};
    for (std::size_t s = 0; s < per_fw; ++s) {
        for (int tries = 0; tries < 10; ++tries) {
            auto cand = firework.payload;
            const long steps = enc == Encoding::permutation ? rng.between(1, std::max(1, amp)) : std::max(1, amp);
            for (long k = 0; k < steps; ++k) random_move(enc, cand, rng);
            if (seen.count(cand)) continue;
            seen.insert(cand);
            out.push_back(make_individual(instance, std::move(cand)));
            break;
        }
    }
    return out;
}

std::vector<Individual> mutate_uniform(const Instance& instance, std::span<const Individual> sparks,
                                       const FwaParams& params, Rng& rng) {
    std::vector<Individual> out;
    if (sparks.empty()) return out;
    const Encoding enc = encoding_of(instance);
    std::set<Key> seen;
    for (const auto& s : sparks) seen.insert(s.payload);
    const std::size_t target = mutation_target(sparks.size(), params.mutation_rate);
    std::vector<std::size_t> order(sparks.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(std::min(target, order.size()));
    for (std::size_t k : order) {
        for (int attempts = 6; attempts > 0; --attempts) {
            auto cand = sparks[k].payload;
            random_move(enc, cand, rng);
            if (seen.count(cand)) continue;
            seen.insert(cand);
            out.push_back(make_individual(instance, std::move(cand)));
            break;
        }
        if (out.size() >= target) break;
    }
    return out;
}

// ---- initialisation helpers -------------------------------------------------

std::vector<int> random_covering_labels(std::size_t n, Rng& rng) {
    std::vector<int> labels(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t k = 0; k < n; ++k)
        labels[order[k]] = k < static_cast<std::size_t>(kGroups) ? static_cast<int>(k) + 1
                                                                  : 1 + static_cast<int>(rng.below(kGroups));
    return labels;
}

// Adds individuals one at a time to the group that keeps attribute counts most even.
std::vector<int> greedy_balanced_labels(const EppInstance& inst, Rng& rng) {
    const std::size_t n = inst.n_individuals(), m = inst.m_attributes();
    std::vector<double> total(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) total[a] += inst.attrs(i, a);
    std::vector<double> count(static_cast<std::size_t>(kGroups) * m, 0.0);
    std::array<std::size_t, kGroups> size{};
    std::vector<int> labels(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        int best_g = 0;
        double best_dev = std::numeric_limits<double>::infinity();
        for (int g = 0; g < kGroups; ++g) {
            double dev = 0;
            for (std::size_t a = 0; a < m; ++a) {
                const double mean = total[a] / kGroups;
                for (int h = 0; h < kGroups; ++h) {
                    const double c = count[h * m + a] + (h == g ? inst.attrs(i, a) : 0);
                    dev += std::abs(c - mean);
                }
            }
            if (dev < best_dev - 1e-12 || (dev <= best_dev + 1e-12 && size[g] < size[best_g])) {
                best_dev = dev;
                best_g = g;
            }
        }
        labels[i] = best_g + 1;
        ++size[best_g];
        for (std::size_t a = 0; a < m; ++a) count[best_g * m + a] += inst.attrs(i, a);
    }
    cover_groups(labels, rng);
    return labels;
}

double distance(Encoding enc, const Key& a, const Key& b, const std::vector<int>& pa, const std::vector<int>& pb) {
    double d = 0;
    if (enc == Encoding::permutation) {
        for (std::size_t k = 0; k < pa.size(); ++k) d += std::abs(pa[k] - pb[k]);
        return pa.empty() ? 0.0 : d / static_cast<double>(pa.size());
    }
    for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k];
    return d;
}

}  // namespace

// ---- public API ---------------------------------------------------------------

std::string_view to_string(Preset preset) { return preset == Preset::baseline ? "baseline" : "appendix"; }

Preset preset_from_string(std::string_view name) {
    if (name == "baseline") return Preset::baseline;
    if (name == "appendix") return Preset::appendix;
    throw ConfigError("unknown preset: " + std::string(name));
}

Encoding encoding_of(const Instance& instance) {
    switch (problems::kind_of(instance)) {
        case problems::ProblemKind::airland:
        case problems::ProblemKind::flowshop: return Encoding::permutation;
        case problems::ProblemKind::pmedian: return Encoding::fixed_weight_binary;
        case problems::ProblemKind::epp: break;
    }
    return Encoding::group_labels;
}

void FwaParams::validate() const {
    if (fw_size < 1) throw ConfigError("fw_size must be at least 1");
    if (sp_size < fw_size) throw ConfigError("sp_size must be at least fw_size");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation_rate must lie in [0, 1]");
    if (!(init_amp > 0.0) || !std::isfinite(init_amp)) throw ConfigError("init_amp must be positive");
    if (stall_limit < 1) throw ConfigError("stall_limit must be at least 1");
}

problems::Solution to_solution(const Instance& instance, const Individual& ind) {
    return std::visit(
        [&](const auto& inst) -> problems::Solution {
            using T = std::decay_t<decltype(inst)>;
            if constexpr (std::is_same_v<T, AircraftLandingInstance>) {
                landing::SequenceScheduleResult r;
                r.times = ind.times;
                auto sched = landing::to_schedule(ind.payload, r);
                if (ind.times.size() != ind.payload.size()) {
                    // No feasible times: fall back to earliest-time propagation.
                    r.times = landing::earliest_times(inst, ind.payload);
                    sched = landing::to_schedule(ind.payload, r);
                }
                return sched;
            } else if constexpr (std::is_same_v<T, FlowShopInstance>) {
                return problems::JobPermutation{ind.payload};
            } else if constexpr (std::is_same_v<T, PMedianInstance>) {
                problems::MedianSet m;
                for (std::size_t v = 0; v < ind.payload.size(); ++v)
                    if (ind.payload[v]) m.vertices.push_back(static_cast<int>(v));
                return m;
            } else {
                return problems::GroupAssignment{ind.payload};
            }
        },
        instance);
}

bool structurally_valid(const Instance& instance, std::span<const int> payload) {
    const std::size_t n = payload_size(instance);
    if (payload.size() != n) return false;
    switch (encoding_of(instance)) {
        case Encoding::permutation: {
            std::vector<char> seen(n, 0);
            for (int v : payload) {
                if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v]) return false;
                seen[v] = 1;
            }
            return true;
        }
        case Encoding::fixed_weight_binary: {
            std::size_t ones = 0;
            for (int v : payload) {
                if (v != 0 && v != 1) return false;
                ones += static_cast<std::size_t>(v);
            }
            return ones == std::get<PMedianInstance>(instance).p;
        }
        case Encoding::group_labels: {
            std::array<bool, kGroups + 1> used{};
            for (int v : payload) {
                if (v < 1 || v > kGroups) return false;
                used[v] = true;
            }
            return std::all_of(used.begin() + 1, used.end(), [](bool b) { return b; });
        }
    }
    return false;
}

Individual make_individual(const Instance& instance, std::vector<int> payload) {
    if (const auto* air = std::get_if<AircraftLandingInstance>(&instance)) return airland_individual(*air, std::move(payload));
    Individual ind;
    ind.payload = std::move(payload);
    if (structurally_valid(instance, ind.payload)) {
        const auto outcome = problems::evaluate(instance, to_solution(instance, ind));
        if (outcome.feasible) ind.fitness = *outcome.objective;
    }
    return ind;
}

BudgetedEvaluator::BudgetedEvaluator(const Instance& instance, EvaluationBudget budget)
    : instance_(instance), budget_(budget), start_(std::chrono::steady_clock::now()) {}

bool BudgetedEvaluator::stop() const {
    if (budget_.max_evaluations && evaluations_ >= *budget_.max_evaluations) return true;
    if (budget_.wall_clock && std::chrono::steady_clock::now() - start_ >= *budget_.wall_clock) return true;
    return false;
}

std::optional<double> BudgetedEvaluator::compute(const Individual& ind) {
    if (stop()) return std::nullopt;
    ++evaluations_;
    double f = kInfeasible;
    if (structurally_valid(instance_, ind.payload)) {
        const auto outcome = problems::evaluate(instance_, to_solution(instance_, ind));
        if (outcome.feasible) f = *outcome.objective;
    }
    if (std::isfinite(f) && (!best_ || f < best_fitness_)) {
        best_ = ind;
        best_fitness_ = f;
    }
    return f;
}

std::vector<Individual> initialize_population(const Instance& instance, Preset preset, const FwaParams& params, Rng& rng) {
    params.validate();
    if (preset == Preset::appendix && !std::holds_alternative<AircraftLandingInstance>(instance))
        throw ConfigError("the appendix preset only supports aircraft landing");
    std::vector<Individual> pop;
    const std::size_t n = payload_size(instance);
    if (const auto* air = std::get_if<AircraftLandingInstance>(&instance)) {
        const auto seed = airland_individual(*air, landing::target_order(*air));
        pop.assign(params.fw_size, seed);
    } else if (std::holds_alternative<FlowShopInstance>(instance)) {
        for (std::size_t i = 0; i < params.fw_size; ++i) {
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            pop.push_back(make_individual(instance, std::move(perm)));
        }
    } else if (const auto* pm = std::get_if<PMedianInstance>(&instance)) {
        for (std::size_t i = 0; i < params.fw_size; ++i) {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            std::vector<int> bits(n, 0);
            for (std::size_t k = 0; k < pm->p && k < n; ++k) bits[order[k]] = 1;
            pop.push_back(make_individual(instance, std::move(bits)));
        }
    } else {
        const auto& epp = std::get<EppInstance>(instance);
        for (std::size_t i = 0; i < params.fw_size; ++i) {
            auto labels = i == 1 ? greedy_balanced_labels(epp, rng) : random_covering_labels(n, rng);
            pop.push_back(make_individual(instance, std::move(labels)));
        }
    }
    return pop;
}

std::vector<Individual> initialize_population(const Instance& instance, Preset preset, const FwaParams& params,
                                              std::uint64_t seed) {
    Rng rng(seed);
    return initialize_population(instance, preset, params, rng);
}

std::vector<int> adaptive_amplitudes(std::span<const double> fitnesses, double init_amp, std::size_t fw_size) {
    const double cap = static_cast<double>(std::max<std::size_t>(1, fw_size));
    auto clamp_amp = [&](double a) { return static_cast<int>(std::clamp(std::floor(a), 1.0, cap)); };
    double max_f = -std::numeric_limits<double>::infinity();
    for (double f : fitnesses)
        if (std::isfinite(f)) max_f = std::max(max_f, f);
    std::vector<int> amps;
    amps.reserve(fitnesses.size());
    for (double f : fitnesses) {
        if (!(max_f > 0.0)) {
            amps.push_back(clamp_amp(init_amp));
            continue;
        }
        const double ratio = std::isfinite(f) ? f / max_f : 1.0;
        amps.push_back(clamp_amp(init_amp * (1.5 - ratio)));
    }
    return amps;
}

std::vector<Individual> explode(const Instance& instance, const Individual& firework, int amp, Preset preset,
                                const FwaParams& params, Rng& rng) {
    if (preset == Preset::appendix) {
        const auto* air = std::get_if<AircraftLandingInstance>(&instance);
        if (!air) throw ConfigError("the appendix preset only supports aircraft landing");
        return explode_guided(LandingGuide(*air), firework, std::max(1, amp), params, rng);
    }
    return explode_uniform(instance, firework, std::max(1, amp), params, rng);
}

std::vector<Individual> mutate_sparks(const Instance& instance, std::span<const Individual> sparks, const FwaParams& params,
                                      Preset preset, Rng& rng) {
    if (preset == Preset::appendix) {
        const auto* air = std::get_if<AircraftLandingInstance>(&instance);
        if (!air) throw ConfigError("the appendix preset only supports aircraft landing");
        return mutate_guided(LandingGuide(*air), sparks, params, rng);
    }
    return mutate_uniform(instance, sparks, params, rng);
}

std::vector<Individual> select_next(const Instance& instance, std::span<const Individual> population,
                                    std::span<const Individual> sparks, std::span<const Individual> mutants,
                                    const FwaParams& params) {
    std::vector<const Individual*> cand;
    for (auto group : {population, sparks, mutants})
        for (const auto& ind : group) cand.push_back(&ind);
    if (cand.empty()) return {};

    const Encoding enc = encoding_of(instance);
    const std::size_t n = payload_size(instance);
    auto fit = [&](std::size_t i) { return std::isfinite(cand[i]->fitness) ? cand[i]->fitness : kInfeasible; };
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit(a) < fit(b); });

    std::vector<std::vector<int>> posmap(cand.size());
    if (enc == Encoding::permutation)
        for (std::size_t i = 0; i < cand.size(); ++i)
            if (cand[i]->payload.size() == n) posmap[i] = positions_of(cand[i]->payload);

    const double threshold = std::max(1.0, static_cast<double>(n) / 12.0);
    const std::size_t want = params.fw_size;
    const std::size_t elite_quota = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(want) * 0.6));
    std::vector<std::size_t> chosen;
    std::vector<char> taken(cand.size(), 0);
    std::set<Key> keys;
    auto take = [&](std::size_t i) {
        chosen.push_back(i);
        taken[i] = 1;
        keys.insert(cand[i]->payload);
    };

    for (std::size_t i : order) {
        if (keys.count(cand[i]->payload)) continue;
        take(i);
        if (chosen.size() >= elite_quota) break;
    }
    for (std::size_t i : order) {
        if (chosen.size() >= want) break;
        if (taken[i] || keys.count(cand[i]->payload)) continue;
        double min_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j : chosen) {
            const double d = distance(enc, cand[i]->payload, cand[j]->payload, posmap[i], posmap[j]);
            if (d < min_dist) {
                min_dist = d;
                if (min_dist <= threshold) break;
            }
        }
        if (min_dist >= threshold) take(i);
    }
    for (std::size_t i : order) {
        if (chosen.size() >= want) break;
        if (taken[i] || keys.count(cand[i]->payload)) continue;
        take(i);
    }
    for (std::size_t i : order) {
        if (chosen.size() >= want) break;
        if (!taken[i]) take(i);
    }

    std::vector<Individual> next;
    for (std::size_t k = 0; k < chosen.size() && k < want; ++k) next.push_back(*cand[chosen[k]]);
    return next;
}

FwaResult run_fwa(const Instance& instance, Preset preset, const FwaParams& params, EvaluationBudget budget,
                  std::uint64_t seed) {
    Rng rng(seed);
    auto pop = initialize_population(instance, preset, params, rng);
    BudgetedEvaluator evaluator(instance, budget);
    FwaResult result;

    auto charge = [&](std::vector<Individual>& batch) {
        std::size_t kept = 0;
        for (; kept < batch.size(); ++kept)
            if (!evaluator.compute(batch[kept])) break;
        batch.resize(kept);
    };

    std::vector<Individual> initial = pop;
    charge(initial);

    double global_best = kInfeasible;
    std::size_t silent = 0;
    while (result.iterations < params.max_iter && !evaluator.stop()) {
        std::vector<double> fitness;
        for (const auto& ind : pop) fitness.push_back(ind.fitness);
        const double current = *std::min_element(fitness.begin(), fitness.end());
        if (current < global_best) {
            global_best = current;
            silent = 0;
        } else {
            ++silent;
        }
        result.trace.push_back(global_best);
        ++result.iterations;

        const auto amps = adaptive_amplitudes(fitness, params.init_amp, params.fw_size);
        std::vector<Individual> sparks;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            auto s = explode(instance, pop[i], amps[i], preset, params, rng);
            std::move(s.begin(), s.end(), std::back_inserter(sparks));
        }
        auto mutants = mutate_sparks(instance, sparks, params, preset, rng);
        charge(sparks);
        charge(mutants);
        pop = select_next(instance, pop, sparks, mutants, params);
        if (silent >= params.stall_limit) break;
    }

    result.evaluations = evaluator.evaluations();
    if (evaluator.best()) {
        result.objective = evaluator.best_fitness();
        result.solution = to_solution(instance, *evaluator.best());
    } else {
        const auto it = std::min_element(pop.begin(), pop.end(),
                                         [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
        result.objective = it->fitness;
        result.solution = to_solution(instance, *it);
    }
    result.feasible = std::isfinite(result.objective);
    return result;
}

}  // namespace promptfwa::fwa
