#include "promptfwa/pools.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace promptfwa {

std::string_view to_string(CandidateStatus status) {
    switch (status) {
        case CandidateStatus::valid: return "valid";
        case CandidateStatus::parse_failed: return "parse_failed";
        case CandidateStatus::runtime_failed: return "runtime_failed";
        case CandidateStatus::timed_out: return "timed_out";
        case CandidateStatus::infeasible_only: return "infeasible_only";
    }
    return "runtime_failed";
}

CandidateStatus candidate_status_from_string(std::string_view name) {
    for (auto s : {CandidateStatus::valid, CandidateStatus::parse_failed, CandidateStatus::runtime_failed,
                   CandidateStatus::timed_out, CandidateStatus::infeasible_only})
        if (to_string(s) == name) return s;
    throw std::invalid_argument("unknown candidate status: " + std::string(name));
}

std::string_view to_string(OpKind kind) {
    switch (kind) {
        case OpKind::seed: return "seed";
        case OpKind::mutation: return "mutation";
        case OpKind::crossover: return "crossover";
    }
    return "seed";
}

OpKind op_kind_from_string(std::string_view name) {
    for (auto k : {OpKind::seed, OpKind::mutation, OpKind::crossover})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown operator kind: " + std::string(name));
}

std::string code_hash(std::string_view source) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(source)));
    return buf;
}

std::vector<double> rank_probabilities(std::span<const double> scores) {
    const std::size_t n = scores.size();
    if (n == 0) throw std::invalid_argument("rank_probabilities needs at least one score");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    std::vector<double> p(n);
    for (std::size_t r = 0; r < n; ++r) p[order[r]] = static_cast<double>(n - r) / total;
    return p;
}

std::vector<std::size_t> sample_by_rank(std::span<const double> scores, std::size_t k, Rng& rng) {
    if (k > scores.size()) throw std::invalid_argument("cannot draw more entries than available");
    auto weights = rank_probabilities(scores);
    std::vector<std::size_t> picked;
    for (std::size_t d = 0; d < k; ++d) {
        const std::size_t i = rng.weighted(weights);
        picked.push_back(i);
        weights[i] = 0.0;
    }
    return picked;
}

CandidatePool::CandidatePool(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("pool capacity must be positive");
}

bool CandidatePool::contains_hash(const std::string& hash) const {
    return std::any_of(members_.begin(), members_.end(), [&](const auto& c) { return c.code_hash == hash; });
}

PoolInsertResult CandidatePool::insert(CandidateAlgorithm candidate) {
    PoolInsertResult result;
    if (contains_hash(candidate.code_hash)) {
        result.duplicate = true;
        return result;
    }
    const std::string id = candidate.id;
    members_.push_back(std::move(candidate));
    result.retained = true;
    if (members_.size() > capacity_) {
        // Worst score, newest among equals; members_ is oldest first.
        std::size_t worst = members_.size() - 1;
        for (std::size_t i = members_.size(); i-- > 0;)
            if (members_[i].score < members_[worst].score) worst = i;
        result.evicted = members_[worst].id;
        if (members_[worst].id == id) result.retained = false;
        members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    return result;
}

const CandidateAlgorithm& CandidatePool::best() const {
    if (members_.empty()) throw std::logic_error("empty candidate pool");
    return *ranked().front();
}

std::vector<const CandidateAlgorithm*> CandidatePool::ranked() const {
    std::vector<const CandidateAlgorithm*> out;
    for (const auto& c : members_) out.push_back(&c);
    std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->score > b->score; });
    return out;
}

std::vector<const CandidateAlgorithm*> CandidatePool::select_parents(std::size_t k, Rng& rng) const {
    if (members_.size() < k) throw std::invalid_argument("pool smaller than the requested parent count");
    std::vector<double> scores;
    for (const auto& c : members_) scores.push_back(c.score);
    std::vector<const CandidateAlgorithm*> out;
    for (std::size_t i : sample_by_rank(scores, k, rng)) out.push_back(&members_[i]);
    return out;
}

}  // namespace promptfwa
