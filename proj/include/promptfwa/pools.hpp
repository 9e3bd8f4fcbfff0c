#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "promptfwa/candidate.hpp"
#include "promptfwa/rng.hpp"

namespace promptfwa {

/// p_i = (n + 1 - rank_i) / sum of ranks, rank 1 being the highest score.
/// Equal scores rank the earlier entry first. Throws std::invalid_argument on an empty list.
std::vector<double> rank_probabilities(std::span<const double> scores);

/// Indices of k distinct entries drawn without replacement; each draw uses the
/// rank probabilities of the full list restricted to what remains.
std::vector<std::size_t> sample_by_rank(std::span<const double> scores, std::size_t k, Rng& rng);

struct PoolInsertResult {
    bool duplicate = false;
    bool retained = false;            // still in the pool after eviction
    std::optional<std::string> evicted;
};

/// Greedy candidate pool keyed by code hash. Members are kept oldest first.
class CandidatePool {
  public:
    explicit CandidatePool(std::size_t capacity = 10);

    /// Rejects a code hash already present; otherwise inserts and, above capacity,
    /// evicts the lowest score (the newest among equals). The best is never evicted.
    PoolInsertResult insert(CandidateAlgorithm candidate);

    bool contains_hash(const std::string& hash) const;
    std::size_t size() const { return members_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return members_.empty(); }
    const std::vector<CandidateAlgorithm>& members() const { return members_; }

    /// Highest score, oldest among equals. Throws std::logic_error when empty.
    const CandidateAlgorithm& best() const;

    /// Members by score descending, oldest first among equals.
    std::vector<const CandidateAlgorithm*> ranked() const;

    /// k distinct parents by the rank law; std::invalid_argument when size() < k.
    std::vector<const CandidateAlgorithm*> select_parents(std::size_t k, Rng& rng) const;

    friend bool operator==(const CandidatePool&, const CandidatePool&) = default;

  private:
    std::size_t capacity_;
    std::vector<CandidateAlgorithm> members_;
};

}  // namespace promptfwa
