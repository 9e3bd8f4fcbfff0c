#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace promptfwa {

enum class CandidateStatus { valid, parse_failed, runtime_failed, timed_out, infeasible_only };
enum class OpKind { seed, mutation, crossover };

std::string_view to_string(CandidateStatus status);
CandidateStatus candidate_status_from_string(std::string_view name);
std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

/// Hex FNV-1a digest of the source text.
std::string code_hash(std::string_view source);

struct InstanceScore {
    std::string instance;
    double ratio = 0;
    CandidateStatus status = CandidateStatus::runtime_failed;
    double objective = 0;  // meaningful only when ratio > 0
    std::string detail;

    friend bool operator==(const InstanceScore&, const InstanceScore&) = default;
};

struct CandidateAlgorithm {
    std::string id;
    std::string source;
    std::vector<std::string> parents;
    std::string template_id;
    OpKind op_kind = OpKind::seed;
    double score = 0;
    CandidateStatus status = CandidateStatus::parse_failed;
    std::string code_hash;
    std::vector<InstanceScore> instances;

    friend bool operator==(const CandidateAlgorithm&, const CandidateAlgorithm&) = default;
};

}  // namespace promptfwa
