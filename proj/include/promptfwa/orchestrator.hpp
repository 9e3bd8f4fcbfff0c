#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "promptfwa/candidate.hpp"
#include "promptfwa/config.hpp"
#include "promptfwa/llm.hpp"
#include "promptfwa/pools.hpp"
#include "promptfwa/problems.hpp"
#include "promptfwa/prompts.hpp"
#include "promptfwa/runner.hpp"

namespace promptfwa {

struct ScoringOptions {
    std::uint64_t run_seed = 0;
    double time_limit_s = 10;
    std::optional<std::size_t> max_evaluations;
    problems::EppOptions epp;
    std::size_t parallel_workers = 1;
};

struct CandidateScore {
    double score = 0;
    CandidateStatus status = CandidateStatus::runtime_failed;
    std::vector<InstanceScore> instances;
};

/// fnv1a of "<run_seed>|<candidate_id>|<instance name>", so every candidate of a
/// run sees the same seed on a given instance.
std::uint64_t instance_seed(std::uint64_t run_seed, std::string_view candidate_id, std::string_view instance);

/// Checks one worker report against the primary evaluator and turns it into a ratio.
InstanceScore score_report(const problems::BenchmarkInstance& bench, const runner::EvalReport& report,
                           const problems::EppOptions& epp);

/// Runs the candidate on every instance. The score is the mean ratio (failures
/// count 0); the status is valid only when every instance is valid, otherwise the
/// most severe failure: parse_failed, runtime_failed, timed_out, infeasible_only.
/// Throws runner::InfrastructureError when the runner itself breaks.
CandidateScore score_candidate(const std::string& source, const std::string& candidate_id,
                               const std::vector<problems::BenchmarkInstance>& instances, const ScoringOptions& options,
                               runner::CandidateRunner& runner);

/// Strips a surrounding markdown fence (```lang ... ```) if present.
std::string strip_code_fence(std::string_view code);

struct RunResult {
    std::size_t run_index = 0;
    std::optional<CandidateAlgorithm> best;
    CandidatePool pool;
    prompts::TemplatePool templates;
    std::size_t attempts = 0;  // LLM code-generation calls
    bool aborted = false;
    std::string reason;
    std::vector<InstanceScore> test_scores;
    double test_score = 0;
    std::filesystem::path run_dir;
    std::filesystem::path ledger_path;
};

/// Inputs shared by every run of an experiment.
struct Experiment {
    RunConfig config;
    std::vector<problems::BenchmarkInstance> train;
    std::vector<problems::BenchmarkInstance> test;
    std::string seed_source;

    /// Loads instances and the seed candidate named by the config.
    static Experiment prepare(RunConfig config);
};

std::uint64_t run_seed(std::uint64_t experiment_seed, std::size_t run_index);

/// One co-evolution run written to <output_dir>/run-<index>/.
RunResult run_coevolution(const Experiment& exp, std::size_t run_index, llm::LlmClient& llm,
                          runner::CandidateRunner& runner);

struct ExperimentResult {
    std::vector<RunResult> runs;
    std::optional<std::size_t> best_run;  // highest best score, earliest on ties
};

/// independent_runs runs in sequence; also writes <output_dir>/summary.json.
ExperimentResult run_experiment(const Experiment& exp, llm::LlmClient& llm, runner::CandidateRunner& runner);

/// Builds the client the config asks for. Live mode wraps it in a recorder when llm.record is set;
/// `holder` keeps the wrapped client alive.
std::unique_ptr<llm::LlmClient> make_llm_client(const LlmSettings& settings, std::unique_ptr<llm::LlmClient>& holder);

}  // namespace promptfwa
