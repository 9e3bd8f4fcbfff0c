#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptfwa/candidate.hpp"
#include "promptfwa/problems.hpp"

namespace promptfwa::runner {

using nlohmann::json;

inline constexpr int kProtocolVersion = 1;

/// The runner could not be started or broke the protocol; aborts a run.
class InfrastructureError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class ProtocolError : public InfrastructureError {
    using InfrastructureError::InfrastructureError;
};

struct EvalJob {
    std::string source;
    problems::BenchmarkInstance instance;
    std::uint64_t seed = 0;
    double time_limit_s = 10;
    std::optional<std::size_t> max_evaluations;
};

struct EvalReport {
    CandidateStatus status = CandidateStatus::runtime_failed;
    std::optional<json> solution;  // solution document of the instance's problem
    std::optional<double> objective;
    std::size_t evaluations = 0;
    double wall_time_s = 0;
    std::string detail;
};

// One JSON object per line in each direction.
json to_json(const EvalJob& job);
EvalJob eval_job_from_json(const json& doc);
json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const json& doc);

struct Handshake {
    int proto = 0;
    std::vector<std::string> problems;
};

json to_json(const Handshake& hs);
Handshake parse_handshake(std::string_view line);

/// Throws ProtocolError unless the version matches and `problem` is supported.
void check_handshake(const Handshake& hs, std::string_view problem, int expected_proto = kProtocolVersion);

class CandidateRunner {
  public:
    virtual ~CandidateRunner() = default;
    virtual EvalReport run(const EvalJob& job) = 0;
};

/// Starts one worker process per job: reads its handshake, sends the job line
/// and waits for the report line. A worker still running at time_limit + grace
/// is killed together with its process group and reported as timed_out.
class WorkerProcessRunner : public CandidateRunner {
  public:
    explicit WorkerProcessRunner(std::vector<std::string> command, std::chrono::milliseconds grace = std::chrono::seconds(1),
                                 int expected_proto = kProtocolVersion);

    EvalReport run(const EvalJob& job) override;

  private:
    std::vector<std::string> command_;
    std::chrono::milliseconds grace_;
    int expected_proto_;
};

}  // namespace promptfwa::runner
