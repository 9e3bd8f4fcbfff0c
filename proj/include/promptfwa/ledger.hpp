#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "promptfwa/pools.hpp"
#include "promptfwa/prompts.hpp"

namespace promptfwa::ledger {

using nlohmann::json;

class LedgerError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// `logical` stamps each record with its sequence number, so identical runs
/// write identical files; `wall` stamps UTC time.
enum class ClockMode { logical, wall };

ClockMode clock_mode_from_string(std::string_view name);
std::string_view to_string(ClockMode mode);

inline constexpr std::string_view kEvents[] = {"candidate_generated", "candidate_scored", "template_selected",
                                               "template_evolved", "run_summary"};

/// Sidecar next to the ledger: `<ledger>.index.json`.
std::filesystem::path index_path(const std::filesystem::path& ledger);

/// Append-only JSON-lines journal. Every append is flushed and fsynced, and
/// the index file is rewritten, before append() returns.
class LedgerWriter {
  public:
    LedgerWriter(const std::filesystem::path& path, ClockMode clock = ClockMode::logical);
    ~LedgerWriter();
    LedgerWriter(const LedgerWriter&) = delete;
    LedgerWriter& operator=(const LedgerWriter&) = delete;

    /// `record` must carry "seq" == last_seq() + 1 and a known "event".
    /// A missing "timestamp" is filled in from the clock.
    void append(json record);

    /// Assigns the next sequence number and appends. Returns that number.
    std::uint64_t append_event(std::string_view event, json fields);

    /// Marks the index complete; appends after this are rejected.
    void close();

    std::uint64_t last_seq() const { return last_seq_; }
    const std::filesystem::path& path() const { return path_; }

  private:
    void write_index() const;

    std::filesystem::path path_;
    ClockMode clock_;
    int fd_ = -1;
    std::uint64_t last_seq_ = 0;
    bool closed_ = false;
};

struct LoadedLedger {
    std::vector<json> records;
    bool truncated = false;
    std::string truncation;  // why reading stopped early
};

/// Reads records in order, stopping at the first unparseable, unterminated or
/// out-of-sequence line.
LoadedLedger read_ledger(const std::filesystem::path& path);
LoadedLedger parse_ledger(std::string_view text);

/// Rebuilds pool and template state by re-applying the recorded events.
class Replayer {
  public:
    Replayer();

    /// Throws LedgerError when a record disagrees with the re-derived state.
    void apply(const json& record);

    const CandidatePool& pool() const { return pool_; }
    const prompts::TemplatePool& templates() const { return templates_; }
    bool started() const { return started_; }
    bool finished() const { return finished_; }

  private:
    CandidatePool pool_;
    prompts::TemplatePool templates_;
    std::map<std::string, CandidateAlgorithm> generated_;
    bool started_ = false;
    bool finished_ = false;
};

struct ReplayResult {
    CandidatePool pool;
    prompts::TemplatePool templates;
    std::size_t records_applied = 0;
    bool truncated = false;
    std::string truncation;  // explicit marker when the ledger ended early
};

ReplayResult replay(const LoadedLedger& ledger);

struct TrajectoryRow {
    std::size_t candidate_index = 0;
    std::string candidate_id;
    std::string status;
    double score = 0;
    double best_so_far = 0;
    std::string template_id;
    std::string best_mutation_template;
    bool template_update = false;  // a template was inserted right after this candidate
};

std::vector<TrajectoryRow> report_trajectory(const std::vector<json>& records);
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

/// Ledger-compatible (de)serialisation of candidates, shared with the orchestrator.
json to_json(const InstanceScore& s);
InstanceScore instance_score_from_json(const json& j);

}  // namespace promptfwa::ledger
