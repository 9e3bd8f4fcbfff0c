#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptfwa/ledger.hpp"

namespace promptfwa {

class RunConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct LlmSettings {
    std::string mode = "scripted";  // scripted | live
    std::filesystem::path transcript;
    std::optional<std::filesystem::path> record;  // live mode: save every exchange here
    std::string endpoint;
    std::string model;
    std::string api_key_env = "PROMPTFWA_API_KEY";
    double temperature = 1.0;
    double meta_temperature = 1.0;
    std::size_t max_tokens = 4096;
    int max_retries = 5;
    long base_backoff_ms = 500;
    long timeout_s = 120;
};

struct RunConfig {
    std::string task;
    std::string problem_description;
    std::vector<std::filesystem::path> train_instances;
    std::vector<std::filesystem::path> test_instances;
    std::filesystem::path seed_candidate;

    std::size_t pool_capacity = 10;
    std::size_t template_capacity = 5;
    std::size_t max_candidates = 200;
    std::size_t independent_runs = 5;
    double instance_time_limit_s = 10;
    std::optional<std::size_t> max_evaluations;
    double crossover_rate = 0.3;
    std::size_t template_period = 20;
    int meta_retries = 2;
    int extraction_retries = 2;
    std::uint64_t seed = 0;

    std::vector<std::string> worker;  // command line of the candidate runner
    std::size_t parallel_workers = 1;
    LlmSettings llm;
    std::filesystem::path output_dir = "runs";
    ledger::ClockMode ledger_clock = ledger::ClockMode::logical;
    bool epp_require_all_groups = true;

    /// Throws RunConfigError naming the first bad field.
    void validate() const;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are rejected, and
/// so is anything that looks like a credential: keys are read from the environment only.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace promptfwa
