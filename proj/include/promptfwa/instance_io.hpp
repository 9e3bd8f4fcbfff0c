#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "promptfwa/problems.hpp"

namespace promptfwa::problems {

using json = nlohmann::json;

/// Parses the OR-Library airland layout:
///   n freeze_time
///   then per plane: appearance earliest target latest penalty_early penalty_late
///   followed by that plane's n separation entries (may wrap over several lines).
/// Errors carry the 1-based line of the offending token.
AircraftLandingInstance parse_airland(std::string_view text);

/// Instance documents: {"problem", "data", "reference", "sense"}.
BenchmarkInstance benchmark_from_json(const json& doc);
json to_json(const BenchmarkInstance& bench);

Instance instance_from_json(ProblemKind kind, const json& data);
json instance_data_to_json(const Instance& instance);

/// Solution documents: {"times", "runway"?} | {"permutation"} | {"medians"} | {"groups"}.
Solution solution_from_json(ProblemKind kind, const json& doc);
json to_json(const Solution& solution);

/// Loads a JSON instance document, or OR-Library airland text when the file does
/// not start with '{' (the result then has no reference).
BenchmarkInstance load_benchmark(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace promptfwa::problems
