#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "promptfwa/config.hpp"
#include "promptfwa/instance_io.hpp"
#include "promptfwa/llm.hpp"
#include "promptfwa/orchestrator.hpp"
#include "promptfwa/prompts.hpp"

namespace support {

namespace fs = std::filesystem;
using namespace promptfwa;

inline const fs::path kData = PROMPTFWA_DATA_DIR;
inline const fs::path kSeeds = PROMPTFWA_SEEDS_DIR;
inline const fs::path kWorker = PROMPTFWA_WORKER;

inline fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "promptfwa-tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline problems::BenchmarkInstance instance(const std::string& name) {
    return problems::load_benchmark(kData / "instances" / (name + ".json"));
}

// Python body of the shipped seed, without its directive line.
inline std::string seed_body() {
    const auto src = slurp(kSeeds / "fwa_baseline.py");
    return src.substr(src.find('\n') + 1);
}

inline std::string candidate_source(const std::string& directive, const std::string& note = "") {
    std::string s = "# native-fwa: " + directive + "\n" + seed_body();
    if (!note.empty()) s += "# " + note + "\n";
    // Extraction trims replies, so keep sources trimmed to make echoes hash-identical.
    return std::string(s.substr(0, s.find_last_not_of(" \n\t\r") + 1));
}

inline std::string code_reply(const std::string& source) { return "Revised algorithm:\n<code>\n" + source + "\n</code>\n"; }

inline std::string meta_reply(prompts::TemplateKind kind, int n) {
    return "<prompt>" + prompts::seed_body(kind) + "\nVariant " + std::to_string(n) +
           ": prefer changes that keep every produced solution feasible.</prompt>";
}

using GenScript = std::function<std::string(std::size_t run, std::size_t attempt)>;

// Transcript keyed by the tags the orchestrator emits, covering every call a run can make.
inline std::vector<llm::TranscriptEntry> build_transcript(const RunConfig& cfg, const GenScript& gen) {
    std::vector<llm::TranscriptEntry> t;
    char buf[64];
    for (std::size_t r = 0; r < cfg.independent_runs; ++r) {
        for (std::size_t a = 1; a <= cfg.max_candidates; ++a) {
            std::snprintf(buf, sizeof buf, "r%zu-gen-%04zu", r, a);
            t.push_back({buf, "", gen(r, a), ""});
        }
        for (auto kind : {prompts::TemplateKind::mutation, prompts::TemplateKind::crossover}) {
            const auto name = std::string(prompts::to_string(kind));
            for (std::size_t e = 1; e <= cfg.max_candidates / cfg.template_period; ++e)
                for (int k = 1; k <= 1 + cfg.meta_retries; ++k) {
                    std::snprintf(buf, sizeof buf, "r%zu-meta-%s-%03zu-try-%d", r, name.c_str(), e, k);
                    t.push_back({buf, "", meta_reply(kind, static_cast<int>(e)), ""});
                }
        }
    }
    return t;
}

inline RunConfig scripted_config(const fs::path& out, std::vector<std::string> train, std::size_t max_candidates = 200,
                                 std::size_t runs = 1) {
    RunConfig c;
    c.task = "airland";
    for (const auto& n : train) c.train_instances.push_back(kData / "instances" / (n + ".json"));
    c.seed_candidate = kSeeds / "fwa_baseline.py";
    c.max_candidates = max_candidates;
    c.independent_runs = runs;
    c.instance_time_limit_s = 10;
    c.seed = 2024;
    c.worker = {kWorker.string()};
    c.llm.transcript = out / "transcript.jsonl";
    c.output_dir = out;
    return c;
}

// A deterministic mix: mostly distinct valid directives, with unparseable
// replies, broken code and crashing code sprinkled in.
inline std::string mixed_reply(std::size_t run, std::size_t attempt) {
    const std::size_t k = attempt + 7 * run;
    if (k % 23 == 0) return "I could not produce code this time.";
    if (k % 29 == 0) return code_reply(candidate_source("preset=baseline", "broken") + "def broken(:\n");
    if (k % 31 == 0) return code_reply(candidate_source("preset=baseline fault=crash", std::to_string(k)));
    const std::size_t fw = 1 + k % 5, it = k % 7, sp = fw + k % 9;
    return code_reply(candidate_source("preset=baseline fw_size=" + std::to_string(fw) + " sp_size=" + std::to_string(sp) +
                                       " max_iter=" + std::to_string(it), "variant " + std::to_string(k)));
}

}  // namespace support
