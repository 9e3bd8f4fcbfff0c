#include "promptfwa/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace promptfwa {

using nlohmann::json;

namespace {

constexpr const char* kTopKeys[] = {
    "task", "problem_description", "train_instances", "test_instances", "seed_candidate", "pool_capacity",
    "template_capacity", "max_candidates", "independent_runs", "instance_time_limit_s", "max_evaluations",
    "crossover_rate", "template_period", "meta_retries", "extraction_retries", "seed", "worker", "parallel_workers",
    "llm", "output_dir", "ledger_clock", "epp_require_all_groups",
};

constexpr const char* kLlmKeys[] = {
    "mode", "transcript", "record", "endpoint", "model", "api_key_env", "temperature", "meta_temperature",
    "max_tokens", "max_retries", "base_backoff_ms", "timeout_s",
};

bool looks_like_secret(std::string key) {
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key == "api_key_env") return false;
    for (const char* word : {"api_key", "apikey", "secret", "token", "password", "authorization", "bearer"})
        if (key.find(word) != std::string::npos && key != "max_tokens") return true;
    return false;
}

template <std::size_t N>
void check_keys(const json& obj, const char* const (&allowed)[N], const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (looks_like_secret(key))
            throw RunConfigError(where + key + ": credentials are read from the environment, not from config files");
        if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* k) { return key == k; }) ==
            std::end(allowed))
            throw RunConfigError("unknown config key " + where + key);
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw RunConfigError(std::string("bad value for ") + key + ": " + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    auto fail = [](const std::string& what) { throw RunConfigError(what); };
    if (train_instances.empty()) fail("train_instances is empty");
    if (seed_candidate.empty()) fail("seed_candidate is not set");
    if (pool_capacity < 1) fail("pool_capacity must be at least 1");
    if (template_capacity < 1) fail("template_capacity must be at least 1");
    if (independent_runs < 1) fail("independent_runs must be at least 1");
    if (!(instance_time_limit_s > 0)) fail("instance_time_limit_s must be positive");
    if (!(crossover_rate >= 0 && crossover_rate <= 1)) fail("crossover_rate must lie in [0, 1]");
    if (template_period < 1) fail("template_period must be at least 1");
    if (meta_retries < 0 || extraction_retries < 0) fail("retry counts must be nonnegative");
    if (worker.empty()) fail("worker command is empty");
    if (parallel_workers < 1) fail("parallel_workers must be at least 1");
    if (llm.mode == "scripted") {
        if (llm.transcript.empty()) fail("llm.transcript is required in scripted mode");
    } else if (llm.mode == "live") {
        if (llm.endpoint.empty()) fail("llm.endpoint is required in live mode");
    } else {
        fail("llm.mode must be scripted or live");
    }
    if (!(llm.temperature >= 0) || !(llm.meta_temperature >= 0)) fail("temperatures must be nonnegative");
}

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw RunConfigError("config must be a JSON object");
    check_keys(doc, kTopKeys, "");
    RunConfig c;
    read(doc, "task", c.task);
    read(doc, "problem_description", c.problem_description);
    std::vector<std::string> paths;
    read(doc, "train_instances", paths);
    for (const auto& p : paths) c.train_instances.push_back(resolve(base_dir, p));
    paths.clear();
    read(doc, "test_instances", paths);
    for (const auto& p : paths) c.test_instances.push_back(resolve(base_dir, p));
    std::string s;
    read(doc, "seed_candidate", s);
    if (!s.empty()) c.seed_candidate = resolve(base_dir, s);
    read(doc, "pool_capacity", c.pool_capacity);
    read(doc, "template_capacity", c.template_capacity);
    read(doc, "max_candidates", c.max_candidates);
    read(doc, "independent_runs", c.independent_runs);
    read(doc, "instance_time_limit_s", c.instance_time_limit_s);
    if (doc.contains("max_evaluations") && !doc["max_evaluations"].is_null()) {
        std::size_t m = 0;
        read(doc, "max_evaluations", m);
        c.max_evaluations = m;
    }
    read(doc, "crossover_rate", c.crossover_rate);
    read(doc, "template_period", c.template_period);
    read(doc, "meta_retries", c.meta_retries);
    read(doc, "extraction_retries", c.extraction_retries);
    read(doc, "seed", c.seed);
    read(doc, "worker", c.worker);
    // a worker given as a relative path to an existing file is resolved like the other paths
    if (!c.worker.empty() && c.worker.front().find('/') != std::string::npos)
        c.worker.front() = resolve(base_dir, c.worker.front()).string();
    read(doc, "parallel_workers", c.parallel_workers);
    s.clear();
    read(doc, "output_dir", s);
    if (!s.empty()) c.output_dir = resolve(base_dir, s);
    if (doc.contains("ledger_clock")) {
        try {
            c.ledger_clock = ledger::clock_mode_from_string(doc["ledger_clock"].get<std::string>());
        } catch (const std::exception& e) {
            throw RunConfigError(e.what());
        }
    }
    read(doc, "epp_require_all_groups", c.epp_require_all_groups);

    if (doc.contains("llm")) {
        const auto& l = doc["llm"];
        if (!l.is_object()) throw RunConfigError("llm must be an object");
        check_keys(l, kLlmKeys, "llm.");
        read(l, "mode", c.llm.mode);
        s.clear();
        read(l, "transcript", s);
        if (!s.empty()) c.llm.transcript = resolve(base_dir, s);
        if (l.contains("record") && !l["record"].is_null()) {
            s.clear();
            read(l, "record", s);
            c.llm.record = resolve(base_dir, s);
        }
        read(l, "endpoint", c.llm.endpoint);
        read(l, "model", c.llm.model);
        read(l, "api_key_env", c.llm.api_key_env);
        read(l, "temperature", c.llm.temperature);
        read(l, "meta_temperature", c.llm.meta_temperature);
        read(l, "max_tokens", c.llm.max_tokens);
        read(l, "max_retries", c.llm.max_retries);
        read(l, "base_backoff_ms", c.llm.base_backoff_ms);
        read(l, "timeout_s", c.llm.timeout_s);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RunConfigError("cannot read config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw RunConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
    auto strs = [](const std::vector<std::filesystem::path>& v) {
        std::vector<std::string> out;
        for (const auto& p : v) out.push_back(p.string());
        return out;
    };
    json llm{{"mode", c.llm.mode},
             {"transcript", c.llm.transcript.string()},
             {"endpoint", c.llm.endpoint},
             {"model", c.llm.model},
             {"api_key_env", c.llm.api_key_env},
             {"temperature", c.llm.temperature},
             {"meta_temperature", c.llm.meta_temperature},
             {"max_tokens", c.llm.max_tokens},
             {"max_retries", c.llm.max_retries},
             {"base_backoff_ms", c.llm.base_backoff_ms},
             {"timeout_s", c.llm.timeout_s}};
    llm["record"] = c.llm.record ? json(c.llm.record->string()) : json(nullptr);
    json j{{"task", c.task},
           {"problem_description", c.problem_description},
           {"train_instances", strs(c.train_instances)},
           {"test_instances", strs(c.test_instances)},
           {"seed_candidate", c.seed_candidate.string()},
           {"pool_capacity", c.pool_capacity},
           {"template_capacity", c.template_capacity},
           {"max_candidates", c.max_candidates},
           {"independent_runs", c.independent_runs},
           {"instance_time_limit_s", c.instance_time_limit_s},
           {"crossover_rate", c.crossover_rate},
           {"template_period", c.template_period},
           {"meta_retries", c.meta_retries},
           {"extraction_retries", c.extraction_retries},
           {"seed", c.seed},
           {"worker", c.worker},
           {"parallel_workers", c.parallel_workers},
           {"llm", llm},
           {"output_dir", c.output_dir.string()},
           {"ledger_clock", std::string(ledger::to_string(c.ledger_clock))},
           {"epp_require_all_groups", c.epp_require_all_groups}};
    j["max_evaluations"] = c.max_evaluations ? json(*c.max_evaluations) : json(nullptr);
    return j;
}

}  // namespace promptfwa
