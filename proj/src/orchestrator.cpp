#include "promptfwa/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include "promptfwa/instance_io.hpp"
#include "promptfwa/ledger.hpp"

namespace promptfwa {

using nlohmann::json;
using problems::BenchmarkInstance;
using prompts::TemplateKind;

namespace {

std::string fmt_score(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string padded(std::size_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, v);
    return buf;
}

int severity(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::parse_failed: return 4;
        case CandidateStatus::runtime_failed: return 3;
        case CandidateStatus::timed_out: return 2;
        case CandidateStatus::infeasible_only: return 1;
        case CandidateStatus::valid: return 0;
    }
    return 0;
}

InstanceScore failed(const std::string& name, CandidateStatus status, std::string detail) {
    InstanceScore s;
    s.instance = name;
    s.status = status;
    if (detail.size() > 400) detail.resize(400);
    s.detail = std::move(detail);
    return s;
}

std::string default_description(problems::ProblemKind kind) {
    switch (kind) {
        case problems::ProblemKind::airland:
            return "single-runway aircraft landing: order the planes and choose landing times inside each window, "
                   "respecting pairwise separation, so that the weighted earliness and lateness cost is minimal";
        case problems::ProblemKind::flowshop:
            return "permutation flow shop: find the job order that minimizes the makespan";
        case problems::ProblemKind::pmedian:
            return "p-median: choose exactly p medians minimizing the total distance from each vertex to its nearest median";
        case problems::ProblemKind::epp:
            return "equitable partitioning: split the individuals into 8 nonempty groups so that every binary attribute "
                   "is spread as evenly as possible";
    }
    return {};
}

json instance_scores_json(const std::vector<InstanceScore>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back(ledger::to_json(s));
    return a;
}

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

std::uint64_t instance_seed(std::uint64_t run_seed, std::string_view candidate_id, std::string_view instance) {
    return fnv1a(std::to_string(run_seed) + "|" + std::string(candidate_id) + "|" + std::string(instance));
}

std::uint64_t run_seed(std::uint64_t experiment_seed, std::size_t run_index) {
    return fnv1a(std::to_string(experiment_seed) + "/run" + std::to_string(run_index));
}

InstanceScore score_report(const BenchmarkInstance& bench, const runner::EvalReport& report,
                           const problems::EppOptions& epp) {
    if (report.status != CandidateStatus::valid) return failed(bench.name, report.status, report.detail);
    if (!report.solution) return failed(bench.name, CandidateStatus::runtime_failed, "valid report without a solution");
    problems::Solution sol;
    problems::EvaluationOutcome outcome;
    try {
        sol = problems::solution_from_json(problems::kind_of(bench.instance), *report.solution);
        outcome = problems::evaluate(bench.instance, sol, epp);
    } catch (const std::exception& e) {
        return failed(bench.name, CandidateStatus::runtime_failed, std::string("unusable solution: ") + e.what());
    }
    if (!outcome.feasible)
        return failed(bench.name, CandidateStatus::infeasible_only,
                      std::string(problems::to_string(outcome.violation)) + ": " + outcome.detail);
    const double obj = *outcome.objective;
    if (report.objective && std::abs(*report.objective - obj) > 1e-9 * std::max(1.0, std::abs(obj)))
        return failed(bench.name, CandidateStatus::runtime_failed,
                      "reported objective " + fmt_score(*report.objective) + " but the solution scores " + fmt_score(obj));
    if (!bench.reference) return failed(bench.name, CandidateStatus::runtime_failed, "instance has no reference objective");
    InstanceScore s;
    s.instance = bench.name;
    s.objective = obj;
    try {
        s.ratio = problems::performance_ratio(obj, *bench.reference, bench.sense).value;
        s.status = CandidateStatus::valid;
    } catch (const problems::DomainError&) {
        s.ratio = 0;
        s.status = CandidateStatus::runtime_failed;
        s.detail = "performance ratio undefined";
    }
    return s;
}

CandidateScore score_candidate(const std::string& source, const std::string& candidate_id,
                               const std::vector<BenchmarkInstance>& instances, const ScoringOptions& options,
                               runner::CandidateRunner& runner) {
    std::vector<InstanceScore> scores(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
    auto job_for = [&](std::size_t i) {
        runner::EvalJob job;
        job.source = source;
        job.instance = instances[i];
        job.seed = instance_seed(options.run_seed, candidate_id, instances[i].name);
        job.time_limit_s = options.time_limit_s;
        job.max_evaluations = options.max_evaluations;
        return job;
    };
    auto work = [&](std::size_t i) {
        try {
            scores[i] = score_report(instances[i], runner.run(job_for(i)), options.epp);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min(options.parallel_workers, instances.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < instances.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < instances.size(); i = next++) work(i);
            });
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    CandidateScore out;
    out.status = CandidateStatus::valid;
    double total = 0;
    for (const auto& s : scores) {
        total += s.status == CandidateStatus::valid ? s.ratio : 0.0;
        if (severity(s.status) > severity(out.status)) out.status = s.status;
    }
    out.score = instances.empty() ? 0 : total / static_cast<double>(instances.size());
    out.instances = std::move(scores);
    return out;
}

std::string strip_code_fence(std::string_view code) {
    auto trim = [](std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string_view::npos) return std::string_view{};
        return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
    };
    code = trim(code);
    if (code.substr(0, 3) != "```") return std::string(code);
    const auto nl = code.find('\n');
    if (nl == std::string_view::npos) return {};
    code.remove_prefix(nl + 1);
    code = trim(code);
    if (code.size() >= 3 && code.substr(code.size() - 3) == "```") code.remove_suffix(3);
    return std::string(trim(code));
}

Experiment Experiment::prepare(RunConfig config) {
    config.validate();
    Experiment exp;
    auto load = [](const std::filesystem::path& p) {
        auto b = problems::load_benchmark(p);
        if (b.name.empty()) b.name = p.stem().string();
        return b;
    };
    for (const auto& p : config.train_instances) {
        exp.train.push_back(load(p));
        if (!exp.train.back().reference)
            throw RunConfigError("training instance " + p.string() + " has no reference objective");
    }
    for (const auto& p : config.test_instances) exp.test.push_back(load(p));
    exp.seed_source = problems::read_text_file(config.seed_candidate);
    if (config.problem_description.empty())
        config.problem_description = default_description(problems::kind_of(exp.train.front().instance));
    exp.config = std::move(config);
    return exp;
}

// ---- one run -----------------------------------------------------------------

namespace {

class Run {
  public:
    Run(const Experiment& exp, std::size_t index, llm::LlmClient& llm, runner::CandidateRunner& runner)
        : exp_(exp),
          cfg_(exp.config),
          index_(index),
          llm_(llm),
          runner_(runner),
          rng_(run_seed(cfg_.seed, index)),
          pool_(cfg_.pool_capacity),
          templates_(cfg_.template_capacity) {
        result_.run_index = index;
        result_.run_dir = cfg_.output_dir / ("run-" + std::to_string(index));
        result_.ledger_path = result_.run_dir / "ledger.jsonl";
        std::filesystem::create_directories(result_.run_dir);
        ledger_.emplace(result_.ledger_path, cfg_.ledger_clock);
        scoring_.run_seed = run_seed(cfg_.seed, index);
        scoring_.time_limit_s = cfg_.instance_time_limit_s;
        scoring_.max_evaluations = cfg_.max_evaluations;
        scoring_.epp.require_all_groups = cfg_.epp_require_all_groups;
        scoring_.parallel_workers = cfg_.parallel_workers;
    }

    RunResult execute() {
        log_start();
        try {
            seed_templates();
            if (seed_candidate()) evolve_loop();
        } catch (const llm::LlmError& e) {
            abort(std::string("llm failure: ") + e.what());
        } catch (const runner::InfrastructureError& e) {
            abort(std::string("runner failure: ") + e.what());
        }
        finish();
        return std::move(result_);
    }

  private:
    void log_start() {
        json names_train = json::array(), names_test = json::array();
        for (const auto& b : exp_.train) names_train.push_back(b.name);
        for (const auto& b : exp_.test) names_test.push_back(b.name);
        ledger_->append_event("run_summary", {{"phase", "start"},
                                              {"run_index", index_},
                                              {"seed", scoring_.run_seed},
                                              {"config",
                                               {{"pool_capacity", cfg_.pool_capacity},
                                                {"template_capacity", cfg_.template_capacity},
                                                {"max_candidates", cfg_.max_candidates},
                                                {"crossover_rate", cfg_.crossover_rate},
                                                {"template_period", cfg_.template_period},
                                                {"meta_retries", cfg_.meta_retries},
                                                {"extraction_retries", cfg_.extraction_retries},
                                                {"train", names_train},
                                                {"test", names_test}}}});
    }

    void seed_templates() {
        for (auto kind : {TemplateKind::mutation, TemplateKind::crossover, TemplateKind::meta}) {
            const auto res = templates_.insert(kind, prompts::seed_body(kind), std::string(prompts::kHandSeeded), 0.0);
            log_template(kind, res, std::string(prompts::kHandSeeded), 0.0, 0, "");
        }
    }

    void log_template(TemplateKind kind, const prompts::TemplatePool::InsertResult& res, const std::string& parent,
                      double prior, int tries, const std::string& body_if_gone) {
        const TemplateView v = res.inserted ? TemplateView{res.inserted->id, res.inserted->generation, res.inserted->body}
                                                   : TemplateView{*res.evicted, -1, body_if_gone};
        ledger_->append_event("template_evolved", {{"template_id", v.id},
                                                   {"kind", std::string(prompts::to_string(kind))},
                                                   {"generation", v.generation},
                                                   {"parent", parent},
                                                   {"body", v.body},
                                                   {"prior", prior},
                                                   {"status", "inserted"},
                                                   {"evicted", opt(res.evicted)},
                                                   {"tries", tries}});
    }

    struct TemplateView {
        std::string id;
        int generation;
        std::string body;
    };

    bool seed_candidate() {
        CandidateAlgorithm c;
        c.id = "seed";
        c.source = exp_.seed_source;
        c.op_kind = OpKind::seed;
        c.code_hash = code_hash(c.source);
        log_generated(c, "", 0, std::nullopt);
        score_and_record(c, 0.0);
        if (c.status != CandidateStatus::valid) {
            abort("seed candidate is not valid (" + std::string(to_string(c.status)) + ")");
            return false;
        }
        return true;
    }

    void log_generated(const CandidateAlgorithm& c, const std::string& tag, std::size_t attempt,
                       std::optional<std::string> error) {
        json j{{"candidate_id", c.id},    {"op_kind", std::string(to_string(c.op_kind))},
               {"parents", c.parents},    {"template_id", c.template_id},
               {"tag", tag},              {"attempt", attempt}};
        j["code_hash"] = error ? json(nullptr) : json(c.code_hash);
        j["source"] = error ? json(nullptr) : json(c.source);
        j["error"] = error ? json(*error) : json(nullptr);
        ledger_->append_event("candidate_generated", std::move(j));
    }

    // Scores (or reuses a cached score), credits the template, updates the pool and logs.
    void score_and_record(CandidateAlgorithm& c, double baseline, bool unparsed = false) {
        bool cached = false;
        if (unparsed) {
            c.status = CandidateStatus::parse_failed;
            c.score = 0;
        } else if (auto it = cache_.find(c.code_hash); it != cache_.end()) {
            cached = true;
            c.score = it->second.score;
            c.status = it->second.status;
            c.instances = it->second.instances;
        } else {
            auto s = score_candidate(c.source, c.id, exp_.train, scoring_, runner_);
            c.score = s.score;
            c.status = s.status;
            c.instances = s.instances;
            cache_.emplace(c.code_hash, std::move(s));
        }
        double gain = 0;
        if (!c.template_id.empty()) gain = templates_.record_outcome(c.template_id, baseline, c.score);
        PoolInsertResult ins;
        if (c.status == CandidateStatus::valid) ins = pool_.insert(c);
        const double best = pool_.empty() ? 0.0 : pool_.best().score;
        json j{{"candidate_id", c.id},
               {"status", std::string(to_string(c.status))},
               {"score", c.score},
               {"baseline", baseline},
               {"gain", gain},
               {"template_id", c.template_id},
               {"pool_inserted", ins.retained},
               {"evicted", opt(ins.evicted)},
               {"best_so_far", best},
               {"instances", instance_scores_json(c.instances)},
               {"cached", cached}};
        j["code_hash"] = unparsed ? json(nullptr) : json(c.code_hash);
        ledger_->append_event("candidate_scored", std::move(j));
    }

    void evolve_loop() {
        std::map<TemplateKind, std::size_t> accepted;
        while (result_.attempts < cfg_.max_candidates) {
            bool cross = rng_.chance(cfg_.crossover_rate);
            if (pool_.size() < 2) cross = false;
            const TemplateKind kind = cross ? TemplateKind::crossover : TemplateKind::mutation;
            std::vector<CandidateAlgorithm> parents;
            for (const auto* p : pool_.select_parents(cross ? 2 : 1, rng_)) parents.push_back(*p);
            const prompts::PromptTemplate tmpl = templates_.select(kind, rng_);
            ledger_->append_event("template_selected",
                                  {{"template_id", tmpl.id}, {"kind", std::string(prompts::to_string(kind))}});

            prompts::Slots slots{{"problem_description", cfg_.problem_description}};
            if (cross) {
                for (int i = 0; i < 2; ++i) {
                    slots["current_codes[" + std::to_string(i) + "]"] = parents[i].source;
                    slots["current_performances[" + std::to_string(i) + "]"] = fmt_score(parents[i].score);
                }
            } else {
                slots["current_code"] = parents[0].source;
                slots["current_performance"] = fmt_score(parents[0].score);
            }
            const std::string prompt = prompts::render(tmpl, slots);
            double baseline = 0;
            std::vector<std::string> parent_ids;
            for (const auto& p : parents) {
                baseline = std::max(baseline, p.score);
                parent_ids.push_back(p.id);
            }

            for (int attempt = 0; attempt <= cfg_.extraction_retries && result_.attempts < cfg_.max_candidates; ++attempt) {
                ++result_.attempts;
                CandidateAlgorithm c;
                c.id = "c" + padded(result_.attempts, 4);
                c.parents = parent_ids;
                c.template_id = tmpl.id;
                c.op_kind = cross ? OpKind::crossover : OpKind::mutation;
                const std::string tag = "r" + std::to_string(index_) + "-gen-" + padded(result_.attempts, 4);

                llm::LlmRequest req;
                req.prompt = prompt;
                req.temperature = cfg_.llm.temperature;
                req.max_tokens = cfg_.llm.max_tokens;
                req.model = cfg_.llm.model;
                req.tag = tag;
                const auto response = llm_.complete(req);

                std::optional<std::string> error;
                try {
                    c.source = strip_code_fence(prompts::extract_tagged_block(response.text, "code"));
                    if (c.source.empty()) error = "empty <code> block";
                } catch (const prompts::ExtractionError& e) {
                    error = e.what();
                }
                if (error) {
                    log_generated(c, tag, static_cast<std::size_t>(attempt), error);
                    const bool last = attempt == cfg_.extraction_retries || result_.attempts >= cfg_.max_candidates;
                    if (last) score_and_record(c, baseline, true);
                    continue;
                }
                c.code_hash = code_hash(c.source);
                log_generated(c, tag, static_cast<std::size_t>(attempt), std::nullopt);
                score_and_record(c, baseline);
                if (c.status == CandidateStatus::valid && ++accepted[kind] % cfg_.template_period == 0)
                    evolve_template(kind, accepted[kind] / cfg_.template_period);
                break;
            }
        }
    }

    void evolve_template(TemplateKind kind, std::size_t event) {
        const prompts::PromptTemplate parent = templates_.best(kind);
        const prompts::PromptTemplate& meta = templates_.best(TemplateKind::meta);
        const std::string prompt = prompts::render(meta, {{"old_prompt_function", parent.body}});
        std::string last_error;
        const int tries = 1 + cfg_.meta_retries;
        for (int k = 1; k <= tries; ++k) {
            llm::LlmRequest req;
            req.prompt = prompt;
            req.temperature = cfg_.llm.meta_temperature;
            req.max_tokens = cfg_.llm.max_tokens;
            req.model = cfg_.llm.model;
            req.tag = "r" + std::to_string(index_) + "-meta-" + std::string(prompts::to_string(kind)) + "-" +
                      padded(event, 3) + "-try-" + std::to_string(k);
            const auto response = llm_.complete(req);
            std::string body;
            try {
                body = prompts::extract_tagged_block(response.text, "prompt");
            } catch (const prompts::ExtractionError& e) {
                last_error = e.what();
                continue;
            }
            if (auto why = prompts::validate_body(kind, body)) {
                last_error = *why;
                continue;
            }
            const double prior = parent.stats.estimate();
            const auto res = templates_.insert(kind, body, parent.id, prior);
            log_template(kind, res, parent.id, prior, k, body);
            return;
        }
        ledger_->append_event("template_evolved", {{"template_id", nullptr},
                                                   {"kind", std::string(prompts::to_string(kind))},
                                                   {"parent", parent.id},
                                                   {"status", "skipped"},
                                                   {"tries", tries},
                                                   {"error", last_error}});
    }

    void abort(std::string reason) {
        result_.aborted = true;
        result_.reason = std::move(reason);
    }

    void finish() {
        if (!pool_.empty()) {
            result_.best = pool_.best();
            if (!exp_.test.empty() && !result_.aborted) {
                try {
                    auto s = score_candidate(result_.best->source, result_.best->id, exp_.test, scoring_, runner_);
                    result_.test_scores = std::move(s.instances);
                    result_.test_score = s.score;
                } catch (const runner::InfrastructureError& e) {
                    abort(std::string("runner failure on test instances: ") + e.what());
                }
            }
        }
        json end{{"phase", "end"},
                 {"outcome", result_.aborted ? "aborted" : "completed"},
                 {"reason", result_.reason},
                 {"attempts", result_.attempts}};
        end["best_candidate"] = result_.best ? json(result_.best->id) : json(nullptr);
        end["best_score"] = result_.best ? json(result_.best->score) : json(nullptr);
        end["test_score"] = result_.test_scores.empty() ? json(nullptr) : json(result_.test_score);
        ledger_->append_event("run_summary", std::move(end));
        ledger_->close();

        result_.pool = pool_;
        result_.templates = templates_;
        write_artifacts();
    }

    void write_artifacts() const {
        const auto& dir = result_.run_dir;
        templates_.save(dir / "templates");
        json cands = json::array();
        for (const auto& c : pool_.members())
            cands.push_back({{"id", c.id},
                             {"score", c.score},
                             {"status", std::string(to_string(c.status))},
                             {"code_hash", c.code_hash},
                             {"parents", c.parents},
                             {"template_id", c.template_id},
                             {"op_kind", std::string(to_string(c.op_kind))},
                             {"source", c.source}});
        std::ofstream(dir / "pool.json") << cands.dump(2) << '\n';
        if (result_.best) std::ofstream(dir / "best_candidate.txt") << result_.best->source << '\n';
        std::ofstream csv(dir / "scores.csv");
        csv << "set,instance,status,ratio,objective\n";
        auto rows = [&](const char* set, const std::vector<InstanceScore>& v) {
            for (const auto& s : v)
                csv << set << ',' << s.instance << ',' << to_string(s.status) << ',' << fmt_score(s.ratio) << ','
                    << fmt_score(s.objective) << '\n';
        };
        if (result_.best) rows("train", result_.best->instances);
        rows("test", result_.test_scores);
    }

    const Experiment& exp_;
    const RunConfig& cfg_;
    std::size_t index_;
    llm::LlmClient& llm_;
    runner::CandidateRunner& runner_;
    Rng rng_;
    CandidatePool pool_;
    prompts::TemplatePool templates_;
    std::optional<ledger::LedgerWriter> ledger_;
    ScoringOptions scoring_;
    std::map<std::string, CandidateScore> cache_;
    RunResult result_;
};

}  // namespace

RunResult run_coevolution(const Experiment& exp, std::size_t run_index, llm::LlmClient& llm,
                          runner::CandidateRunner& runner) {
    return Run(exp, run_index, llm, runner).execute();
}

ExperimentResult run_experiment(const Experiment& exp, llm::LlmClient& llm, runner::CandidateRunner& runner) {
    ExperimentResult out;
    json runs = json::array();
    for (std::size_t r = 0; r < exp.config.independent_runs; ++r) {
        out.runs.push_back(run_coevolution(exp, r, llm, runner));
        const auto& res = out.runs.back();
        if (res.best && (!out.best_run || res.best->score > out.runs[*out.best_run].best->score)) out.best_run = r;
        json j{{"run", r},
               {"attempts", res.attempts},
               {"aborted", res.aborted},
               {"reason", res.reason},
               {"ledger", res.ledger_path.string()}};
        j["best_candidate"] = res.best ? json(res.best->id) : json(nullptr);
        j["best_score"] = res.best ? json(res.best->score) : json(nullptr);
        j["test_score"] = res.test_scores.empty() ? json(nullptr) : json(res.test_score);
        runs.push_back(std::move(j));
    }
    json summary{{"runs", runs}};
    summary["best_run"] = out.best_run ? json(*out.best_run) : json(nullptr);
    std::filesystem::create_directories(exp.config.output_dir);
    std::ofstream(exp.config.output_dir / "summary.json") << summary.dump(2) << '\n';
    if (out.best_run && out.runs[*out.best_run].best)
        std::ofstream(exp.config.output_dir / "best_candidate.txt") << out.runs[*out.best_run].best->source << '\n';
    return out;
}

std::unique_ptr<llm::LlmClient> make_llm_client(const LlmSettings& s, std::unique_ptr<llm::LlmClient>& holder) {
    if (s.mode == "scripted") return std::make_unique<llm::ScriptedLlm>(llm::load_transcript(s.transcript));
    llm::HttpLlmConfig hc;
    hc.endpoint = s.endpoint;
    hc.model = s.model;
    hc.api_key_env = s.api_key_env;
    hc.max_retries = s.max_retries;
    hc.base_backoff = std::chrono::milliseconds(s.base_backoff_ms);
    hc.timeout = std::chrono::seconds(s.timeout_s);
    auto http = std::make_unique<llm::HttpLlm>(hc);
    if (!s.record) return http;
    holder = std::move(http);
    return std::make_unique<llm::RecordingLlm>(*holder, *s.record);
}

}  // namespace promptfwa
