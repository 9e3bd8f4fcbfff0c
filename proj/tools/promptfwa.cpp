#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "promptfwa/config.hpp"
#include "promptfwa/fwa.hpp"
#include "promptfwa/instance_io.hpp"
#include "promptfwa/ledger.hpp"
#include "promptfwa/orchestrator.hpp"

using namespace promptfwa;
using nlohmann::json;

namespace {

int cmd_evaluate(const std::string& instance_path, const std::string& solution_path, bool partial_groups) {
    const auto bench = problems::load_benchmark(instance_path);
    const auto doc = json::parse(problems::read_text_file(solution_path));
    const auto sol = problems::solution_from_json(problems::kind_of(bench.instance), doc);
    const auto out = problems::evaluate(bench.instance, sol, {.require_all_groups = !partial_groups});
    json j{{"feasible", out.feasible}, {"violation", std::string(problems::to_string(out.violation))}, {"detail", out.detail}};
    j["objective"] = out.objective ? json(*out.objective) : json(nullptr);
    if (bench.reference) j["ratio"] = problems::outcome_ratio(out, *bench.reference, bench.sense);
    std::cout << j.dump(2) << '\n';
    return out.feasible ? 0 : 1;
}

int cmd_solve(const std::string& instance_path, const std::string& preset, fwa::FwaParams params, std::uint64_t seed,
              std::optional<std::size_t> max_evals, double time_limit) {
    const auto bench = problems::load_benchmark(instance_path);
    fwa::EvaluationBudget budget;
    budget.max_evaluations = max_evals;
    if (time_limit > 0) budget.wall_clock = std::chrono::duration<double>(time_limit);
    const auto res = fwa::run_fwa(bench.instance, fwa::preset_from_string(preset), params, budget, seed);
    json j{{"feasible", res.feasible}, {"evaluations", res.evaluations}, {"iterations", res.iterations}};
    j["objective"] = res.feasible ? json(res.objective) : json(nullptr);
    if (res.feasible) {
        j["solution"] = problems::to_json(res.solution);
        if (bench.reference)
            j["ratio"] = problems::performance_ratio(res.objective, *bench.reference, bench.sense).value;
    }
    std::cout << j.dump(2) << '\n';
    return res.feasible ? 0 : 1;
}

int cmd_evolve(const std::string& config_path, const std::string& worker, const std::string& output) {
    auto cfg = load_config(config_path);
    if (!worker.empty()) cfg.worker = {worker};
    if (!output.empty()) cfg.output_dir = output;
    auto exp = Experiment::prepare(std::move(cfg));
    std::unique_ptr<llm::LlmClient> holder;
    auto client = make_llm_client(exp.config.llm, holder);
    runner::WorkerProcessRunner runner(exp.config.worker);
    const auto result = run_experiment(exp, *client, runner);
    for (const auto& r : result.runs) {
        std::cout << "run " << r.run_index << ": attempts " << r.attempts;
        if (r.best) std::cout << ", best " << r.best->id << " score " << r.best->score;
        if (!r.test_scores.empty()) std::cout << ", test " << r.test_score;
        if (r.aborted) std::cout << ", aborted: " << r.reason;
        std::cout << '\n';
    }
    if (result.best_run) std::cout << "best run: " << *result.best_run << '\n';
    std::cout << "output: " << exp.config.output_dir.string() << '\n';
    return result.best_run ? 0 : 1;
}

int cmd_replay(const std::string& ledger_path) {
    const auto loaded = ledger::read_ledger(ledger_path);
    const auto res = ledger::replay(loaded);
    std::cout << "records applied: " << res.records_applied << '\n';
    if (res.truncated) std::cout << "TRUNCATED: " << res.truncation << '\n';
    std::cout << "templates:\n";
    for (const auto& t : res.templates.all())
        std::cout << "  " << t.id << " uses " << t.stats.uses << " estimate " << t.stats.estimate() << '\n';
    std::cout << "pool:\n";
    for (const auto* c : res.pool.ranked()) std::cout << "  " << c->id << " score " << c->score << '\n';

    const auto saved = std::filesystem::path(ledger_path).parent_path() / "templates";
    if (std::filesystem::exists(saved / "pool.json")) {
        const bool same = prompts::TemplatePool::load(saved) == res.templates;
        std::cout << "saved template state " << (same ? "matches" : "DIFFERS") << '\n';
        if (!same) return 1;
    }
    return res.truncated ? 2 : 0;
}

int cmd_report(const std::string& ledger_path, const std::string& out_path) {
    const auto rows = ledger::report_trajectory(ledger::read_ledger(ledger_path).records);
    if (out_path.empty()) {
        ledger::write_trajectory_csv(std::cout, rows);
    } else {
        std::ofstream out(out_path);
        ledger::write_trajectory_csv(out, rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-evolution of fireworks algorithms and prompt templates"};
    app.require_subcommand(1);

    std::string instance, solution, config, ledger_path, out_path, preset = "baseline";
    bool partial_groups = false;
    auto* ev = app.add_subcommand("evaluate", "Check a solution document against an instance");
    ev->add_option("instance", instance)->required()->check(CLI::ExistingFile);
    ev->add_option("solution", solution)->required()->check(CLI::ExistingFile);
    ev->add_flag("--allow-empty-groups", partial_groups, "EPP: score assignments that leave a group empty");

    fwa::FwaParams params;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_evals;
    double time_limit = 0;
    auto* so = app.add_subcommand("solve", "Run the native fireworks algorithm on an instance");
    so->add_option("instance", instance)->required()->check(CLI::ExistingFile);
    so->add_option("--preset", preset)->check(CLI::IsMember({"baseline", "appendix"}));
    so->add_option("--seed", seed);
    so->add_option("--max-evaluations", max_evals);
    so->add_option("--time-limit", time_limit, "Seconds, 0 for none");
    so->add_option("--fw-size", params.fw_size);
    so->add_option("--sp-size", params.sp_size);
    so->add_option("--init-amp", params.init_amp);
    so->add_option("--max-iter", params.max_iter);
    so->add_option("--mutation-rate", params.mutation_rate);
    so->add_option("--stall-limit", params.stall_limit);

    auto* evo = app.add_subcommand("evolve", "Run the co-evolution experiment described by a config file");
    std::string worker_override, output_override;
    evo->add_option("config", config)->required()->check(CLI::ExistingFile);
    evo->add_option("--worker", worker_override, "Worker executable, replacing the configured command");
    evo->add_option("--output", output_override, "Output directory, replacing the configured one");

    auto* rp = app.add_subcommand("replay", "Rebuild pool and template state from a ledger");
    rp->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);

    auto* rep = app.add_subcommand("report", "Export the best-so-far trajectory of a ledger as CSV");
    rep->add_option("ledger", ledger_path)->required()->check(CLI::ExistingFile);
    rep->add_option("-o,--output", out_path, "CSV file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*ev) return cmd_evaluate(instance, solution, partial_groups);
        if (*so) {
            params.validate();
            return cmd_solve(instance, preset, params, seed, max_evals, time_limit);
        }
        if (*evo) return cmd_evolve(config, worker_override, output_override);
        if (*rp) return cmd_replay(ledger_path);
        if (*rep) return cmd_report(ledger_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
