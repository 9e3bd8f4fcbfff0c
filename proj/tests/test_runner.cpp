#include <doctest.h>

#include <cstdio>
#include <dirent.h>

#include "acceptance_checks.hpp"
#include "promptfwa/native_candidate.hpp"
#include "promptfwa/runner.hpp"

using namespace promptfwa;
using namespace promptfwa::runner;

namespace {

// Live processes whose command line starts with the worker binary.
std::size_t worker_processes() {
    std::size_t n = 0;
    DIR* proc = opendir("/proc");
    if (!proc) return 0;
    while (auto* e = readdir(proc)) {
        const std::string name = e->d_name;
        if (name.find_first_not_of("0123456789") != std::string::npos) continue;
        const auto cmd = support::slurp("/proc/" + name + "/cmdline");
        if (cmd.rfind(support::kWorker.string(), 0) == 0) ++n;
    }
    closedir(proc);
    return n;
}

std::string first_line_of(const std::string& command) {
    FILE* p = popen(command.c_str(), "r");
    REQUIRE(p);
    char buf[4096] = {};
    const bool got = fgets(buf, sizeof buf, p) != nullptr;
    pclose(p);
    return got ? std::string(buf) : "";
}

EvalJob toy_job(const std::string& directive, double limit = 10) {
    EvalJob job;
    job.instance = support::instance("airland_toy4");
    job.source = support::candidate_source(directive);
    job.seed = 3;
    job.time_limit_s = limit;
    return job;
}

problems::BenchmarkInstance one_plane(double reference) {
    problems::AircraftLandingInstance inst;
    inst.planes = {{0, 0, 5, 10, 1, 1}};
    inst.separation = problems::Matrix<double>(1, 1, 0.0);
    return {"one", inst, reference, problems::Sense::minimize};
}

EvalReport valid_report(std::vector<double> times, std::optional<double> objective) {
    EvalReport r;
    r.status = CandidateStatus::valid;
    r.solution = problems::to_json(problems::Solution{problems::LandingSchedule{{}, std::move(times)}});
    r.objective = objective;
    return r;
}

}  // namespace

TEST_SUITE("runner") {
    TEST_CASE("jobs and reports round-trip through their JSON lines") {
        auto job = toy_job("preset=baseline");
        job.max_evaluations = 500;
        const auto back = eval_job_from_json(json::parse(to_json(job).dump()));
        CHECK(back.source == job.source);
        CHECK(back.seed == job.seed);
        CHECK(back.time_limit_s == job.time_limit_s);
        CHECK(back.max_evaluations == 500);
        CHECK(back.instance.name == job.instance.name);
        CHECK(back.instance.reference == job.instance.reference);

        EvalReport r = valid_report({5}, 0.0);
        r.evaluations = 17;
        r.wall_time_s = 0.25;
        r.detail = "ok";
        const auto rb = eval_report_from_json(json::parse(to_json(r).dump()));
        CHECK(rb.status == r.status);
        CHECK(rb.solution == r.solution);
        CHECK(rb.objective == r.objective);
        CHECK(rb.evaluations == 17);
        CHECK(rb.detail == "ok");

        EvalReport empty;
        empty.status = CandidateStatus::timed_out;
        const auto eb = eval_report_from_json(json::parse(to_json(empty).dump()));
        CHECK_FALSE(eb.solution);
        CHECK_FALSE(eb.objective);
    }

    TEST_CASE("a fresh worker announces protocol 1 and all four problems") {
        const auto hs = parse_handshake(first_line_of(support::kWorker.string() + " </dev/null"));
        CHECK(hs.proto == 1);
        CHECK(hs.problems == std::vector<std::string>{"airland", "flowshop", "pmedian", "epp"});
        CHECK_NOTHROW(check_handshake(hs, "epp"));
        CHECK_THROWS_AS(check_handshake(hs, "epp", 2), ProtocolError);
        CHECK_THROWS_AS(check_handshake({1, {"airland"}}, "flowshop"), ProtocolError);
        CHECK_THROWS_AS(parse_handshake("not json"), ProtocolError);
    }

    TEST_CASE("version mismatches are refused with a clear error") {
        WorkerProcessRunner expects_two({support::kWorker.string()}, std::chrono::seconds(1), 2);
        try {
            expects_two.run(toy_job("preset=baseline"));
            FAIL("no error");
        } catch (const ProtocolError& e) {
            CHECK(std::string(e.what()).find("protocol 1, expected 2") != std::string::npos);
        }
        WorkerProcessRunner speaks_two({support::kWorker.string(), "--proto", "2"});
        CHECK_THROWS_AS(speaks_two.run(toy_job("preset=baseline")), ProtocolError);
        WorkerProcessRunner no_landing({support::kWorker.string(), "--problems", "epp"});
        CHECK_THROWS_AS(no_landing.run(toy_job("preset=baseline")), ProtocolError);
        CHECK(worker_processes() == 0);
    }

    TEST_CASE("a missing worker binary is an infrastructure error") {
        WorkerProcessRunner missing({"/nonexistent/promptfwa-worker"});
        CHECK_THROWS_AS(missing.run(toy_job("preset=baseline")), InfrastructureError);
        WorkerProcessRunner empty({});
        CHECK_THROWS_AS(empty.run(toy_job("preset=baseline")), InfrastructureError);
    }

    TEST_CASE("broken syntax is parse_failed through the worker") {
        WorkerProcessRunner worker({support::kWorker.string()});
        auto job = toy_job("preset=baseline");
        job.source = "def x(:\n";
        CHECK(worker.run(job).status == CandidateStatus::parse_failed);
        job.source = support::seed_body();  // no directive
        CHECK(worker.run(job).status == CandidateStatus::parse_failed);
    }

    TEST_CASE("a busy loop is killed near the limit and leaves no processes behind") {
        WorkerProcessRunner worker({support::kWorker.string()}, std::chrono::milliseconds(500));
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = worker.run(toy_job("fault=spin", 1));
        const double secs = acceptance::seconds_since(t0);
        CHECK(r.status == CandidateStatus::timed_out);
        CHECK(secs >= 1.0);
        CHECK(secs <= 2.0);
        CHECK(worker_processes() == 0);
    }

    TEST_CASE("faults map to their statuses") {
        WorkerProcessRunner worker({support::kWorker.string()});
        CHECK(worker.run(toy_job("fault=crash")).status == CandidateStatus::runtime_failed);
        CHECK(worker.run(toy_job("fault=infeasible")).status == CandidateStatus::infeasible_only);
        const auto bench = support::instance("airland_toy4");
        const auto wrong = worker.run(toy_job("fault=wrong-objective"));
        CHECK(wrong.status == CandidateStatus::valid);
        const auto s = score_report(bench, wrong, {});
        CHECK(s.status == CandidateStatus::runtime_failed);
        CHECK(s.ratio == 0);
    }

    TEST_CASE("worker and in-process runs agree and respect the evaluation budget") {
        WorkerProcessRunner worker({support::kWorker.string()});
        native::InProcessRunner local;
        for (const char* name : {"airland_toy6", "flowshop_toy6", "pmedian_toy9", "epp_toy9"}) {
            EvalJob job = toy_job("preset=baseline fw_size=3 sp_size=9 max_iter=5");
            job.instance = support::instance(name);
            job.max_evaluations = 40;
            const auto a = worker.run(job);
            const auto b = local.run(job);
            INFO(name);
            CHECK(a.status == CandidateStatus::valid);
            CHECK(a.solution == b.solution);
            CHECK(a.objective == b.objective);
            CHECK(a.evaluations <= 40);
            const auto s = score_report(job.instance, a, {});
            CHECK(s.status == CandidateStatus::valid);
            CHECK(s.ratio > 0);
            CHECK(s.ratio <= 1.0 + 1e-12);
        }
    }

    TEST_CASE("the in-process runner reports a spin fault as timed out") {
        native::InProcessRunner local;
        CHECK(local.run(toy_job("fault=spin")).status == CandidateStatus::timed_out);
    }

    TEST_CASE("worker reports are re-checked against the primary evaluator") {
        const auto bench = one_plane(2.0);
        auto s = score_report(bench, valid_report({7}, 2.0), {});
        CHECK(s.status == CandidateStatus::valid);
        CHECK(s.ratio == 1.0);
        s = score_report(bench, valid_report({6}, 1.0), {});
        CHECK(s.ratio == 2.0);

        CHECK(score_report(bench, valid_report({11}, 6.0), {}).status == CandidateStatus::infeasible_only);
        CHECK(score_report(bench, valid_report({7}, 2.5), {}).status == CandidateStatus::runtime_failed);
        CHECK(score_report(bench, valid_report({7}, 2.0 + 1e-12), {}).status == CandidateStatus::valid);

        EvalReport no_solution;
        no_solution.status = CandidateStatus::valid;
        CHECK(score_report(bench, no_solution, {}).status == CandidateStatus::runtime_failed);

        EvalReport garbage = valid_report({7}, 2.0);
        garbage.solution = json{{"times", "soon"}};
        CHECK(score_report(bench, garbage, {}).status == CandidateStatus::runtime_failed);

        EvalReport timed;
        timed.status = CandidateStatus::timed_out;
        timed.detail = "killed";
        s = score_report(bench, timed, {});
        CHECK(s.status == CandidateStatus::timed_out);
        CHECK(s.ratio == 0);

        s = score_report(bench, valid_report({5}, 0.0), {});  // cost 0 against a positive reference
        CHECK(s.status == CandidateStatus::runtime_failed);
        CHECK(s.ratio == 0);
        CHECK(s.detail == "performance ratio undefined");
    }

    TEST_CASE("directive parsing") {
        const auto d = native::parse_directive(
            "x = 1\n# native-fwa: preset=appendix fw_size=3 sp_size=12 init_amp=2.5 max_iter=7 mutation_rate=0.1 "
            "stall_limit=4 fault=none\n");
        CHECK(d.preset == fwa::Preset::appendix);
        CHECK(d.params.fw_size == 3);
        CHECK(d.params.sp_size == 12);
        CHECK(d.params.init_amp == 2.5);
        CHECK(d.params.max_iter == 7);
        CHECK(d.params.mutation_rate == 0.1);
        CHECK(d.params.stall_limit == 4);
        CHECK(d.fault == native::Fault::none);
        CHECK(native::parse_directive("# native-fwa: fault=wrong-objective").fault == native::Fault::wrong_objective);
        CHECK_THROWS_AS(native::parse_directive("# native-fwa: colour=blue"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::parse_directive("# native-fwa: fw_size=many"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::parse_directive("# native-fwa: preset"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::parse_directive("print('no directive')"), native::CandidateSyntaxError);
    }

    TEST_CASE("bracket balance ignores strings and comments") {
        CHECK_NOTHROW(native::check_brackets("f(x, [1, 2], {'a': '('})  # ) ] }"));
        CHECK_NOTHROW(native::check_brackets("s = \"[\" + 'x)'\n"));
        CHECK_NOTHROW(native::check_brackets("s = \"\"\"(\n]\"\"\"\n"));
        CHECK_THROWS_AS(native::check_brackets("def x(:"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::check_brackets("a = [1, 2)"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::check_brackets("a = 1)"), native::CandidateSyntaxError);
        CHECK_THROWS_AS(native::check_brackets("s = 'open"), native::CandidateSyntaxError);
    }

    TEST_CASE("shipped seeds pass the checks") {
        for (const char* seed : {"fwa_baseline.py", "fwa_airland.py"}) {
            const auto src = support::slurp(support::kSeeds / seed);
            CHECK_NOTHROW(native::parse_directive(src));
        }
    }

    TEST_CASE("runner process contract") {
        const auto c = acceptance::runner_secondary();
        INFO(c.detail);
        CHECK(c.pass);
    }
}
