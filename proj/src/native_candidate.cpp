#include "promptfwa/native_candidate.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

#include "promptfwa/instance_io.hpp"

namespace promptfwa::native {

namespace {

constexpr std::string_view kMarker = "native-fwa:";

template <class T>
T number(std::string_view key, std::string_view value) {
    T out{};
    const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
    if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
        throw CandidateSyntaxError("bad value for " + std::string(key) + ": " + std::string(value));
    return out;
}

Fault fault_from(std::string_view v) {
    if (v == "none") return Fault::none;
    if (v == "spin") return Fault::spin;
    if (v == "crash") return Fault::crash;
    if (v == "infeasible") return Fault::infeasible;
    if (v == "wrong-objective") return Fault::wrong_objective;
    throw CandidateSyntaxError("unknown fault: " + std::string(v));
}

}  // namespace

void check_brackets(std::string_view src) {
    std::string stack;
    std::size_t line = 1;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const char c = src[i];
        if (c == '\n') ++line;
        if (c == '#') {
            while (i + 1 < src.size() && src[i + 1] != '\n') ++i;
        } else if (c == '"' || c == '\'') {
            const bool triple = src.substr(i, 3) == std::string(3, c);
            const std::string close = triple ? std::string(3, c) : std::string(1, c);
            std::size_t j = i + close.size();
            for (; j < src.size(); ++j) {
                if (src[j] == '\\') {
                    ++j;
                    continue;
                }
                if (!triple && src[j] == '\n') break;
                if (src.substr(j, close.size()) == close) break;
            }
            if (j >= src.size() || (!triple && src[j] == '\n'))
                throw CandidateSyntaxError("line " + std::to_string(line) + ": unterminated string");
            for (std::size_t k = i; k < j; ++k)
                if (src[k] == '\n') ++line;
            i = j + close.size() - 1;
        } else if (c == '(' || c == '[' || c == '{') {
            stack.push_back(c);
        } else if (c == ')' || c == ']' || c == '}') {
            const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
            if (stack.empty() || stack.back() != open)
                throw CandidateSyntaxError("line " + std::to_string(line) + ": unmatched '" + std::string(1, c) + "'");
            stack.pop_back();
        }
    }
    if (!stack.empty()) throw CandidateSyntaxError("unclosed '" + std::string(1, stack.back()) + "'");
}

Directive parse_directive(std::string_view source) {
    check_brackets(source);
    std::istringstream in{std::string(source)};
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash == std::string::npos) continue;
        const auto at = line.find(kMarker, hash);
        if (at == std::string::npos) continue;
        Directive d;
        std::istringstream tokens(line.substr(at + kMarker.size()));
        std::string tok;
        while (tokens >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw CandidateSyntaxError("directive token without '=': " + tok);
            const std::string_view key(tok.data(), eq);
            const std::string_view val(tok.data() + eq + 1, tok.size() - eq - 1);
            if (key == "preset") {
                try {
                    d.preset = fwa::preset_from_string(val);
                } catch (const std::exception& e) {
                    throw CandidateSyntaxError(e.what());
                }
            } else if (key == "fw_size") {
                d.params.fw_size = number<std::size_t>(key, val);
            } else if (key == "sp_size") {
                d.params.sp_size = number<std::size_t>(key, val);
            } else if (key == "init_amp") {
                d.params.init_amp = number<double>(key, val);
            } else if (key == "max_iter") {
                d.params.max_iter = number<std::size_t>(key, val);
            } else if (key == "mutation_rate") {
                d.params.mutation_rate = number<double>(key, val);
            } else if (key == "stall_limit") {
                d.params.stall_limit = number<std::size_t>(key, val);
            } else if (key == "fault") {
                d.fault = fault_from(val);
            } else {
                throw CandidateSyntaxError("unknown directive key: " + std::string(key));
            }
        }
        return d;
    }
    throw CandidateSyntaxError("no native-fwa directive");
}

runner::EvalReport run_job(const runner::EvalJob& job) {
    const auto start = std::chrono::steady_clock::now();
    runner::EvalReport r;
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    Directive d;
    try {
        d = parse_directive(job.source);
    } catch (const CandidateSyntaxError& e) {
        r.status = CandidateStatus::parse_failed;
        r.detail = e.what();
        return r;
    }
    if (d.fault == Fault::spin) {
        volatile std::uint64_t sink = 0;
        for (;;) sink = sink + 1;
    }
    if (d.fault == Fault::crash) {
        r.status = CandidateStatus::runtime_failed;
        r.detail = "candidate raised an exception";
        r.wall_time_s = elapsed();
        return r;
    }
    try {
        d.params.validate();
        fwa::EvaluationBudget budget;
        budget.max_evaluations = job.max_evaluations;
        budget.wall_clock = std::chrono::duration<double>(job.time_limit_s);
        const auto res = fwa::run_fwa(job.instance.instance, d.preset, d.params, budget, job.seed);
        r.evaluations = res.evaluations;
        if (!res.feasible || d.fault == Fault::infeasible) {
            r.status = CandidateStatus::infeasible_only;
            r.detail = "no feasible solution found";
        } else {
            r.status = CandidateStatus::valid;
            r.solution = problems::to_json(res.solution);
            r.objective = d.fault == Fault::wrong_objective ? res.objective + 1 : res.objective;
        }
    } catch (const std::exception& e) {
        r.status = CandidateStatus::runtime_failed;
        r.detail = e.what();
    }
    r.wall_time_s = elapsed();
    return r;
}

runner::EvalReport InProcessRunner::run(const runner::EvalJob& job) {
    try {
        if (parse_directive(job.source).fault == Fault::spin) {
            runner::EvalReport r;
            r.status = CandidateStatus::timed_out;
            r.wall_time_s = job.time_limit_s;
            r.detail = "killed at the wall-clock limit";
            return r;
        }
    } catch (const CandidateSyntaxError&) {
    }
    return run_job(job);
}

}  // namespace promptfwa::native
