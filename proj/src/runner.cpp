#include "promptfwa/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <utility>

#include "promptfwa/instance_io.hpp"

namespace promptfwa::runner {

using Clock = std::chrono::steady_clock;

json to_json(const EvalJob& job) {
    json j{{"source", job.source},
           {"instance", problems::to_json(job.instance)},
           {"seed", job.seed},
           {"time_limit_s", job.time_limit_s}};
    j["max_evaluations"] = job.max_evaluations ? json(*job.max_evaluations) : json(nullptr);
    return j;
}

EvalJob eval_job_from_json(const json& doc) {
    EvalJob job;
    job.source = doc.at("source").get<std::string>();
    job.instance = problems::benchmark_from_json(doc.at("instance"));
    job.seed = doc.at("seed").get<std::uint64_t>();
    job.time_limit_s = doc.at("time_limit_s").get<double>();
    if (doc.contains("max_evaluations") && !doc["max_evaluations"].is_null())
        job.max_evaluations = doc["max_evaluations"].get<std::size_t>();
    return job;
}

json to_json(const EvalReport& r) {
    json j{{"status", to_string(r.status)},
           {"evaluations", r.evaluations},
           {"wall_time_s", r.wall_time_s},
           {"detail", r.detail}};
    j["solution"] = r.solution ? *r.solution : json(nullptr);
    j["objective"] = r.objective ? json(*r.objective) : json(nullptr);
    return j;
}

EvalReport eval_report_from_json(const json& doc) {
    EvalReport r;
    r.status = candidate_status_from_string(doc.at("status").get<std::string>());
    if (doc.contains("solution") && !doc["solution"].is_null()) r.solution = doc["solution"];
    if (doc.contains("objective") && doc["objective"].is_number()) r.objective = doc["objective"].get<double>();
    r.evaluations = doc.value("evaluations", std::size_t{0});
    r.wall_time_s = doc.value("wall_time_s", 0.0);
    r.detail = doc.value("detail", "");
    return r;
}

json to_json(const Handshake& hs) { return {{"proto", hs.proto}, {"problems", hs.problems}}; }

Handshake parse_handshake(std::string_view line) {
    try {
        const json j = json::parse(line);
        Handshake hs;
        hs.proto = j.at("proto").get<int>();
        hs.problems = j.at("problems").get<std::vector<std::string>>();
        return hs;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed handshake: ") + e.what());
    }
}

void check_handshake(const Handshake& hs, std::string_view problem, int expected_proto) {
    if (hs.proto != expected_proto)
        throw ProtocolError("worker speaks protocol " + std::to_string(hs.proto) + ", expected " +
                            std::to_string(expected_proto));
    for (const auto& p : hs.problems)
        if (p == problem) return;
    throw ProtocolError("worker does not support problem " + std::string(problem));
}

namespace {

struct Child {
    pid_t pid = -1;
    int in = -1;   // worker stdin
    int out = -1;  // worker stdout

    Child() = default;
    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;
    Child(Child&& o) noexcept : pid(std::exchange(o.pid, -1)), in(std::exchange(o.in, -1)), out(std::exchange(o.out, -1)) {}

    void kill_group() const {
        if (pid > 0) ::kill(-pid, SIGKILL);
    }
    void reap() {
        if (pid > 0) {
            int status = 0;
            while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            pid = -1;
        }
    }
    ~Child() {
        kill_group();
        reap();
        if (in >= 0) ::close(in);
        if (out >= 0) ::close(out);
    }
};

Child spawn(const std::vector<std::string>& command) {
    if (command.empty()) throw InfrastructureError("empty worker command");
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw InfrastructureError("pipe: " + std::string(std::strerror(errno)));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw InfrastructureError("pipe: " + std::string(std::strerror(errno)));
    }
    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw InfrastructureError("fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    Child c;
    c.pid = pid;
    c.in = to_child[1];
    c.out = from_child[0];
    return c;
}

enum class ReadResult { line, eof, deadline };

// Reads up to the next newline into `line`, keeping any surplus in `buffer`.
ReadResult read_line(int fd, std::string& buffer, std::string& line, Clock::time_point deadline) {
    for (;;) {
        const auto nl = buffer.find('\n');
        if (nl != std::string::npos) {
            line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            return ReadResult::line;
        }
        const auto now = Clock::now();
        if (now >= deadline) return ReadResult::deadline;
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd p{fd, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(ms + 1, 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw InfrastructureError("poll: " + std::string(std::strerror(errno)));
        }
        if (rc == 0) continue;
        char chunk[65536];
        const ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw InfrastructureError("read: " + std::string(std::strerror(errno)));
        }
        if (n == 0) {
            if (!buffer.empty()) {
                line = std::move(buffer);
                buffer.clear();
                return ReadResult::line;
            }
            return ReadResult::eof;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw InfrastructureError("worker closed its input: " + std::string(std::strerror(errno)));
        }
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace

WorkerProcessRunner::WorkerProcessRunner(std::vector<std::string> command, std::chrono::milliseconds grace, int expected_proto)
    : command_(std::move(command)), grace_(grace), expected_proto_(expected_proto) {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

EvalReport WorkerProcessRunner::run(const EvalJob& job) {
    const auto problem = problems::to_string(problems::kind_of(job.instance.instance));
    Child child = spawn(command_);
    std::string buffer, line;

    const auto hs_deadline = Clock::now() + std::chrono::seconds(30);
    switch (read_line(child.out, buffer, line, hs_deadline)) {
        case ReadResult::eof: throw InfrastructureError("worker exited before its handshake: " + command_.front());
        case ReadResult::deadline: throw InfrastructureError("worker sent no handshake: " + command_.front());
        case ReadResult::line: break;
    }
    check_handshake(parse_handshake(line), problem, expected_proto_);

    const auto start = Clock::now();
    write_all(child.in, to_json(job).dump() + "\n");
    ::close(child.in);
    child.in = -1;

    const auto deadline =
        start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(job.time_limit_s)) + grace_;
    const auto got = read_line(child.out, buffer, line, deadline);
    const double wall = std::chrono::duration<double>(Clock::now() - start).count();
    child.kill_group();
    child.reap();

    if (got == ReadResult::deadline) {
        EvalReport r;
        r.status = CandidateStatus::timed_out;
        r.wall_time_s = wall;
        r.detail = "killed at the wall-clock limit";
        return r;
    }
    if (got == ReadResult::eof) throw InfrastructureError("worker exited without a report");
    try {
        auto report = eval_report_from_json(json::parse(line));
        if (report.wall_time_s <= 0) report.wall_time_s = wall;
        return report;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("malformed report: ") + e.what());
    }
}

}  // namespace promptfwa::runner
