#include "promptfwa/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace promptfwa::ledger {

namespace {

bool known_event(std::string_view e) {
    for (auto k : kEvents)
        if (k == e) return true;
    return false;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

}  // namespace

ClockMode clock_mode_from_string(std::string_view name) {
    if (name == "logical") return ClockMode::logical;
    if (name == "wall") return ClockMode::wall;
    throw std::invalid_argument("unknown ledger clock: " + std::string(name));
}

std::string_view to_string(ClockMode mode) { return mode == ClockMode::logical ? "logical" : "wall"; }

std::filesystem::path index_path(const std::filesystem::path& ledger) {
    return ledger.parent_path() / (ledger.filename().string() + ".index.json");
}

// ---- writer -------------------------------------------------------------------

LedgerWriter::LedgerWriter(const std::filesystem::path& path, ClockMode clock) : path_(path), clock_(clock) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw LedgerError("cannot open ledger " + path_.string() + ": " + std::strerror(errno));
    write_index();
}

LedgerWriter::~LedgerWriter() {
    if (fd_ >= 0) ::close(fd_);
}

void LedgerWriter::write_index() const {
    const json idx{{"ledger", path_.filename().string()}, {"records", last_seq_}, {"complete", closed_}};
    const auto target = index_path(path_);
    const auto tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << idx.dump() << '\n';
        if (!out.flush()) throw LedgerError("cannot write ledger index " + tmp);
    }
    std::filesystem::rename(tmp, target);
}

void LedgerWriter::append(json record) {
    if (closed_) throw LedgerError("ledger is closed");
    if (!record.is_object() || !record.contains("seq") || !record["seq"].is_number_integer() ||
        record["seq"].get<std::int64_t>() < 1)
        throw LedgerError("record has no sequence number");
    const auto seq = record["seq"].get<std::uint64_t>();
    if (seq != last_seq_ + 1)
        throw LedgerError("out-of-order sequence " + std::to_string(seq) + " after " + std::to_string(last_seq_));
    if (!record.contains("event") || !record["event"].is_string() || !known_event(record["event"].get<std::string>()))
        throw LedgerError("record has no known event");
    if (!record.contains("timestamp"))
        record["timestamp"] = clock_ == ClockMode::logical ? json(seq) : json(utc_now());
    const std::string line = record.dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw LedgerError("ledger write failure: " + std::string(std::strerror(errno)));
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw LedgerError("ledger fsync failure: " + std::string(std::strerror(errno)));
    last_seq_ = seq;
    write_index();
}

std::uint64_t LedgerWriter::append_event(std::string_view event, json fields) {
    if (!fields.is_object()) fields = json::object();
    fields["seq"] = last_seq_ + 1;
    fields["event"] = std::string(event);
    append(std::move(fields));
    return last_seq_;
}

void LedgerWriter::close() {
    if (closed_) return;
    closed_ = true;
    write_index();
}

// ---- reader -------------------------------------------------------------------

LoadedLedger parse_ledger(std::string_view text) {
    LoadedLedger out;
    std::size_t pos = 0, lineno = 0;
    std::uint64_t expected = 1;
    while (pos < text.size()) {
        ++lineno;
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.truncated = true;
            out.truncation = "unterminated record at line " + std::to_string(lineno);
            break;
        }
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            out.truncated = true;
            out.truncation = "unparseable record at line " + std::to_string(lineno);
            break;
        }
        if (!j.is_object() || !j.contains("seq") || !j["seq"].is_number_unsigned() ||
            j["seq"].get<std::uint64_t>() != expected) {
            out.truncated = true;
            out.truncation = "sequence break at line " + std::to_string(lineno);
            break;
        }
        ++expected;
        out.records.push_back(std::move(j));
    }
    return out;
}

LoadedLedger read_ledger(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LedgerError("cannot read ledger " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto out = parse_ledger(ss.str());
    std::ifstream idx(index_path(path));
    if (idx && !out.truncated) {
        try {
            const json j = json::parse(idx);
            const auto listed = j.at("records").get<std::size_t>();
            if (listed > out.records.size()) {
                out.truncated = true;
                out.truncation = "index lists " + std::to_string(listed) + " records, file holds " +
                                 std::to_string(out.records.size());
            }
        } catch (const json::exception&) {
        }
    }
    return out;
}

// ---- replay -------------------------------------------------------------------

json to_json(const InstanceScore& s) {
    return {{"instance", s.instance}, {"ratio", s.ratio}, {"status", to_string(s.status)},
            {"objective", s.objective}, {"detail", s.detail}};
}

InstanceScore instance_score_from_json(const json& j) {
    InstanceScore s;
    s.instance = j.at("instance").get<std::string>();
    s.ratio = j.at("ratio").get<double>();
    s.status = candidate_status_from_string(j.at("status").get<std::string>());
    s.objective = j.value("objective", 0.0);
    s.detail = j.value("detail", "");
    return s;
}

Replayer::Replayer() = default;

void Replayer::apply(const json& r) {
    const auto event = r.at("event").get<std::string>();
    const auto seq = r.at("seq").get<std::uint64_t>();
    auto diverged = [&](const std::string& what) {
        return LedgerError("replay diverged at seq " + std::to_string(seq) + ": " + what);
    };

    if (event == "run_summary") {
        const auto phase = r.at("phase").get<std::string>();
        if (phase == "start") {
            const auto& cfg = r.at("config");
            pool_ = CandidatePool(cfg.at("pool_capacity").get<std::size_t>());
            templates_ = prompts::TemplatePool(cfg.at("template_capacity").get<std::size_t>());
            generated_.clear();
            started_ = true;
            finished_ = false;
        } else if (phase == "end") {
            finished_ = true;
        }
        return;
    }
    if (!started_) throw diverged("event before the run start record");

    if (event == "template_evolved") {
        if (r.at("status").get<std::string>() != "inserted") return;
        const auto kind = prompts::template_kind_from_string(r.at("kind").get<std::string>());
        const auto res = templates_.insert(kind, r.at("body").get<std::string>(), r.at("parent").get<std::string>(),
                                           r.at("prior").get<double>());
        const auto id = r.at("template_id").get<std::string>();
        const std::string got = res.inserted ? res.inserted->id : *res.evicted;
        if (got != id) throw diverged("template id " + got + " != " + id);
        if (res.evicted != opt_string(r, "evicted")) throw diverged("template eviction differs");
    } else if (event == "template_selected") {
        if (!templates_.contains(r.at("template_id").get<std::string>())) throw diverged("unknown template selected");
    } else if (event == "candidate_generated") {
        CandidateAlgorithm c;
        c.id = r.at("candidate_id").get<std::string>();
        c.op_kind = op_kind_from_string(r.at("op_kind").get<std::string>());
        c.parents = r.at("parents").get<std::vector<std::string>>();
        c.template_id = r.value("template_id", "");
        c.source = opt_string(r, "source").value_or("");
        c.code_hash = opt_string(r, "code_hash").value_or("");
        generated_[c.id] = std::move(c);
    } else if (event == "candidate_scored") {
        const auto id = r.at("candidate_id").get<std::string>();
        auto it = generated_.find(id);
        if (it == generated_.end()) throw diverged("candidate " + id + " scored before it was generated");
        CandidateAlgorithm c = it->second;
        c.score = r.at("score").get<double>();
        c.status = candidate_status_from_string(r.at("status").get<std::string>());
        for (const auto& s : r.at("instances")) c.instances.push_back(instance_score_from_json(s));
        if (!c.template_id.empty()) {
            const double gain = templates_.record_outcome(c.template_id, r.at("baseline").get<double>(), c.score);
            if (gain != r.at("gain").get<double>()) throw diverged("gain differs for " + id);
        }
        if (c.status == CandidateStatus::valid) {
            const auto res = pool_.insert(c);
            if (res.retained != r.at("pool_inserted").get<bool>()) throw diverged("pool insertion differs for " + id);
            if (res.evicted != opt_string(r, "evicted")) throw diverged("pool eviction differs for " + id);
        }
    } else {
        throw diverged("unknown event " + event);
    }
}

ReplayResult replay(const LoadedLedger& ledger) {
    Replayer rp;
    ReplayResult out;
    for (const auto& r : ledger.records) {
        rp.apply(r);
        ++out.records_applied;
    }
    out.pool = rp.pool();
    out.templates = rp.templates();
    out.truncated = ledger.truncated;
    out.truncation = ledger.truncation;
    if (!out.truncated && !ledger.records.empty() && !rp.finished()) {
        out.truncated = true;
        out.truncation = "ledger ends without a closing run_summary";
    }
    return out;
}

// ---- trajectory -----------------------------------------------------------------

std::vector<TrajectoryRow> report_trajectory(const std::vector<json>& records) {
    std::vector<TrajectoryRow> rows;
    Replayer rp;
    double best = 0;
    bool have_best = false;
    for (const auto& r : records) {
        rp.apply(r);
        const auto event = r.at("event").get<std::string>();
        if (event == "candidate_scored") {
            TrajectoryRow row;
            row.candidate_index = rows.size();
            row.candidate_id = r.at("candidate_id").get<std::string>();
            row.status = r.at("status").get<std::string>();
            row.score = r.at("score").get<double>();
            if (row.status == "valid" && (!have_best || row.score > best)) {
                best = row.score;
                have_best = true;
            }
            row.best_so_far = best;
            row.template_id = r.value("template_id", "");
            row.best_mutation_template = rp.templates().best(prompts::TemplateKind::mutation).id;
            rows.push_back(std::move(row));
        } else if (event == "template_evolved" && r.at("status") == "inserted" && !rows.empty() &&
                   r.at("parent") != std::string(prompts::kHandSeeded)) {
            rows.back().template_update = true;
            rows.back().best_mutation_template = rp.templates().best(prompts::TemplateKind::mutation).id;
        }
    }
    return rows;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
    out << "candidate_index,candidate_id,status,score,best_so_far,template_id,best_mutation_template,template_update\n";
    for (const auto& r : rows)
        out << r.candidate_index << ',' << r.candidate_id << ',' << r.status << ',' << fmt_double(r.score) << ','
            << fmt_double(r.best_so_far) << ',' << r.template_id << ',' << r.best_mutation_template << ','
            << (r.template_update ? 1 : 0) << '\n';
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
    std::vector<TrajectoryRow> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw LedgerError("malformed trajectory row: " + line);
        TrajectoryRow r;
        r.candidate_index = std::stoul(f[0]);
        r.candidate_id = f[1];
        r.status = f[2];
        std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.score);
        std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.best_so_far);
        r.template_id = f[5];
        r.best_mutation_template = f[6];
        r.template_update = f[7] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace promptfwa::ledger
