#include "promptfwa/llm.hpp"

#include <ctime>
#include <json.hpp>

namespace promptfwa::llm {

using nlohmann::json;

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json entry_to_json(const TranscriptEntry& e) {
    return {{"tag", e.tag}, {"prompt", e.prompt}, {"response", e.response}, {"timestamp", e.timestamp}};
}

}  // namespace

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LlmError("cannot open transcript " + path.string());
    std::vector<TranscriptEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            out.push_back({j.value("tag", ""), j.value("prompt", ""), j.at("response").get<std::string>(),
                           j.value("timestamp", "")});
        } catch (const json::exception& e) {
            throw LlmError("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw LlmError("cannot write transcript " + path.string());
    for (const auto& e : entries) out << entry_to_json(e).dump() << '\n';
    if (!out.flush()) throw LlmError("write failure on transcript " + path.string());
}

ScriptedLlm::ScriptedLlm(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)), used_(entries_.size(), 0) {}

ScriptedLlm ScriptedLlm::from_responses(const std::vector<std::string>& responses) {
    std::vector<TranscriptEntry> entries;
    for (const auto& r : responses) entries.push_back({"", "", r, ""});
    return ScriptedLlm(std::move(entries));
}

LlmResponse ScriptedLlm::complete(const LlmRequest& request) {
    std::lock_guard lock(mu_);
    std::size_t pick = entries_.size();
    if (!request.tag.empty())
        for (std::size_t i = 0; i < entries_.size() && pick == entries_.size(); ++i)
            if (!used_[i] && entries_[i].tag == request.tag) pick = i;
    for (std::size_t i = 0; i < entries_.size() && pick == entries_.size(); ++i)
        if (!used_[i] && entries_[i].tag.empty()) pick = i;
    if (pick == entries_.size())
        throw TranscriptExhausted("transcript exhausted" + (request.tag.empty() ? "" : " at tag " + request.tag));
    used_[pick] = 1;
    ++consumed_;
    LlmResponse r;
    r.text = entries_[pick].response;
    r.source = Source::scripted;
    return r;
}

std::size_t ScriptedLlm::consumed() const {
    std::lock_guard lock(mu_);
    return consumed_;
}

RecordingLlm::RecordingLlm(LlmClient& inner, const std::filesystem::path& path) : inner_(inner), out_(path, std::ios::trunc) {
    if (!out_) throw LlmError("cannot write transcript " + path.string());
    out_.flush();
}

LlmResponse RecordingLlm::complete(const LlmRequest& request) {
    auto response = inner_.complete(request);
    std::lock_guard lock(mu_);
    TranscriptEntry e{request.tag, request.prompt, response.text, utc_now()};
    out_ << entry_to_json(e).dump() << '\n';
    if (!out_.flush()) throw LlmError("transcript write failure");
    entries_.push_back(std::move(e));
    return response;
}

std::vector<TranscriptEntry> RecordingLlm::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

}  // namespace promptfwa::llm
