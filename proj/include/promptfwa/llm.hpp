#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace promptfwa::llm {

class LlmError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class TranscriptExhausted : public LlmError {
    using LlmError::LlmError;
};
class CredentialsError : public LlmError {
    using LlmError::LlmError;
};

struct LlmRequest {
    std::string prompt;
    double temperature = 1.0;
    std::size_t max_tokens = 4096;
    std::string model;
    std::string tag;  // correlates the call with ledger records
};

enum class Source { scripted, live };

struct LlmResponse {
    std::string text;
    double latency_s = 0;
    std::optional<long> prompt_tokens;
    std::optional<long> completion_tokens;
    Source source = Source::scripted;
};

class LlmClient {
  public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

struct TranscriptEntry {
    std::string tag;  // empty: matched by position
    std::string prompt;
    std::string response;
    std::string timestamp;
};

/// One JSON object per line: {tag, prompt, response, timestamp}.
std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptEntry>& entries);

/// Plays back a transcript. A request takes the first unused entry with the
/// same tag, otherwise the first unused untagged entry.
class ScriptedLlm : public LlmClient {
  public:
    explicit ScriptedLlm(std::vector<TranscriptEntry> entries);
    static ScriptedLlm from_responses(const std::vector<std::string>& responses);

    LlmResponse complete(const LlmRequest& request) override;
    std::size_t consumed() const;

  private:
    mutable std::mutex mu_;
    std::vector<TranscriptEntry> entries_;
    std::vector<char> used_;
    std::size_t consumed_ = 0;
};

/// Forwards to another client and appends every exchange to a transcript file.
class RecordingLlm : public LlmClient {
  public:
    RecordingLlm(LlmClient& inner, const std::filesystem::path& path);

    LlmResponse complete(const LlmRequest& request) override;
    std::vector<TranscriptEntry> entries() const;

  private:
    LlmClient& inner_;
    mutable std::mutex mu_;
    std::ofstream out_;
    std::vector<TranscriptEntry> entries_;
};

struct HttpLlmConfig {
    std::string endpoint;                              // full URL of the chat-completions route
    std::string model;
    std::string api_key_env = "PROMPTFWA_API_KEY";     // empty: send no credentials
    int max_retries = 5;
    std::chrono::milliseconds base_backoff{500};
    std::chrono::seconds timeout{120};
};

/// Chat-completions client over HTTP(S) with exponential backoff on 429 and 5xx.
class HttpLlm : public LlmClient {
  public:
    /// Reads the key from the environment; throws CredentialsError when it is required and absent.
    explicit HttpLlm(HttpLlmConfig config);

    LlmResponse complete(const LlmRequest& request) override;

    /// One line per retried attempt, e.g. "attempt 1: HTTP 429, retrying in 500 ms".
    std::vector<std::string> retry_log() const;

    /// Replaces the sleep between retries (tests use a no-op).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

  private:
    HttpLlmConfig config_;
    std::string api_key_;
    std::string base_;  // scheme://host:port
    std::string path_;
    mutable std::mutex mu_;
    std::vector<std::string> retry_log_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace promptfwa::llm
