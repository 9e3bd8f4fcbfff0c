#include <cstdlib>
#include <httplib.h>
#include <json.hpp>
#include <regex>
#include <thread>

#include "promptfwa/llm.hpp"

namespace promptfwa::llm {

using nlohmann::json;

HttpLlm::HttpLlm(HttpLlmConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) throw LlmError("bad endpoint URL: " + config_.endpoint);
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) throw CredentialsError("environment variable " + config_.api_key_env + " is not set");
        api_key_ = key;
    }
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void HttpLlm::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

std::vector<std::string> HttpLlm::retry_log() const {
    std::lock_guard lock(mu_);
    return retry_log_;
}

LlmResponse HttpLlm::complete(const LlmRequest& request) {
    if (request.prompt.empty()) throw LlmError("empty prompt");
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    json body{{"model", request.model.empty() ? config_.model : request.model},
              {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    const std::string payload = body.dump();

    for (int attempt = 0;; ++attempt) {
        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(path_, headers, payload, "application/json");
        const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::string failure;
        if (!res) {
            failure = "transport error " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            failure = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw LlmError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
        } else {
            try {
                const json j = json::parse(res->body);
                LlmResponse out;
                out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
                out.latency_s = latency;
                out.source = Source::live;
                if (j.contains("usage")) {
                    const auto& u = j["usage"];
                    if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<long>();
                    if (u.contains("completion_tokens")) out.completion_tokens = u["completion_tokens"].get<long>();
                }
                return out;
            } catch (const json::exception& e) {
                throw LlmError(std::string("malformed completion response: ") + e.what());
            }
        }

        if (attempt >= config_.max_retries) throw LlmError(failure + " after " + std::to_string(attempt + 1) + " attempts");
        const auto delay = config_.base_backoff * (1LL << std::min(attempt, 20));
        {
            std::lock_guard lock(mu_);
            retry_log_.push_back("attempt " + std::to_string(attempt + 1) + ": " + failure + ", retrying in " +
                                 std::to_string(delay.count()) + " ms");
        }
        sleeper_(delay);
    }
}

}  // namespace promptfwa::llm
