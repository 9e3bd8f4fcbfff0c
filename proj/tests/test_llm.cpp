#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "support.hpp"
#include "promptfwa/llm.hpp"

using namespace promptfwa::llm;
using nlohmann::json;

namespace {

// Local chat-completions stand-in; `handler` decides each reply.
class StubServer {
  public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion(const std::string& text) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 7}}}}
        .dump();
}

HttpLlmConfig config_for(const StubServer& s) {
    HttpLlmConfig c;
    c.endpoint = s.endpoint();
    c.model = "stub-model";
    c.api_key_env = "PROMPTFWA_TEST_KEY";
    c.max_retries = 3;
    c.base_backoff = std::chrono::milliseconds(100);
    c.timeout = std::chrono::seconds(5);
    return c;
}

struct KeyGuard {
    explicit KeyGuard(const char* value) {
        if (value) setenv("PROMPTFWA_TEST_KEY", value, 1);
        else unsetenv("PROMPTFWA_TEST_KEY");
    }
    ~KeyGuard() { unsetenv("PROMPTFWA_TEST_KEY"); }
};

LlmRequest req(std::string prompt, std::string tag = "") {
    LlmRequest r;
    r.prompt = std::move(prompt);
    r.tag = std::move(tag);
    return r;
}

}  // namespace

TEST_SUITE("llm") {
    TEST_CASE("a one-entry transcript answers once, then runs dry") {
        auto llm = ScriptedLlm::from_responses({"<code>A</code>"});
        CHECK(llm.complete(req("p")).text == "<code>A</code>");
        CHECK_THROWS_AS(llm.complete(req("p")), TranscriptExhausted);
        CHECK(llm.consumed() == 1);
    }

    TEST_CASE("tagged entries are matched by tag before position") {
        ScriptedLlm llm({{"", "", "untagged-1", ""}, {"t2", "", "for-t2", ""}, {"t1", "", "for-t1", ""}});
        CHECK(llm.complete(req("p", "t1")).text == "for-t1");
        CHECK(llm.complete(req("p", "other")).text == "untagged-1");
        CHECK(llm.complete(req("p", "t2")).text == "for-t2");
        CHECK_THROWS_AS(llm.complete(req("p", "t1")), TranscriptExhausted);
    }

    TEST_CASE("identical scripts replay identically") {
        const std::vector<std::string> script{"a", "b", "c"};
        auto x = ScriptedLlm::from_responses(script);
        auto y = ScriptedLlm::from_responses(script);
        for (int i = 0; i < 3; ++i) CHECK(x.complete(req("p")).text == y.complete(req("p")).text);
    }

    TEST_CASE("transcripts round-trip through their file format") {
        const auto dir = support::fresh_dir("llm-transcript");
        const std::vector<TranscriptEntry> entries{{"t", "prompt\nwith \"quotes\"", "resp", "2024-01-01T00:00:00Z"},
                                                   {"", "", "second", ""}};
        save_transcript(dir / "t.jsonl", entries);
        const auto back = load_transcript(dir / "t.jsonl");
        REQUIRE(back.size() == 2);
        CHECK(back[0].prompt == entries[0].prompt);
        CHECK(back[0].tag == "t");
        CHECK(back[1].response == "second");
        std::ofstream(dir / "bad.jsonl") << "{\"tag\":\"x\"}\n";
        CHECK_THROWS_AS(load_transcript(dir / "bad.jsonl"), LlmError);
        CHECK_THROWS_AS(load_transcript(dir / "missing.jsonl"), LlmError);
    }

    TEST_CASE("recording keeps one entry per call and replays as a script") {
        const auto dir = support::fresh_dir("llm-record");
        std::vector<std::string> replies;
        for (int i = 0; i < 10; ++i) replies.push_back("reply " + std::to_string(i));
        auto inner = ScriptedLlm::from_responses(replies);
        {
            RecordingLlm rec(inner, dir / "rec.jsonl");
            for (int i = 0; i < 10; ++i) rec.complete(req("prompt " + std::to_string(i), "tag-" + std::to_string(i)));
            CHECK(rec.entries().size() == 10);
        }
        const auto t = load_transcript(dir / "rec.jsonl");
        REQUIRE(t.size() == 10);
        CHECK(t[3].prompt == "prompt 3");
        CHECK(t[3].tag == "tag-3");
        CHECK_FALSE(t[3].timestamp.empty());
        ScriptedLlm replay(t);
        for (int i = 9; i >= 0; --i) CHECK(replay.complete(req("x", "tag-" + std::to_string(i))).text == replies[i]);
    }

    TEST_CASE("an empty recording session leaves an empty, loadable transcript") {
        const auto dir = support::fresh_dir("llm-empty");
        auto inner = ScriptedLlm::from_responses({});
        { RecordingLlm rec(inner, dir / "empty.jsonl"); }
        CHECK(std::filesystem::exists(dir / "empty.jsonl"));
        CHECK(load_transcript(dir / "empty.jsonl").empty());
    }

    TEST_CASE("HTTP client retries 429 twice, then succeeds and logs the backoff") {
        std::atomic<int> calls{0};
        std::string seen_auth, seen_body;
        StubServer server([&](const httplib::Request& r, httplib::Response& res) {
            if (++calls <= 2) {
                res.status = 429;
                res.set_content("slow down", "text/plain");
                return;
            }
            seen_auth = r.get_header_value("Authorization");
            seen_body = r.body;
            res.set_content(completion("<code>ok</code>"), "application/json");
        });
        KeyGuard key("sk-test-123");
        HttpLlm llm(config_for(server));
        std::vector<long> sleeps;
        llm.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
        const std::string prompt = "exact prompt\n{with braces} and unicode \xc3\xa9";
        auto r = req(prompt);
        r.temperature = 0.7;
        const auto out = llm.complete(r);
        CHECK(out.text == "<code>ok</code>");
        CHECK(out.source == Source::live);
        CHECK(out.prompt_tokens == 11);
        CHECK(out.completion_tokens == 7);
        CHECK(calls == 3);
        CHECK(sleeps == std::vector<long>{100, 200});
        REQUIRE(llm.retry_log().size() == 2);
        CHECK(llm.retry_log()[0] == "attempt 1: HTTP 429, retrying in 100 ms");
        CHECK(seen_auth == "Bearer sk-test-123");
        const auto body = json::parse(seen_body);
        CHECK(body["messages"][0]["content"] == prompt);
        CHECK(body["model"] == "stub-model");
        CHECK(body["temperature"] == 0.7);
    }

    TEST_CASE("persistent server errors surface after the retry limit") {
        std::atomic<int> calls{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 503;
        });
        KeyGuard key("k");
        HttpLlm llm(config_for(server));
        llm.set_sleeper([](std::chrono::milliseconds) {});
        CHECK_THROWS_AS(llm.complete(req("p")), LlmError);
        CHECK(calls == 4);
    }

    TEST_CASE("client errors fail at once") {
        std::atomic<int> calls{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 400;
            res.set_content("bad request", "text/plain");
        });
        KeyGuard key("k");
        HttpLlm llm(config_for(server));
        try {
            llm.complete(req("p"));
            FAIL("no error");
        } catch (const LlmError& e) {
            CHECK(std::string(e.what()).find("400") != std::string::npos);
        }
        CHECK(calls == 1);
    }

    TEST_CASE("malformed completion bodies are errors") {
        StubServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"choices\": []}", "application/json");
        });
        KeyGuard key("k");
        HttpLlm llm(config_for(server));
        CHECK_THROWS_AS(llm.complete(req("p")), LlmError);
        CHECK_THROWS_AS(llm.complete(req("")), LlmError);
    }

    TEST_CASE("credentials come only from the environment") {
        HttpLlmConfig c;
        c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
        c.api_key_env = "PROMPTFWA_TEST_KEY";
        {
            KeyGuard none(nullptr);
            CHECK_THROWS_AS(HttpLlm{c}, CredentialsError);
        }
        {
            KeyGuard empty("");
            CHECK_THROWS_AS(HttpLlm{c}, CredentialsError);
        }
        c.api_key_env.clear();
        CHECK_NOTHROW(HttpLlm{c});
        c.endpoint = "ftp://nowhere";
        CHECK_THROWS_AS(HttpLlm{c}, LlmError);
    }

    TEST_CASE("an unreachable endpoint is a hard failure after retries") {
        HttpLlmConfig c;
        c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
        c.api_key_env.clear();
        c.max_retries = 2;
        c.timeout = std::chrono::seconds(2);
        HttpLlm llm(c);
        int sleeps = 0;
        llm.set_sleeper([&](std::chrono::milliseconds) { ++sleeps; });
        CHECK_THROWS_AS(llm.complete(req("p")), LlmError);
        CHECK(sleeps == 2);
    }
}
