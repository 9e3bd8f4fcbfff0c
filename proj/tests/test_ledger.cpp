#include <doctest.h>

#include <sstream>

#include "acceptance_checks.hpp"
#include "promptfwa/ledger.hpp"

using namespace promptfwa;
using namespace promptfwa::ledger;

namespace {

const acceptance::ScriptedRun& shared_run() {
    static const auto run = acceptance::scripted_run(support::fresh_dir("ledger-shared-run"));
    return run;
}

std::string without_last_lines(const std::string& text, std::size_t k) {
    std::string s = text;
    for (std::size_t i = 0; i < k; ++i) {
        s.pop_back();  // trailing newline
        s.erase(s.rfind('\n') + 1);
    }
    return s;
}

}  // namespace

TEST_SUITE("ledger") {
    TEST_CASE("sequence numbers must follow on") {
        const auto dir = support::fresh_dir("ledger-seq");
        LedgerWriter w(dir / "l.jsonl");
        CHECK_NOTHROW(w.append({{"seq", 1}, {"event", "run_summary"}, {"phase", "start"}}));
        CHECK_THROWS_AS(w.append({{"seq", 3}, {"event", "run_summary"}}), LedgerError);
        CHECK_THROWS_AS(w.append({{"seq", 1}, {"event", "run_summary"}}), LedgerError);
        CHECK_THROWS_AS(w.append({{"seq", 2}, {"event", "something_else"}}), LedgerError);
        CHECK_THROWS_AS(w.append({{"event", "run_summary"}}), LedgerError);
        CHECK(w.append_event("run_summary", {{"phase", "end"}}) == 2);
        w.close();
        CHECK_THROWS_AS(w.append_event("run_summary", {}), LedgerError);

        const auto loaded = read_ledger(dir / "l.jsonl");
        REQUIRE(loaded.records.size() == 2);
        CHECK_FALSE(loaded.truncated);
        CHECK(loaded.records[0]["timestamp"] == 1);
        const auto idx = json::parse(support::slurp(index_path(dir / "l.jsonl")));
        CHECK(idx["records"] == 2);
        CHECK(idx["complete"] == true);
    }

    TEST_CASE("wall-clock stamps are UTC") {
        const auto dir = support::fresh_dir("ledger-wall");
        LedgerWriter w(dir / "l.jsonl", ClockMode::wall);
        w.append_event("run_summary", {{"phase", "start"}});
        const auto ts = read_ledger(dir / "l.jsonl").records.at(0).at("timestamp").get<std::string>();
        CHECK(ts.size() >= 20);
        CHECK(ts.back() == 'Z');
        CHECK(clock_mode_from_string("wall") == ClockMode::wall);
        CHECK_THROWS(clock_mode_from_string("sundial"));
    }

    TEST_CASE("an empty ledger replays to empty pools") {
        const auto res = replay(parse_ledger(""));
        CHECK(res.records_applied == 0);
        CHECK(res.pool.empty());
        CHECK(res.templates.all().empty());
        CHECK_FALSE(res.truncated);
    }

    TEST_CASE("one recorded mutation gain gives that estimate") {
        const auto c = acceptance::hand_gains();
        INFO(c.detail);
        CHECK(c.pass);
    }

    TEST_CASE("a scripted run replays to its live state") {
        const auto c = acceptance::attribution_replay(shared_run());
        INFO(c.detail);
        CHECK(c.pass);
    }

    TEST_CASE("damaged ledgers stop at the damage with a marker") {
        const auto& text = shared_run().ledger;
        const auto full = parse_ledger(text);
        REQUIRE_FALSE(full.truncated);

        auto cut = parse_ledger(text.substr(0, text.size() - 10));
        CHECK(cut.truncated);
        CHECK(cut.truncation.find("unterminated record") != std::string::npos);
        CHECK(cut.records.size() == full.records.size() - 1);

        auto garbled = text;
        const auto third = garbled.find('\n', garbled.find('\n', garbled.find('\n') + 1) + 1);
        garbled.insert(third + 1, "{not json\n");
        cut = parse_ledger(garbled);
        CHECK(cut.truncation == "unparseable record at line 4");
        CHECK(cut.records.size() == 3);

        auto json_lines = full.records;
        json_lines.erase(json_lines.begin() + 5);
        std::string gap;
        for (const auto& r : json_lines) gap += r.dump() + "\n";
        cut = parse_ledger(gap);
        CHECK(cut.truncation == "sequence break at line 6");

        const auto res = replay(parse_ledger(without_last_lines(text, 30)));
        CHECK(res.truncated);
        CHECK(res.truncation == "ledger ends without a closing run_summary");
        CHECK(res.records_applied == full.records.size() - 30);
    }

    TEST_CASE("the index exposes a ledger that lost its tail") {
        const auto& run = shared_run();
        const auto dir = support::fresh_dir("ledger-tail");
        std::filesystem::copy_file(index_path(run.result.ledger_path), index_path(dir / "ledger.jsonl"));
        std::ofstream(dir / "ledger.jsonl") << without_last_lines(run.ledger, 1);
        const auto loaded = read_ledger(dir / "ledger.jsonl");
        CHECK(loaded.truncated);
        CHECK(loaded.truncation.find("index lists") != std::string::npos);
        CHECK(replay(loaded).truncated);
    }

    TEST_CASE("tampered gains are caught during replay") {
        auto records = parse_ledger(shared_run().ledger).records;
        for (auto& r : records)
            if (r["event"] == "candidate_scored" && r["candidate_id"] != "seed") {
                r["gain"] = r["gain"].get<double>() + 1e-3;
                break;
            }
        LoadedLedger bad{records, false, ""};
        try {
            replay(bad);
            FAIL("no divergence reported");
        } catch (const LedgerError& e) {
            CHECK(std::string(e.what()).find("replay diverged at seq") != std::string::npos);
        }
    }

    TEST_CASE("trajectory: monotone best-so-far, one row per scored candidate, flags at evolutions") {
        const auto& run = shared_run();
        const auto records = parse_ledger(run.ledger).records;
        const auto rows = report_trajectory(records);
        std::size_t scored = 0, inserted = 0;
        for (const auto& r : records) {
            scored += r["event"] == "candidate_scored";
            inserted += r["event"] == "template_evolved" && r["status"] == "inserted" && r["parent"] != "hand-seeded";
        }
        REQUIRE(rows.size() == scored);
        std::size_t flags = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].candidate_index == i);
            if (i) CHECK(rows[i].best_so_far >= rows[i - 1].best_so_far);
            flags += rows[i].template_update;
            CHECK_FALSE(rows[i].best_mutation_template.empty());
        }
        CHECK(flags == inserted);
        CHECK(inserted > 0);
        CHECK(rows.front().candidate_id == "seed");
        CHECK(rows.back().best_so_far == run.result.best->score);

        // Each flag sits on the scored row right before its template_evolved record.
        std::size_t row = 0;
        for (std::size_t k = 0; k < records.size(); ++k) {
            if (records[k]["event"] == "candidate_scored") ++row;
            if (records[k]["event"] == "template_evolved" && records[k]["status"] == "inserted" &&
                records[k]["parent"] != "hand-seeded")
                CHECK(rows[row - 1].template_update);
        }
    }

    TEST_CASE("trajectory CSV round-trips and recomputed best-so-far matches") {
        const auto rows = report_trajectory(parse_ledger(shared_run().ledger).records);
        std::stringstream csv;
        write_trajectory_csv(csv, rows);
        CHECK(csv.str().rfind("candidate_index,candidate_id,status,score,best_so_far,template_id,best_mutation_template,"
                              "template_update\n",
                              0) == 0);
        const auto back = read_trajectory_csv(csv);
        REQUIRE(back.size() == rows.size());
        double best = 0;
        bool any = false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].candidate_id == rows[i].candidate_id);
            CHECK(back[i].score == rows[i].score);
            CHECK(back[i].template_update == rows[i].template_update);
            if (back[i].status == "valid" && (!any || back[i].score > best)) {
                best = back[i].score;
                any = true;
            }
            CHECK(back[i].best_so_far == best);
        }
    }

    TEST_CASE("instance scores round-trip") {
        const InstanceScore s{"toy", 0.875, CandidateStatus::valid, 24.0, ""};
        CHECK(instance_score_from_json(to_json(s)) == s);
        const InstanceScore f{"toy", 0, CandidateStatus::timed_out, 0, "killed"};
        CHECK(instance_score_from_json(to_json(f)) == f);
    }
}
