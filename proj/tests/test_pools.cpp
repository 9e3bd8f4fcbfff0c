#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "acceptance_checks.hpp"
#include "promptfwa/pools.hpp"

using namespace promptfwa;

namespace {

CandidateAlgorithm cand(const std::string& id, double score, std::string hash = "") {
    CandidateAlgorithm a;
    a.id = id;
    a.source = "# " + id;
    a.code_hash = hash.empty() ? code_hash(a.source) : hash;
    a.score = score;
    a.status = CandidateStatus::valid;
    return a;
}

// Ranks by an independent ordering: score descending, index ascending.
std::vector<double> law(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rank = 1;
        for (std::size_t j = 0; j < n; ++j)
            if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++rank;
        p[i] = static_cast<double>(n + 1 - rank) / (static_cast<double>(n) * static_cast<double>(n + 1) / 2.0);
    }
    return p;
}

}  // namespace

TEST_SUITE("pools") {
    TEST_CASE("rank probability examples") {
        CHECK(rank_probabilities(std::vector<double>{0.7}) == std::vector<double>{1.0});
        const auto p3 = rank_probabilities(std::vector<double>{0.2, 0.9, 0.5});
        CHECK(p3[1] == doctest::Approx(3.0 / 6));
        CHECK(p3[2] == doctest::Approx(2.0 / 6));
        CHECK(p3[0] == doctest::Approx(1.0 / 6));
        CHECK_THROWS_AS(rank_probabilities(std::vector<double>{}), std::invalid_argument);
    }

    TEST_CASE("equal scores rank the older entry first") {
        const auto p = rank_probabilities(std::vector<double>{0.5, 0.5, 0.5});
        CHECK(p[0] > p[1]);
        CHECK(p[1] > p[2]);
    }

    TEST_CASE("selection law at n=4 and over large pools") {
        const auto c = acceptance::selection_law();
        INFO(c.detail);
        CHECK(c.pass);
    }

    TEST_CASE("property: probabilities follow the rank law and shrink with rank") {
        Rng rng(1);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 1 + rng.below(40);
            std::vector<double> scores(n);
            for (auto& s : scores) s = static_cast<double>(rng.below(6)) / 5.0;  // many ties
            const auto p = rank_probabilities(scores);
            const auto want = law(scores);
            double sum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(p[i] == doctest::Approx(want[i]).epsilon(1e-12));
                sum += p[i];
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p[a] > p[b]; });
            for (std::size_t k = 1; k < n; ++k) CHECK(scores[idx[k - 1]] >= scores[idx[k]]);
        }
    }

    TEST_CASE("property: sample_by_rank draws distinct valid indices") {
        Rng rng(2);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 1 + rng.below(12);
            std::vector<double> scores(n);
            for (auto& s : scores) s = rng.uniform();
            const std::size_t k = rng.below(n + 1);
            const auto picks = sample_by_rank(scores, k, rng);
            CHECK(picks.size() == k);
            CHECK(std::set<std::size_t>(picks.begin(), picks.end()).size() == k);
            for (auto i : picks) CHECK(i < n);
        }
    }

    TEST_CASE("second draw follows the law restricted to the remaining entries") {
        const std::vector<double> scores{4, 3, 2, 1};
        Rng rng(3);
        std::map<std::size_t, double> second_given_first0;
        std::size_t hits = 0;
        for (int i = 0; i < 200000; ++i) {
            const auto d = sample_by_rank(scores, 2, rng);
            if (d[0] != 0) continue;
            ++hits;
            second_given_first0[d[1]] += 1;
        }
        // Remaining ranks 2, 3, 4 carry weights 3, 2, 1 out of 6.
        CHECK(second_given_first0[1] / static_cast<double>(hits) == doctest::Approx(0.5).epsilon(0.02));
        CHECK(second_given_first0[2] / static_cast<double>(hits) == doctest::Approx(1.0 / 3).epsilon(0.02));
        CHECK(second_given_first0[3] / static_cast<double>(hits) == doctest::Approx(1.0 / 6).epsilon(0.03));
    }

    TEST_CASE("parent selection examples") {
        CandidatePool pool;
        Rng rng(4);
        CHECK_THROWS_AS(pool.select_parents(1, rng), std::invalid_argument);
        pool.insert(cand("a", 0.5));
        CHECK(pool.select_parents(1, rng)[0]->id == "a");
        CHECK_THROWS_AS(pool.select_parents(2, rng), std::invalid_argument);
        pool.insert(cand("b", 0.7));
        std::set<std::string> orders;
        for (int i = 0; i < 200; ++i) {
            const auto two = pool.select_parents(2, rng);
            REQUIRE(two.size() == 2);
            CHECK(two[0]->id != two[1]->id);
            orders.insert(two[0]->id + two[1]->id);
        }
        CHECK(orders == std::set<std::string>{"ab", "ba"});
    }

    TEST_CASE("duplicate hashes leave the pool unchanged") {
        CandidatePool pool(3);
        pool.insert(cand("a", 0.5, "h1"));
        const auto before = pool;
        const auto r = pool.insert(cand("b", 0.9, "h1"));
        CHECK(r.duplicate);
        CHECK_FALSE(r.retained);
        CHECK(pool == before);
    }

    TEST_CASE("a new best at capacity evicts the worst") {
        CandidatePool pool(3);
        pool.insert(cand("a", 0.5));
        pool.insert(cand("b", 0.3));
        pool.insert(cand("c", 0.4));
        const auto r = pool.insert(cand("d", 0.9));
        CHECK(r.retained);
        CHECK(r.evicted == "b");
        CHECK(pool.best().id == "d");
        CHECK(pool.size() == 3);
    }

    TEST_CASE("the newest of equally bad members leaves first") {
        CandidatePool pool(2);
        pool.insert(cand("a", 0.8));
        pool.insert(cand("b", 0.2));
        const auto r = pool.insert(cand("c", 0.2));
        CHECK_FALSE(r.retained);
        CHECK(r.evicted == "c");
        CHECK(pool.best().id == "a");
        CHECK_THROWS_AS(CandidatePool{}.best(), std::logic_error);
    }

    TEST_CASE("property: random insert streams keep the top scores without duplicates") {
        Rng rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t cap = 1 + rng.below(8);
            CandidatePool pool(cap);
            std::map<std::string, double> inserted;  // hash -> score of first insert
            std::vector<std::pair<double, std::size_t>> order;  // (score, arrival) of distinct hashes
            const std::size_t steps = rng.below(60);
            for (std::size_t s = 0; s < steps; ++s) {
                const auto hash = "h" + std::to_string(rng.below(25));
                const double score = static_cast<double>(rng.below(8)) / 7.0;
                const auto r = pool.insert(cand("c" + std::to_string(s), score, hash));
                // A duplicate is a hash still in the pool; evicted hashes may come back.
                CHECK(r.duplicate == (inserted.count(hash) > 0));
                if (!r.duplicate) inserted[hash] = score;
                if (r.evicted) {
                    for (auto it = inserted.begin(); it != inserted.end(); ++it)
                        if (!pool.contains_hash(it->first)) {
                            inserted.erase(it);
                            break;
                        }
                }
                CHECK(pool.size() <= cap);
                CHECK(pool.size() == inserted.size());
                std::set<std::string> hashes;
                for (const auto& m : pool.members()) CHECK(hashes.insert(m.code_hash).second);
                const auto ranked = pool.ranked();
                for (std::size_t k = 1; k < ranked.size(); ++k) CHECK(ranked[k - 1]->score >= ranked[k]->score);
                double top = 0;
                for (const auto& [h, sc] : inserted) top = std::max(top, sc);
                CHECK(pool.best().score == top);
            }
        }
    }

    TEST_CASE("property: the best score never decreases and eviction targets the minimum") {
        Rng rng(6);
        for (int trial = 0; trial < 200; ++trial) {
            CandidatePool pool(1 + rng.below(5));
            double best = -1;
            for (int s = 0; s < 40; ++s) {
                std::vector<double> before;
                for (const auto& m : pool.members()) before.push_back(m.score);
                const double score = rng.uniform();
                const auto r = pool.insert(cand("c" + std::to_string(trial) + "-" + std::to_string(s), score));
                if (r.evicted) {
                    before.push_back(score);
                    double evicted_score = -1;
                    for (double x : before) {
                        bool present = false;
                        for (const auto& m : pool.members()) present = present || m.score == x;
                        if (!present) evicted_score = x;
                    }
                    CHECK(evicted_score == *std::min_element(before.begin(), before.end()));
                }
                CHECK(pool.best().score >= best);
                best = pool.best().score;
            }
        }
    }
}
