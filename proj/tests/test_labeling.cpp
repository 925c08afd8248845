#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/corpus_gen.hpp"
#include "topoforge/labeling.hpp"

using namespace topoforge;

TEST_CASE("match_answer decision table") {
    CHECK(match_answer(ExtractedAnswer::choice('b'), "B", QuestionType::MultipleChoice) == 1);
    CHECK(match_answer(ExtractedAnswer::choice('A'), "B", QuestionType::MultipleChoice) == 0);
    CHECK(match_answer(std::nullopt, "C", QuestionType::MultipleChoice) == 0);
    CHECK(match_answer(ExtractedAnswer::number(0.3333333), "0.333333", QuestionType::FreeForm) == 1);
    CHECK(match_answer(ExtractedAnswer::number(0.34), "0.333333", QuestionType::FreeForm) == 0);
    CHECK(match_answer(ExtractedAnswer::number(42.0), "42", QuestionType::FreeForm) == 1);

    SUBCASE("zero ground truth uses the absolute floor") {
        CHECK(match_answer(ExtractedAnswer::number(5e-10), "0", QuestionType::FreeForm) == 1);
        CHECK(match_answer(ExtractedAnswer::number(5e-9), "0", QuestionType::FreeForm) == 0);
    }
    SUBCASE("free-form text matches after normalization") {
        CHECK(match_answer(ExtractedAnswer::text("the blue whale"), "The Blue Whale.",
                           QuestionType::FreeForm) == 1);
        CHECK(match_answer(ExtractedAnswer::text("a whale"), "The Blue Whale.",
                           QuestionType::FreeForm) == 0);
    }
    SUBCASE("free-form letter ground truth accepts a choice answer") {
        CHECK(match_answer(ExtractedAnswer::choice('B'), "b", QuestionType::FreeForm) == 1);
    }
    SUBCASE("a number never matches a multiple-choice truth") {
        CHECK(match_answer(ExtractedAnswer::number(2.0), "B", QuestionType::MultipleChoice) == 0);
    }
    SUBCASE("malformed multiple-choice ground truth") {
        CHECK_THROWS_AS(match_answer(std::nullopt, "AB", QuestionType::MultipleChoice),
                        MalformedGroundTruth);
        CHECK_THROWS_AS(match_answer(std::nullopt, "3", QuestionType::MultipleChoice),
                        MalformedGroundTruth);
        CHECK_THROWS_AS(match_answer(std::nullopt, "F", QuestionType::MultipleChoice),
                        MalformedGroundTruth);
    }
}

TEST_CASE("outcome_label extracts and matches") {
    Question q;
    q.id = "q1";
    q.qtype = QuestionType::MultipleChoice;
    q.ground_truth = "C";

    GenerationRecord r;
    r.question_id = "q1";
    r.raw_text = "step one\nANSWER: C";
    CHECK(outcome_label(r, q) == 1);
    r.raw_text = "step one\nANSWER: A";
    CHECK(outcome_label(r, q) == 0);

    SUBCASE("record and question must agree") {
        r.question_id = "q2";
        CHECK_THROWS_AS(outcome_label(r, q), QuestionMismatch);
    }
    SUBCASE("100 synthetic records with known truths label exactly") {
        std::mt19937 rng(42);
        const char letters[] = {'A', 'B', 'C', 'D', 'E'};
        for (int i = 0; i < 100; ++i) {
            Question question;
            question.id = "s" + std::to_string(i);
            bool mc = rng() % 2 == 0;
            question.qtype = mc ? QuestionType::MultipleChoice : QuestionType::FreeForm;
            question.ground_truth = mc ? std::string(1, letters[rng() % 5])
                                       : std::to_string(static_cast<int>(rng() % 1000));
            bool correct = rng() % 2 == 0;
            std::string reply = question.ground_truth;
            if (!correct) {
                if (mc)
                    reply = std::string(1, reply[0] == 'A' ? 'B' : 'A');
                else
                    reply = std::to_string(std::stoi(reply) + 1);
            }
            GenerationRecord record;
            record.question_id = question.id;
            record.raw_text = "some reasoning\nANSWER: " + reply + "\n";
            CHECK(outcome_label(record, question) == (correct ? 1 : 0));
        }
    }
}

TEST_CASE("topology_label counts correct over total") {
    auto make = [](std::vector<int> outcomes) {
        std::vector<GenerationRecord> rs;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            GenerationRecord r;
            r.question_id = "q";
            r.sample_index = static_cast<int>(i);
            r.outcome = outcomes[i];
            rs.push_back(r);
        }
        return rs;
    };
    auto s = topology_label(make({1, 0, 1, 0, 1}));
    CHECK(s.n_correct == 3);
    CHECK(s.n_total == 5);
    CHECK(s.value == 0.6);
    CHECK(topology_label(make(std::vector<int>(10, 1))).value == 1.0);
    CHECK_THROWS_AS(topology_label({}), EmptyResponseSet);

    SUBCASE("500 random multisets agree with a counting oracle") {
        std::mt19937 rng(7);
        for (int i = 0; i < 500; ++i) {
            std::vector<int> outcomes;
            int n = 1 + static_cast<int>(rng() % 12);
            for (int k = 0; k < n; ++k) outcomes.push_back(static_cast<int>(rng() % 2));
            auto score = topology_label(make(outcomes));
            long expect = std::count(outcomes.begin(), outcomes.end(), 1);
            REQUIRE(score.n_correct == expect);
            REQUIRE(score.n_total == n);
            REQUIRE(score.value == static_cast<double>(expect) / n);
        }
    }
}

namespace {

// Independently written reference quantile (same definition, separate code).
double oracle_quantile(std::vector<double> v, double p) {
    std::stable_sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double h = p * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] * (1.0 - (h - std::floor(h))) + v[hi] * (h - std::floor(h));
}

}  // namespace

TEST_CASE("quantile interpolates order statistics") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({7}, 0.0) == 7);
    CHECK(quantile({7}, 0.37) == 7);
    CHECK(quantile({7}, 1.0) == 7);
    CHECK(quantile({3, 1, 2}, 0.0) == 1);
    CHECK(quantile({3, 1, 2}, 1.0) == 3);
    CHECK_THROWS_AS(quantile({}, 0.5), EmptyInput);

    SUBCASE("random lists match the reference within 1e-12") {
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> val(-50.0, 50.0);
        std::uniform_real_distribution<double> pd(0.0, 1.0);
        for (int i = 0; i < 300; ++i) {
            std::vector<double> v;
            int n = 1 + static_cast<int>(rng() % 20);
            for (int k = 0; k < n; ++k) v.push_back(val(rng));
            double p = pd(rng);
            REQUIRE(quantile(v, p) == doctest::Approx(oracle_quantile(v, p)).epsilon(1e-12));
        }
    }
}

namespace {

// Brute-force difficulty rule, recomputed from scratch.
std::map<std::string, Difficulty> oracle_segment(const std::vector<QuestionLabels>& labels,
                                                 double q_hi, double q_lo) {
    std::array<double, 3> hi{}, lo{};
    for (int t = 0; t < 3; ++t) {
        std::vector<double> fs;
        for (const auto& l : labels) fs.push_back(l.scores[t].value);
        hi[t] = oracle_quantile(fs, q_hi);
        lo[t] = oracle_quantile(fs, q_lo);
    }
    std::map<std::string, Difficulty> out;
    for (const auto& l : labels) {
        int above = 0, below = 0;
        for (int t = 0; t < 3; ++t) {
            if (l.scores[t].value > hi[t]) ++above;
            if (l.scores[t].value < lo[t]) ++below;
        }
        out[l.question_id] =
            above == 3 ? Difficulty::Easy : below == 3 ? Difficulty::Hard : Difficulty::Medium;
    }
    return out;
}

}  // namespace

TEST_CASE("segment_difficulty applies strict per-topology thresholds") {
    SUBCASE("extremal corpus") {
        std::vector<QuestionLabels> labels;
        for (int i = 0; i < 10; ++i) {
            QuestionLabels l;
            l.question_id = testsupport::padded_id("q", i);
            double f = i == 0 ? 1.0 : 0.0;
            for (int t = 0; t < 3; ++t)
                l.scores[t] = f == 1.0 ? TopologyScore::of(4, 4) : TopologyScore::of(0, 4);
            labels.push_back(l);
        }
        auto seg = segment_difficulty(labels);
        CHECK(seg.difficulty.at("q000") == Difficulty::Easy);
        for (int i = 1; i < 10; ++i) {
            auto d = seg.difficulty.at(testsupport::padded_id("q", i));
            CHECK(d != Difficulty::Easy);
        }
    }
    SUBCASE("identical scores land everything in Medium") {
        std::vector<QuestionLabels> labels;
        for (int i = 0; i < 5; ++i) {
            QuestionLabels l;
            l.question_id = testsupport::padded_id("q", i);
            for (int t = 0; t < 3; ++t) l.scores[t] = TopologyScore::of(1, 2);
            labels.push_back(l);
        }
        auto seg = segment_difficulty(labels);
        for (const auto& [id, d] : seg.difficulty) CHECK(d == Difficulty::Medium);
    }
    SUBCASE("200 random corpora equal the brute-force rule and partition the corpus") {
        std::mt19937 rng(2024);
        for (int iter = 0; iter < 200; ++iter) {
            int n = 2 + static_cast<int>(rng() % 29);
            auto labels = testsupport::random_label_corpus(rng, n);
            auto seg = segment_difficulty(labels);
            auto expect = oracle_segment(labels, 0.85, 0.15);
            REQUIRE(seg.difficulty == expect);
            REQUIRE(seg.difficulty.size() == labels.size());  // total partition
            for (const auto& l : labels) {
                auto d = seg.difficulty.at(l.question_id);
                // tier assignments are consistent with the stored thresholds
                if (d == Difficulty::Easy)
                    for (int t = 0; t < 3; ++t)
                        REQUIRE(l.scores[t].value > seg.thresholds.hi[t]);
                if (d == Difficulty::Hard)
                    for (int t = 0; t < 3; ++t)
                        REQUIRE(l.scores[t].value < seg.thresholds.lo[t]);
            }
        }
    }
    SUBCASE("relabeling a correct response never promotes that question to Easy") {
        std::mt19937 rng(31337);
        for (int iter = 0; iter < 100; ++iter) {
            int n = 2 + static_cast<int>(rng() % 20);
            auto labels = testsupport::random_label_corpus(rng, n);
            auto before = segment_difficulty(labels);

            // flip one correct response to incorrect
            int qi = static_cast<int>(rng() % n);
            int ti = static_cast<int>(rng() % 3);
            auto& s = labels[qi].scores[ti];
            if (s.n_correct == 0) continue;
            s = TopologyScore::of(s.n_correct - 1, s.n_total);

            auto after = segment_difficulty(labels);
            const auto& id = labels[qi].question_id;
            if (before.difficulty.at(id) != Difficulty::Easy)
                REQUIRE(after.difficulty.at(id) != Difficulty::Easy);
        }
    }
    SUBCASE("threshold ordering is validated") {
        std::mt19937 rng(1);
        auto labels = testsupport::random_label_corpus(rng, 4);
        CHECK_THROWS_AS(segment_difficulty(labels, 0.15, 0.85), ValidationError);
        CHECK_THROWS_AS(segment_difficulty({}, 0.85, 0.15), EmptyInput);
    }
}

TEST_CASE("F stays in [0,1] and grows with n_correct") {
    for (long total = 1; total <= 8; ++total) {
        double prev = -1.0;
        for (long correct = 0; correct <= total; ++correct) {
            auto s = TopologyScore::of(correct, total);
            CHECK(s.value >= 0.0);
            CHECK(s.value <= 1.0);
            CHECK(s.value > prev);
            prev = s.value;
        }
    }
}

TEST_CASE("build_question_labels groups by declared-else-classified topology") {
    std::mt19937 rng(5);
    auto corpus = testsupport::random_record_corpus(rng, 12);
    auto built = build_question_labels(corpus.questions, corpus.records);
    REQUIRE(built.labels.size() == corpus.questions.size());  // generator covers all topologies

    // independent recount for one random question
    const auto& probe = built.labels[3];
    for (auto t : kAllTopologies) {
        long correct = 0, total = 0;
        for (const auto& r : corpus.records) {
            if (r.question_id != probe.question_id) continue;
            if (r.label_topology() != t) continue;
            ++total;
            correct += *r.outcome;
        }
        CHECK(probe.score(t).n_correct == correct);
        CHECK(probe.score(t).n_total == total);
    }

    SUBCASE("questions missing a topology group are skipped with a warning") {
        std::vector<GenerationRecord> only_chain;
        for (const auto& r : corpus.records)
            if (r.question_id != "q003" || r.label_topology() == TopologyKind::Chain)
                only_chain.push_back(r);
        auto partial = build_question_labels(corpus.questions, only_chain);
        CHECK(partial.labels.size() == corpus.questions.size() - 1);
        CHECK(!partial.warnings.empty());
        for (const auto& l : partial.labels) CHECK(l.question_id != "q003");
    }
    SUBCASE("outcomes are computed on the fly when absent") {
        auto stripped = corpus.records;
        std::vector<int> expected;
        for (auto& r : stripped) {
            expected.push_back(*r.outcome);
            r.outcome.reset();
        }
        auto relabeled = build_question_labels(corpus.questions, stripped);
        REQUIRE(relabeled.labels.size() == built.labels.size());
        for (std::size_t i = 0; i < built.labels.size(); ++i)
            REQUIRE(relabeled.labels[i] == built.labels[i]);
    }
}

TEST_CASE("apply_outcomes validates question references") {
    std::mt19937 rng(6);
    auto corpus = testsupport::random_record_corpus(rng, 3);
    auto records = corpus.records;
    for (auto& r : records) r.outcome.reset();
    apply_outcomes(records, corpus.questions);
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(records[i].outcome == corpus.records[i].outcome);

    records[0].question_id = "missing";
    CHECK_THROWS_AS(apply_outcomes(records, corpus.questions), ValidationError);
}

TEST_CASE("label rows round-trip through JSONL") {
    std::mt19937 rng(8);
    auto labels = testsupport::random_label_corpus(rng, 20);
    auto seg = segment_difficulty(labels);
    apply_difficulty(labels, seg);

    for (const auto& l : labels) {
        auto j = to_json(l);
        CHECK(labels_from_json(j) == l);
    }

    SUBCASE("missing topology key is rejected") {
        auto j = to_json(labels[0]);
        j["scores"].erase("graph");
        CHECK_THROWS_AS(labels_from_json(j), MissingTopologyScore);
    }
    SUBCASE("inconsistent value is rejected") {
        auto j = to_json(labels[0]);
        j["scores"]["chain"]["value"] = 0.123456;
        j["scores"]["chain"]["n_correct"] = 1;
        j["scores"]["chain"]["n_total"] = 2;
        CHECK_THROWS_AS(labels_from_json(j), ValidationError);
    }
}
