#include "topoforge/pairs.hpp"

#include <algorithm>
#include <memory>
#include <unordered_map>

#include "topoforge/prompts.hpp"

namespace topoforge {

namespace {

std::string require_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ValidationError(std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

long require_long(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer())
        throw ValidationError(std::string("missing integer field '") + key + "'");
    return it->get<long>();
}

TopologyKind require_topology(const Json& j, const char* key) {
    auto t = topology_from_string(require_string(j, key));
    if (!t) throw ValidationError(std::string("unknown topology in field '") + key + "'");
    return *t;
}

// Ascending (length, key): the total order used wherever responses tie.
bool shorter_first(const GenerationRecord* a, const GenerationRecord* b) {
    if (a->token_length != b->token_length) return a->token_length < b->token_length;
    return a->key() < b->key();
}

bool longer_first(const GenerationRecord* a, const GenerationRecord* b) {
    if (a->token_length != b->token_length) return a->token_length > b->token_length;
    return a->key() < b->key();
}

int ensure_outcome(const GenerationRecord& r, const Question& q) {
    return r.outcome ? *r.outcome : outcome_label(r, q);
}

std::unordered_map<std::string, const Question*> question_index(
    const std::vector<Question>& questions) {
    std::unordered_map<std::string, const Question*> by_id;
    for (const auto& q : questions) {
        if (!by_id.emplace(q.id, &q).second)
            throw ValidationError("duplicate question id " + q.id);
    }
    return by_id;
}

std::unordered_map<std::string, std::vector<const GenerationRecord*>> records_by_question(
    const std::vector<GenerationRecord>& records) {
    std::unordered_map<std::string, std::vector<const GenerationRecord*>> grouped;
    for (const auto& r : records) grouped[r.question_id].push_back(&r);
    return grouped;
}

PairSide make_side(const GenerationRecord& r) {
    return PairSide{r.raw_text, r.token_length, *r.label_topology()};
}

enum class Role { None, Winner, Loser };

// Shared pairing skeleton: per question, sort winners short-to-long and
// losers long-to-short, then cycle both lists until the cap.
std::vector<PreferencePair> build_pairs_impl(
    const std::vector<Question>& questions, const std::vector<GenerationRecord>& records,
    long max_pairs_per_question, PairVariant variant,
    const std::function<Role(const GenerationRecord&, int outcome)>& classify) {
    if (max_pairs_per_question < 1)
        throw ValidationError("max pairs per question must be positive");
    question_index(questions);  // rejects duplicate question ids
    auto grouped = records_by_question(records);

    std::vector<PreferencePair> out;
    for (const auto& q : questions) {
        auto git = grouped.find(q.id);
        if (git == grouped.end()) continue;

        std::vector<const GenerationRecord*> winners, losers;
        for (const GenerationRecord* r : git->second) {
            if (!r->label_topology()) continue;  // cannot fill the pair schema
            switch (classify(*r, ensure_outcome(*r, q))) {
                case Role::Winner: winners.push_back(r); break;
                case Role::Loser: losers.push_back(r); break;
                case Role::None: break;
            }
        }
        if (winners.empty() || losers.empty()) continue;
        std::sort(winners.begin(), winners.end(), shorter_first);
        std::sort(losers.begin(), losers.end(), longer_first);

        const long w = static_cast<long>(winners.size());
        const long l = static_cast<long>(losers.size());
        const long count = std::min(max_pairs_per_question, w * l);
        const std::string prompt = strip_topology_template(q.prompt);
        for (long i = 0; i < count; ++i) {
            out.push_back(PreferencePair{q.id, prompt, make_side(*winners[i % w]),
                                         make_side(*losers[i % l]), variant});
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(PairVariant v) {
    switch (v) {
        case PairVariant::Standard: return "standard";
        case PairVariant::FrugalV1: return "frugal_v1";
        case PairVariant::FrugalV2: return "frugal_v2";
    }
    return "standard";
}

PairVariant variant_from_string(std::string_view name) {
    if (name == "standard") return PairVariant::Standard;
    if (name == "frugal_v1") return PairVariant::FrugalV1;
    if (name == "frugal_v2") return PairVariant::FrugalV2;
    throw ValidationError("unknown pair variant '" + std::string(name) + "'");
}

double stub_orm_score(const QuestionLabels& labels, const GenerationRecord& record) {
    auto t = record.label_topology();
    if (!t || !record.outcome || *record.outcome != 1) return 0.0;
    return labels.score(*t).value;
}

Scorer make_stub_scorer(const std::vector<QuestionLabels>& labels) {
    auto by_id = std::make_shared<std::unordered_map<std::string, QuestionLabels>>();
    for (const auto& l : labels) (*by_id)[l.question_id] = l;
    return [by_id](const Question& q, const GenerationRecord& r) {
        auto it = by_id->find(q.id);
        if (it == by_id->end()) return 0.0;
        auto t = r.label_topology();
        if (!t) return 0.0;
        const int h = r.outcome ? *r.outcome : outcome_label(r, q);
        return h == 1 ? it->second.score(*t).value : 0.0;
    };
}

SftBuildResult build_sft(const std::vector<Question>& questions,
                         const std::vector<GenerationRecord>& records,
                         const std::vector<QuestionLabels>& labels, const Scorer& scorer,
                         const SftConfig& cfg) {
    if (cfg.keep_top_m < 1) throw ValidationError("keep_top_m must be positive");
    for (long quota : cfg.per_tier_quota)
        if (quota < 0) throw ValidationError("tier quotas must be non-negative");

    auto by_id = question_index(questions);
    auto grouped = records_by_question(records);

    std::unordered_map<std::string, const QuestionLabels*> label_index;
    for (const auto& l : labels) {
        if (!label_index.emplace(l.question_id, &l).second)
            throw ValidationError("duplicate labels for question " + l.question_id);
    }

    SftBuildResult result;

    // Stage 1: admit questions per difficulty tier, ascending ids.
    std::array<std::vector<std::string>, 3> tiers;
    for (const auto& q : questions) {
        auto lit = label_index.find(q.id);
        if (lit == label_index.end()) {
            result.warnings.push_back("question " + q.id + " has no labels; skipped");
            continue;
        }
        if (!lit->second->difficulty)
            throw ValidationError("labels for question " + q.id + " carry no difficulty tier");
        tiers[static_cast<int>(*lit->second->difficulty)].push_back(q.id);
    }

    for (int tier = 0; tier < 3; ++tier) {
        auto& ids = tiers[tier];
        std::sort(ids.begin(), ids.end());
        const std::size_t take =
            std::min<std::size_t>(ids.size(), static_cast<std::size_t>(cfg.per_tier_quota[tier]));
        for (std::size_t i = 0; i < take; ++i) {
            const Question& q = *by_id.at(ids[i]);
            const QuestionLabels& l = *label_index.at(ids[i]);

            // Stage 2: keep correct responses only.
            std::vector<const GenerationRecord*> correct;
            auto git = grouped.find(q.id);
            if (git != grouped.end()) {
                for (const GenerationRecord* r : git->second) {
                    if (ensure_outcome(*r, q) != 1) continue;
                    if (!r->label_topology()) {
                        result.warnings.push_back("response " + r->key() +
                                                  " has no topology; excluded");
                        continue;
                    }
                    correct.push_back(r);
                }
            }
            if (correct.empty()) {
                result.warnings.push_back("question " + q.id + " has no correct responses; skipped");
                continue;
            }

            // Stage 3: rank by score, break ties toward shorter responses.
            std::vector<std::pair<double, const GenerationRecord*>> ranked;
            ranked.reserve(correct.size());
            for (const GenerationRecord* r : correct) ranked.emplace_back(scorer(q, *r), r);
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return shorter_first(a.second, b.second);
            });
            const std::size_t keep =
                std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(cfg.keep_top_m));
            for (std::size_t k = 0; k < keep; ++k) {
                const GenerationRecord& r = *ranked[k].second;
                result.records.push_back(SftRecord{q.id, strip_topology_template(q.prompt),
                                                   r.raw_text, *r.label_topology(),
                                                   *l.difficulty, ranked[k].first});
            }
        }
    }
    return result;
}

double corpus_length_threshold(const std::vector<GenerationRecord>& records, double p) {
    std::vector<double> lengths;
    lengths.reserve(records.size());
    for (const auto& r : records) lengths.push_back(static_cast<double>(r.token_length));
    return quantile(std::move(lengths), p);
}

std::vector<PreferencePair> build_pref_standard(const std::vector<Question>& questions,
                                                const std::vector<GenerationRecord>& records,
                                                long max_pairs_per_question) {
    return build_pairs_impl(questions, records, max_pairs_per_question, PairVariant::Standard,
                            [](const GenerationRecord&, int outcome) {
                                return outcome == 1 ? Role::Winner : Role::Loser;
                            });
}

std::vector<PreferencePair> build_pref_frugal_v1(const std::vector<Question>& questions,
                                                 const std::vector<GenerationRecord>& records,
                                                 double p, long max_pairs_per_question) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("length quantile must lie in (0, 1)");
    if (records.empty()) return {};
    const double cutoff = corpus_length_threshold(records, p);
    return build_pairs_impl(questions, records, max_pairs_per_question, PairVariant::FrugalV1,
                            [cutoff](const GenerationRecord& r, int outcome) {
                                if (outcome == 1)
                                    return static_cast<double>(r.token_length) <= cutoff
                                               ? Role::Winner
                                               : Role::None;
                                return Role::Loser;
                            });
}

std::vector<PreferencePair> build_pref_frugal_v2(const std::vector<Question>& questions,
                                                 const std::vector<GenerationRecord>& records,
                                                 double p, long max_pairs_per_question) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("length quantile must lie in (0, 1)");
    if (records.empty()) return {};
    const double cutoff = corpus_length_threshold(records, p);
    return build_pairs_impl(questions, records, max_pairs_per_question, PairVariant::FrugalV2,
                            [cutoff](const GenerationRecord& r, int outcome) {
                                if (outcome == 1)
                                    return static_cast<double>(r.token_length) <= cutoff
                                               ? Role::Winner
                                               : Role::Loser;  // verbose wins demoted
                                return Role::Loser;
                            });
}

Json to_json(const SftRecord& r) {
    Json j;
    j["question_id"] = r.question_id;
    j["prompt"] = r.prompt;
    j["response"] = r.response;
    j["topology"] = std::string(to_string(r.topology));
    j["difficulty"] = std::string(to_string(r.difficulty));
    j["orm_score"] = r.orm_score;
    return j;
}

SftRecord sft_record_from_json(const Json& j) {
    SftRecord r;
    r.question_id = require_string(j, "question_id");
    r.prompt = require_string(j, "prompt");
    r.response = require_string(j, "response");
    r.topology = require_topology(j, "topology");
    auto d = difficulty_from_string(require_string(j, "difficulty"));
    if (!d) throw ValidationError("unknown difficulty in sft record");
    r.difficulty = *d;
    auto it = j.find("orm_score");
    if (it == j.end() || !it->is_number())
        throw ValidationError("missing numeric field 'orm_score'");
    r.orm_score = it->get<double>();
    return r;
}

namespace {

Json side_to_json(const PairSide& s) {
    Json j;
    j["text"] = s.text;
    j["length"] = s.token_length;
    j["topology"] = std::string(to_string(s.topology));
    return j;
}

PairSide side_from_json(const Json& j) {
    PairSide s;
    s.text = require_string(j, "text");
    s.token_length = require_long(j, "length");
    s.topology = require_topology(j, "topology");
    return s;
}

}  // namespace

Json to_json(const PreferencePair& p) {
    Json j;
    j["question_id"] = p.question_id;
    j["prompt"] = p.prompt;
    j["winner"] = side_to_json(p.winner);
    j["loser"] = side_to_json(p.loser);
    j["variant"] = std::string(to_string(p.variant));
    return j;
}

PreferencePair pair_from_json(const Json& j) {
    PreferencePair p;
    p.question_id = require_string(j, "question_id");
    p.prompt = require_string(j, "prompt");
    auto wit = j.find("winner");
    auto lit = j.find("loser");
    if (wit == j.end() || !wit->is_object() || lit == j.end() || !lit->is_object())
        throw ValidationError("pair must carry winner and loser objects");
    p.winner = side_from_json(*wit);
    p.loser = side_from_json(*lit);
    p.variant = variant_from_string(require_string(j, "variant"));
    return p;
}

std::vector<SftRecord> read_sft_records(const std::string& path) {
    std::vector<SftRecord> out;
    for (const Json& j : read_jsonl(path)) out.push_back(sft_record_from_json(j));
    return out;
}

void write_sft_records(const std::string& path, const std::vector<SftRecord>& records) {
    std::vector<Json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

std::vector<PreferencePair> read_pairs(const std::string& path) {
    std::vector<PreferencePair> out;
    for (const Json& j : read_jsonl(path)) out.push_back(pair_from_json(j));
    return out;
}

void write_pairs(const std::string& path, const std::vector<PreferencePair>& pairs) {
    std::vector<Json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(to_json(p));
    write_jsonl(path, rows);
}

}  // namespace topoforge
