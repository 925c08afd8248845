#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topoforge/labeling.hpp"

namespace topoforge {

struct SftRecord {
    std::string question_id;
    std::string prompt;    // bare question, topology instructions stripped
    std::string response;  // raw trace text
    TopologyKind topology = TopologyKind::Chain;
    Difficulty difficulty = Difficulty::Medium;
    double orm_score = 0.0;

    bool operator==(const SftRecord&) const = default;
};

enum class PairVariant { Standard = 0, FrugalV1 = 1, FrugalV2 = 2 };

std::string_view to_string(PairVariant v);
PairVariant variant_from_string(std::string_view name);

struct PairSide {
    std::string text;
    long token_length = 0;
    TopologyKind topology = TopologyKind::Chain;

    bool operator==(const PairSide&) const = default;
};

struct PreferencePair {
    std::string question_id;
    std::string prompt;
    PairSide winner;
    PairSide loser;
    PairVariant variant = PairVariant::Standard;

    bool operator==(const PreferencePair&) const = default;
};

// Ranks a response for a question; larger is better.
using Scorer = std::function<double(const Question&, const GenerationRecord&)>;

// Outcome-weighted per-topology accuracy: correctness times the question's
// accuracy under the record's topology.
double stub_orm_score(const QuestionLabels& labels, const GenerationRecord& record);
Scorer make_stub_scorer(const std::vector<QuestionLabels>& labels);

struct SftConfig {
    // Questions admitted per difficulty tier, indexed like Difficulty.
    std::array<long, 3> per_tier_quota{4, 4, 4};
    // Responses kept per admitted question.
    long keep_top_m = 2;
};

struct SftBuildResult {
    std::vector<SftRecord> records;
    std::vector<std::string> warnings;
};

// Three-stage filter: fill tier quotas in ascending question-id order, drop
// incorrect responses, keep each question's top responses by score (ties:
// shorter first, then record key).
SftBuildResult build_sft(const std::vector<Question>& questions,
                         const std::vector<GenerationRecord>& records,
                         const std::vector<QuestionLabels>& labels, const Scorer& scorer,
                         const SftConfig& cfg = {});

// p-quantile of token lengths over every record in the corpus.
double corpus_length_threshold(const std::vector<GenerationRecord>& records, double p);

std::vector<PreferencePair> build_pref_standard(const std::vector<Question>& questions,
                                                const std::vector<GenerationRecord>& records,
                                                long max_pairs_per_question = 4);
// Length-frugal: winners must be correct and no longer than the corpus
// p-quantile; v2 additionally demotes over-long correct responses to losers.
std::vector<PreferencePair> build_pref_frugal_v1(const std::vector<Question>& questions,
                                                 const std::vector<GenerationRecord>& records,
                                                 double p = 0.25, long max_pairs_per_question = 4);
std::vector<PreferencePair> build_pref_frugal_v2(const std::vector<Question>& questions,
                                                 const std::vector<GenerationRecord>& records,
                                                 double p = 0.25, long max_pairs_per_question = 4);

Json to_json(const SftRecord& r);
SftRecord sft_record_from_json(const Json& j);
std::vector<SftRecord> read_sft_records(const std::string& path);
void write_sft_records(const std::string& path, const std::vector<SftRecord>& records);

Json to_json(const PreferencePair& p);
PreferencePair pair_from_json(const Json& j);
std::vector<PreferencePair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<PreferencePair>& pairs);

}  // namespace topoforge
