#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topoforge/records.hpp"

namespace topoforge {

struct MalformedGroundTruth : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QuestionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyResponseSet : std::runtime_error {
    EmptyResponseSet() : std::runtime_error("topology label over an empty response set") {}
};
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingTopologyScore : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-(question, topology) accuracy: value = n_correct / n_total.
struct TopologyScore {
    long n_correct = 0;
    long n_total = 0;
    double value = 0.0;

    static TopologyScore of(long correct, long total) {
        return {correct, total, static_cast<double>(correct) / static_cast<double>(total)};
    }
    bool operator==(const TopologyScore&) const = default;
};

enum class Difficulty { Easy = 0, Medium = 1, Hard = 2 };

std::string_view to_string(Difficulty d);
std::optional<Difficulty> difficulty_from_string(std::string_view s);

struct QuestionLabels {
    std::string question_id;
    std::array<TopologyScore, 3> scores{};  // indexed by topology_index()
    std::optional<Difficulty> difficulty;   // filled by the segmentation stage

    const TopologyScore& score(TopologyKind t) const { return scores[topology_index(t)]; }
    bool operator==(const QuestionLabels&) const = default;
};

// 1 when the extracted answer matches the ground truth, else 0. Absent
// answers are wrong. Choices compare case-insensitively; numbers within
// relative tolerance 1e-6 (absolute 1e-9 for a zero ground truth); text by
// normalized equality. Throws MalformedGroundTruth when a multiple-choice
// ground truth is not a single letter A-E.
int match_answer(const std::optional<ExtractedAnswer>& extracted, const std::string& ground_truth,
                 QuestionType qtype);

// H label for one record: extraction from raw text + match against the
// question's ground truth. Throws QuestionMismatch when the record does not
// belong to the question.
int outcome_label(const GenerationRecord& record, const Question& question);

// F over a homogeneous (question, topology) record list. Records must carry
// outcomes. Throws EmptyResponseSet for an empty list.
TopologyScore topology_label(const std::vector<GenerationRecord>& records);

// Linear interpolation on order statistics: h = p*(n-1),
// v[floor(h)] + frac*(v[floor(h)+1] - v[floor(h)]). Throws EmptyInput.
double quantile(std::vector<double> values, double p);

struct DifficultyThresholds {
    std::array<double, 3> hi{};  // per-topology q_hi quantile of F
    std::array<double, 3> lo{};  // per-topology q_lo quantile of F
};

struct SegmentationResult {
    std::map<std::string, Difficulty> difficulty;
    DifficultyThresholds thresholds;
};

// Easy iff F > hi_t for all three topologies, Hard iff F < lo_t for all
// three (strict comparisons, per-topology thresholds); Medium otherwise.
// Every input question is assigned exactly one tier.
SegmentationResult segment_difficulty(const std::vector<QuestionLabels>& labels,
                                      double q_hi = 0.85, double q_lo = 0.15);

// Fills record.outcome for every record (recomputing existing values).
// Throws ValidationError when a record references an unknown question.
void apply_outcomes(std::vector<GenerationRecord>& records,
                    const std::vector<Question>& questions);

struct LabelBuildResult {
    std::vector<QuestionLabels> labels;         // question order preserved
    std::vector<std::string> warnings;          // skipped questions/records
};

// Groups records by (question, label topology) and emits QuestionLabels for
// every question that has responses under all three topologies; questions
// missing a topology group are skipped with a warning. Records without
// outcomes are labeled on the fly.
LabelBuildResult build_question_labels(const std::vector<Question>& questions,
                                       const std::vector<GenerationRecord>& records);

// Copies tier assignments onto the label rows.
void apply_difficulty(std::vector<QuestionLabels>& labels, const SegmentationResult& segmentation);

Json to_json(const QuestionLabels& l);
QuestionLabels labels_from_json(const Json& j);
std::vector<QuestionLabels> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<QuestionLabels>& labels);

}  // namespace topoforge
