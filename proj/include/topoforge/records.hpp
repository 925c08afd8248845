#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topoforge/io.hpp"
#include "topoforge/trace.hpp"

namespace topoforge {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One benchmark item as stored in questions.jsonl.
struct Question {
    std::string id;
    std::string dataset;  // split tag, e.g. the benchmark of origin
    std::string subject;
    QuestionType qtype = QuestionType::FreeForm;
    std::string prompt;
    std::optional<std::string> image_ref;
    std::string ground_truth;
    std::vector<std::string> choices;  // empty for free-form questions

    bool operator==(const Question&) const = default;
};

// One model response to (question, topology, sample index) as stored in
// responses.jsonl. `outcome` stays empty until the labeling stage runs.
struct GenerationRecord {
    std::string question_id;
    std::optional<TopologyKind> declared_topology;
    std::optional<TopologyKind> classified_topology;  // empty when no trace parsed
    int sample_index = 0;
    std::string model;
    std::string raw_text;
    std::optional<ExtractedAnswer> answer;
    long token_length = 0;
    std::optional<int> outcome;  // 0/1 correctness label

    // Stable identity used for deterministic tie-breaking.
    std::string key() const;

    // The topology a record counts toward: the prompted one when declared,
    // otherwise whatever the classifier saw.
    std::optional<TopologyKind> label_topology() const {
        return declared_topology ? declared_topology : classified_topology;
    }

    bool operator==(const GenerationRecord&) const = default;
};

Json to_json(const Question& q);
Question question_from_json(const Json& j);

Json to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const Json& j);

Json answer_to_json(const ExtractedAnswer& a);
ExtractedAnswer answer_from_json(const Json& j);

std::vector<Question> read_questions(const std::string& path);
std::vector<GenerationRecord> read_records(const std::string& path);
void write_questions(const std::string& path, const std::vector<Question>& questions);
void write_records(const std::string& path, const std::vector<GenerationRecord>& records);

}  // namespace topoforge
