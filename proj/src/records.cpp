#include "topoforge/records.hpp"

#include "topoforge/text.hpp"

namespace topoforge {

namespace {

// Field accessors that turn nlohmann's type errors into ValidationError
// with the offending key in the message.
std::string require_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw ValidationError(std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<TopologyKind> optional_topology(const Json& j, const char* key) {
    auto s = optional_string(j, key);
    if (!s) return std::nullopt;
    auto t = topology_from_string(*s);
    if (!t) throw ValidationError("unknown topology '" + *s + "' in field '" + key + "'");
    return t;
}

}  // namespace

std::string GenerationRecord::key() const {
    std::string topo = declared_topology ? std::string(to_string(*declared_topology))
                       : classified_topology ? std::string(to_string(*classified_topology))
                                             : "none";
    return question_id + "|" + model + "|" + topo + "|" + std::to_string(sample_index);
}

Json answer_to_json(const ExtractedAnswer& a) {
    Json j;
    switch (a.kind()) {
        case ExtractedAnswer::Kind::Choice:
            j["kind"] = "choice";
            j["value"] = std::string(1, a.choice_letter());
            break;
        case ExtractedAnswer::Kind::Number:
            j["kind"] = "number";
            j["value"] = a.number_value();
            break;
        case ExtractedAnswer::Kind::Text:
            j["kind"] = "text";
            j["value"] = a.text_value();
            break;
    }
    return j;
}

ExtractedAnswer answer_from_json(const Json& j) {
    std::string kind = require_string(j, "kind");
    if (kind == "choice") {
        std::string v = require_string(j, "value");
        if (v.size() != 1) throw ValidationError("choice answer must be a single letter");
        return ExtractedAnswer::choice(v[0]);
    }
    if (kind == "number") {
        auto it = j.find("value");
        if (it == j.end() || !it->is_number())
            throw ValidationError("number answer must carry a numeric value");
        return ExtractedAnswer::number(it->get<double>());
    }
    if (kind == "text") return ExtractedAnswer::text(require_string(j, "value"));
    throw ValidationError("unknown answer kind '" + kind + "'");
}

Json to_json(const Question& q) {
    Json j;
    j["id"] = q.id;
    j["dataset"] = q.dataset;
    j["subject"] = q.subject;
    j["qtype"] = std::string(to_string(q.qtype));
    j["prompt"] = q.prompt;
    if (q.image_ref) j["image_ref"] = *q.image_ref;
    j["ground_truth"] = q.ground_truth;
    if (!q.choices.empty()) j["choices"] = q.choices;
    return j;
}

Question question_from_json(const Json& j) {
    Question q;
    q.id = require_string(j, "id");
    q.dataset = require_string(j, "dataset");
    q.subject = require_string(j, "subject");
    std::string qtype = require_string(j, "qtype");
    auto parsed = question_type_from_string(qtype);
    if (!parsed) throw ValidationError("unknown qtype '" + qtype + "' for question " + q.id);
    q.qtype = *parsed;
    q.prompt = require_string(j, "prompt");
    q.image_ref = optional_string(j, "image_ref");
    q.ground_truth = require_string(j, "ground_truth");
    if (auto it = j.find("choices"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("choices must be an array");
        for (const auto& c : *it) q.choices.push_back(c.get<std::string>());
    }
    return q;
}

Json to_json(const GenerationRecord& r) {
    Json j;
    j["question_id"] = r.question_id;
    j["declared_topology"] =
        r.declared_topology ? Json(std::string(to_string(*r.declared_topology))) : Json(nullptr);
    j["classified_topology"] =
        r.classified_topology ? Json(std::string(to_string(*r.classified_topology))) : Json(nullptr);
    j["sample_index"] = r.sample_index;
    j["model"] = r.model;
    j["raw_text"] = r.raw_text;
    if (r.answer) j["answer"] = answer_to_json(*r.answer);
    j["token_length"] = r.token_length;
    if (r.outcome) j["outcome"] = *r.outcome;
    return j;
}

GenerationRecord record_from_json(const Json& j) {
    GenerationRecord r;
    r.question_id = require_string(j, "question_id");
    r.declared_topology = optional_topology(j, "declared_topology");
    r.classified_topology = optional_topology(j, "classified_topology");
    if (auto it = j.find("sample_index"); it != j.end() && it->is_number_integer())
        r.sample_index = it->get<int>();
    else
        throw ValidationError("missing integer field 'sample_index'");
    r.model = require_string(j, "model");
    r.raw_text = require_string(j, "raw_text");
    if (auto it = j.find("answer"); it != j.end() && !it->is_null())
        r.answer = answer_from_json(*it);
    if (auto it = j.find("token_length"); it != j.end() && it->is_number_integer())
        r.token_length = it->get<long>();
    else
        throw ValidationError("missing integer field 'token_length'");
    if (auto it = j.find("outcome"); it != j.end() && !it->is_null()) {
        int v = it->get<int>();
        if (v != 0 && v != 1) throw ValidationError("outcome must be 0 or 1");
        r.outcome = v;
    }
    return r;
}

std::vector<Question> read_questions(const std::string& path) {
    std::vector<Question> out;
    for (const Json& j : read_jsonl(path)) out.push_back(question_from_json(j));
    return out;
}

std::vector<GenerationRecord> read_records(const std::string& path) {
    std::vector<GenerationRecord> out;
    for (const Json& j : read_jsonl(path)) out.push_back(record_from_json(j));
    return out;
}

void write_questions(const std::string& path, const std::vector<Question>& questions) {
    std::vector<Json> rows;
    rows.reserve(questions.size());
    for (const auto& q : questions) rows.push_back(to_json(q));
    write_jsonl(path, rows);
}

void write_records(const std::string& path, const std::vector<GenerationRecord>& records) {
    std::vector<Json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

}  // namespace topoforge
