#include "topoforge/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "topoforge/text.hpp"

namespace topoforge {

std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "medium";
}

std::optional<Difficulty> difficulty_from_string(std::string_view s) {
    std::string lower = to_lower(trim(s));
    if (lower == "easy") return Difficulty::Easy;
    if (lower == "medium") return Difficulty::Medium;
    if (lower == "hard") return Difficulty::Hard;
    return std::nullopt;
}

namespace {

bool numbers_match(double x, double g) {
    if (g == 0.0) return std::fabs(x) <= 1e-9;
    return std::fabs(x - g) <= 1e-6 * std::fabs(g);
}

char upper(char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

int match_answer(const std::optional<ExtractedAnswer>& extracted, const std::string& ground_truth,
                 QuestionType qtype) {
    if (qtype == QuestionType::MultipleChoice) {
        std::string_view gt = trim(ground_truth);
        if (gt.size() != 1 || upper(gt[0]) < 'A' || upper(gt[0]) > 'E')
            throw MalformedGroundTruth("multiple-choice ground truth must be a single letter A-E, got '" +
                                       ground_truth + "'");
        char g = upper(gt[0]);
        if (!extracted) return 0;
        switch (extracted->kind()) {
            case ExtractedAnswer::Kind::Choice:
                return upper(extracted->choice_letter()) == g ? 1 : 0;
            case ExtractedAnswer::Kind::Number:
                return 0;
            case ExtractedAnswer::Kind::Text:
                return extracted->text_value() == std::string(1, lower(g)) ? 1 : 0;
        }
        return 0;
    }

    if (!extracted) return 0;
    std::optional<double> gt_number = parse_decimal(ground_truth);
    switch (extracted->kind()) {
        case ExtractedAnswer::Kind::Choice:
            return normalize_free_text(ground_truth) ==
                           std::string(1, lower(extracted->choice_letter()))
                       ? 1
                       : 0;
        case ExtractedAnswer::Kind::Number:
            return gt_number && numbers_match(extracted->number_value(), *gt_number) ? 1 : 0;
        case ExtractedAnswer::Kind::Text:
            return extracted->text_value() == normalize_free_text(ground_truth) ? 1 : 0;
    }
    return 0;
}

int outcome_label(const GenerationRecord& record, const Question& question) {
    if (record.question_id != question.id)
        throw QuestionMismatch("record for '" + record.question_id +
                               "' labeled against question '" + question.id + "'");
    return match_answer(extract_answer(record.raw_text, question.qtype), question.ground_truth,
                        question.qtype);
}

TopologyScore topology_label(const std::vector<GenerationRecord>& records) {
    if (records.empty()) throw EmptyResponseSet();
    long correct = 0;
    for (const auto& r : records) {
        if (!r.outcome) throw ValidationError("record " + r.key() + " has no outcome label");
        correct += *r.outcome;
    }
    return TopologyScore::of(correct, static_cast<long>(records.size()));
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw EmptyInput("quantile of an empty list");
    p = std::clamp(p, 0.0, 1.0);
    std::sort(values.begin(), values.end());
    double h = p * static_cast<double>(values.size() - 1);
    std::size_t i = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(i);
    if (i + 1 >= values.size()) return values.back();
    return values[i] + frac * (values[i + 1] - values[i]);
}

SegmentationResult segment_difficulty(const std::vector<QuestionLabels>& labels, double q_hi,
                                      double q_lo) {
    if (labels.empty()) throw EmptyInput("segmentation over an empty corpus");
    if (!(q_lo < q_hi) || q_lo <= 0.0 || q_hi >= 1.0)
        throw ValidationError("quantile thresholds must satisfy 0 < q_lo < q_hi < 1");

    SegmentationResult result;
    for (TopologyKind t : kAllTopologies) {
        std::vector<double> fs;
        fs.reserve(labels.size());
        for (const auto& l : labels) fs.push_back(l.score(t).value);
        result.thresholds.hi[topology_index(t)] = quantile(fs, q_hi);
        result.thresholds.lo[topology_index(t)] = quantile(fs, q_lo);
    }
    for (const auto& l : labels) {
        bool easy = true, hard = true;
        for (TopologyKind t : kAllTopologies) {
            double f = l.score(t).value;
            easy = easy && f > result.thresholds.hi[topology_index(t)];
            hard = hard && f < result.thresholds.lo[topology_index(t)];
        }
        Difficulty d = easy ? Difficulty::Easy : hard ? Difficulty::Hard : Difficulty::Medium;
        if (!result.difficulty.emplace(l.question_id, d).second)
            throw ValidationError("duplicate question id '" + l.question_id + "' in labels");
    }
    return result;
}

void apply_outcomes(std::vector<GenerationRecord>& records,
                    const std::vector<Question>& questions) {
    std::unordered_map<std::string_view, const Question*> by_id;
    for (const auto& q : questions) by_id.emplace(q.id, &q);
    for (auto& r : records) {
        auto it = by_id.find(r.question_id);
        if (it == by_id.end())
            throw ValidationError("record references unknown question '" + r.question_id + "'");
        r.outcome = outcome_label(r, *it->second);
    }
}

LabelBuildResult build_question_labels(const std::vector<Question>& questions,
                                       const std::vector<GenerationRecord>& records) {
    std::unordered_map<std::string_view, const Question*> by_id;
    for (const auto& q : questions) by_id.emplace(q.id, &q);

    // (question, topology) -> [n_correct, n_total]
    std::unordered_map<std::string, std::array<std::array<long, 2>, 3>> counts;
    LabelBuildResult out;
    for (const auto& r : records) {
        auto qit = by_id.find(r.question_id);
        if (qit == by_id.end()) {
            out.warnings.push_back("record " + r.key() + " references unknown question; skipped");
            continue;
        }
        auto topo = r.label_topology();
        if (!topo) {
            out.warnings.push_back("record " + r.key() + " has no usable topology; skipped");
            continue;
        }
        int h = r.outcome ? *r.outcome : outcome_label(r, *qit->second);
        auto& cell = counts[r.question_id][topology_index(*topo)];
        cell[0] += h;
        cell[1] += 1;
    }

    for (const auto& q : questions) {
        auto it = counts.find(q.id);
        if (it == counts.end()) continue;  // no responses at all; nothing to warn about
        bool complete = true;
        for (TopologyKind t : kAllTopologies)
            if (it->second[topology_index(t)][1] == 0) {
                out.warnings.push_back("question " + q.id + " lacks " +
                                       std::string(to_string(t)) + " responses; skipped");
                complete = false;
            }
        if (!complete) continue;
        QuestionLabels l;
        l.question_id = q.id;
        for (TopologyKind t : kAllTopologies) {
            auto [c, n] = it->second[topology_index(t)];
            l.scores[topology_index(t)] = TopologyScore::of(c, n);
        }
        out.labels.push_back(std::move(l));
    }
    return out;
}

void apply_difficulty(std::vector<QuestionLabels>& labels, const SegmentationResult& segmentation) {
    for (auto& l : labels) {
        auto it = segmentation.difficulty.find(l.question_id);
        if (it == segmentation.difficulty.end())
            throw ValidationError("no difficulty assigned for question '" + l.question_id + "'");
        l.difficulty = it->second;
    }
}

Json to_json(const QuestionLabels& l) {
    Json scores;
    for (TopologyKind t : kAllTopologies) {
        const TopologyScore& s = l.score(t);
        scores[std::string(to_string(t))] =
            Json{{"n_correct", s.n_correct}, {"n_total", s.n_total}, {"value", s.value}};
    }
    Json j;
    j["question_id"] = l.question_id;
    j["scores"] = std::move(scores);
    if (l.difficulty) j["difficulty"] = std::string(to_string(*l.difficulty));
    return j;
}

QuestionLabels labels_from_json(const Json& j) {
    QuestionLabels l;
    if (!j.contains("question_id") || !j["question_id"].is_string())
        throw ValidationError("label row missing question_id");
    l.question_id = j["question_id"].get<std::string>();
    if (!j.contains("scores") || !j["scores"].is_object())
        throw MissingTopologyScore("label row for '" + l.question_id + "' missing scores");
    for (TopologyKind t : kAllTopologies) {
        std::string key(to_string(t));
        if (!j["scores"].contains(key))
            throw MissingTopologyScore("label row for '" + l.question_id + "' missing '" + key +
                                       "' score");
        const Json& s = j["scores"][key];
        TopologyScore score;
        score.n_correct = s.at("n_correct").get<long>();
        score.n_total = s.at("n_total").get<long>();
        score.value = s.at("value").get<double>();
        if (score.n_total <= 0 || score.n_correct < 0 || score.n_correct > score.n_total)
            throw ValidationError("inconsistent counts in label row for '" + l.question_id + "'");
        if (std::fabs(score.value - static_cast<double>(score.n_correct) /
                                        static_cast<double>(score.n_total)) > 1e-12)
            throw ValidationError("score value does not equal n_correct/n_total for '" +
                                  l.question_id + "'");
        l.scores[topology_index(t)] = score;
    }
    if (j.contains("difficulty") && !j["difficulty"].is_null()) {
        auto d = difficulty_from_string(j["difficulty"].get<std::string>());
        if (!d) throw ValidationError("unknown difficulty in label row for '" + l.question_id + "'");
        l.difficulty = d;
    }
    return l;
}

std::vector<QuestionLabels> read_labels(const std::string& path) {
    std::vector<QuestionLabels> out;
    for (const Json& j : read_jsonl(path)) out.push_back(labels_from_json(j));
    return out;
}

void write_labels(const std::string& path, const std::vector<QuestionLabels>& labels) {
    std::vector<Json> rows;
    rows.reserve(labels.size());
    for (const auto& l : labels) rows.push_back(to_json(l));
    write_jsonl(path, rows);
}

}  // namespace topoforge
