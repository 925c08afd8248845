#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace topoforge {

// ---------------------------------------------------------------------------
// Topology kinds

// Ordered Chain < Tree < Graph; the order is used for deterministic
// tie-breaking and for the canonical cell ordering of pipeline output.
enum class TopologyKind { Chain = 0, Tree = 1, Graph = 2 };

inline constexpr std::array<TopologyKind, 3> kAllTopologies{
    TopologyKind::Chain, TopologyKind::Tree, TopologyKind::Graph};

constexpr int topology_index(TopologyKind t) { return static_cast<int>(t); }

std::string_view to_string(TopologyKind t);
std::optional<TopologyKind> topology_from_string(std::string_view s);  // case-insensitive

// ---------------------------------------------------------------------------
// Trace structure

struct TraceNode {
    std::string id;                    // [A-Za-z0-9_]+
    std::string text;                  // single line
    std::vector<std::string> parents;  // ordered; each refers to a declared node

    bool operator==(const TraceNode&) const = default;
};

struct ReasoningTrace {
    std::optional<TopologyKind> declared_topology;
    std::vector<TraceNode> nodes;  // declaration order preserved
    std::vector<std::pair<std::string, std::string>> links;  // auxiliary cross-links
    std::optional<std::string> answer;

    bool empty() const { return nodes.empty(); }
    bool operator==(const ReasoningTrace&) const = default;
};

// ---------------------------------------------------------------------------
// Errors

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntaxError : TraceError {
    int line_no;
    SyntaxError(int line, const std::string& what)
        : TraceError("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

struct DuplicateNodeId : TraceError {
    int line_no;
    std::string id;
    DuplicateNodeId(int line, std::string node_id)
        : TraceError("line " + std::to_string(line) + ": duplicate node id '" + node_id + "'"),
          line_no(line), id(std::move(node_id)) {}
};

struct UnknownParentId : TraceError {
    int line_no;
    std::string id;
    UnknownParentId(int line, std::string parent_id)
        : TraceError("line " + std::to_string(line) + ": unknown parent id '" + parent_id + "'"),
          line_no(line), id(std::move(parent_id)) {}
};

struct UnknownLinkEndpoint : TraceError {
    int line_no;
    std::string id;
    UnknownLinkEndpoint(int line, std::string endpoint_id)
        : TraceError("line " + std::to_string(line) + ": unknown link endpoint '" + endpoint_id + "'"),
          line_no(line), id(std::move(endpoint_id)) {}
};

struct EmptyTrace : TraceError {
    EmptyTrace() : TraceError("trace has no nodes") {}
};

struct InvariantViolation : TraceError {
    using TraceError::TraceError;
};

// ---------------------------------------------------------------------------
// Operations

enum class ParseMode { Strict, Lenient };

// Parses the line-oriented trace grammar:
//
//   TOPOLOGY: chain|tree|graph           (optional, at most once, first statement)
//   NODE <id>: <text>                    (root node)
//   NODE <id> PARENT <id>[,<id>...]: <text>
//   EDGE <id> -- <id>                    (undirected auxiliary link)
//   ANSWER: <text>                       (optional, at most once, last statement)
//
// Blank lines are ignored. Parent references may point forward. Strict mode
// raises on any non-conforming non-blank line; lenient mode skips junk lines
// and salvages what it can (dropping invalid parent/link references), so the
// result may be empty.
ReasoningTrace parse_trace(std::string_view text, ParseMode mode);

// Canonical serialization: TOPOLOGY, then nodes in declaration order, then
// EDGE lines, then ANSWER; '\n' terminators. Byte-identical for equal traces.
// Throws InvariantViolation when the trace breaks a structural invariant.
std::string serialize_trace(const ReasoningTrace& trace);

// Graph if any auxiliary link exists, any node has >= 2 parents, or the
// parent structure contains a cycle; else Tree if any node has >= 2 children
// or there is more than one root; else Chain. Ignores declared_topology.
TopologyKind classify_topology(const ReasoningTrace& trace);

// ---------------------------------------------------------------------------
// Answer extraction

enum class QuestionType { MultipleChoice, FreeForm };

std::string_view to_string(QuestionType t);
std::optional<QuestionType> question_type_from_string(std::string_view s);

class ExtractedAnswer {
public:
    enum class Kind { Choice = 0, Number = 1, Text = 2 };

    static ExtractedAnswer choice(char letter) { return ExtractedAnswer(letter); }
    static ExtractedAnswer number(double value) { return ExtractedAnswer(value); }
    static ExtractedAnswer text(std::string value) { return ExtractedAnswer(std::move(value)); }

    Kind kind() const { return static_cast<Kind>(payload_.index()); }
    char choice_letter() const { return std::get<char>(payload_); }
    double number_value() const { return std::get<double>(payload_); }
    const std::string& text_value() const { return std::get<std::string>(payload_); }

    // Human/JSONL rendering: "B", "42", or the normalized text.
    std::string display() const;

    bool operator==(const ExtractedAnswer&) const = default;

private:
    explicit ExtractedAnswer(char c) : payload_(c) {}
    explicit ExtractedAnswer(double v) : payload_(v) {}
    explicit ExtractedAnswer(std::string s) : payload_(std::move(s)) {}

    std::variant<char, double, std::string> payload_;
};

// Search order: (1) last "ANSWER:" line, (2) last \boxed{...} payload,
// (3) for multiple-choice the last standalone capital A-E token,
// (4) for free-form the last decimal-number token. Absence returned as
// nullopt, never an error. Choices are upper-cased; free text is lower-cased,
// whitespace-collapsed and stripped of trailing punctuation.
std::optional<ExtractedAnswer> extract_answer(std::string_view raw_text, QuestionType qtype);

}  // namespace topoforge
