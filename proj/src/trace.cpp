#include "topoforge/trace.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "topoforge/text.hpp"

namespace topoforge {

std::string_view to_string(TopologyKind t) {
    switch (t) {
        case TopologyKind::Chain: return "chain";
        case TopologyKind::Tree: return "tree";
        case TopologyKind::Graph: return "graph";
    }
    return "chain";
}

std::optional<TopologyKind> topology_from_string(std::string_view s) {
    std::string lower = to_lower(trim(s));
    if (lower == "chain") return TopologyKind::Chain;
    if (lower == "tree") return TopologyKind::Tree;
    if (lower == "graph") return TopologyKind::Graph;
    return std::nullopt;
}

std::string_view to_string(QuestionType t) {
    return t == QuestionType::MultipleChoice ? "multiple-choice" : "free-form";
}

std::optional<QuestionType> question_type_from_string(std::string_view s) {
    std::string lower = to_lower(trim(s));
    if (lower == "multiple-choice") return QuestionType::MultipleChoice;
    if (lower == "free-form") return QuestionType::FreeForm;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

bool is_id_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

struct LineCursor {
    std::string_view rest;

    void skip_ws() {
        while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t'))
            rest.remove_prefix(1);
    }

    // Consumes `kw` (exact or case-insensitive) when followed by a
    // non-identifier character.
    bool eat_keyword(std::string_view kw, bool case_insensitive) {
        if (rest.size() < kw.size()) return false;
        for (std::size_t i = 0; i < kw.size(); ++i) {
            char a = rest[i], b = kw[i];
            if (case_insensitive) {
                a = static_cast<char>(std::toupper(static_cast<unsigned char>(a)));
            }
            if (a != b) return false;
        }
        if (rest.size() > kw.size() && is_id_char(rest[kw.size()])) return false;
        rest.remove_prefix(kw.size());
        return true;
    }

    std::string_view eat_identifier() {
        std::size_t n = 0;
        while (n < rest.size() && is_id_char(rest[n])) ++n;
        std::string_view id = rest.substr(0, n);
        rest.remove_prefix(n);
        return id;
    }

    bool eat_char(char c) {
        if (rest.empty() || rest.front() != c) return false;
        rest.remove_prefix(1);
        return true;
    }

    // Remainder-of-line text: one leading space after ':' is separator,
    // everything beyond it belongs to the text verbatim.
    std::string take_text() {
        std::string_view t = rest;
        if (!t.empty() && t.front() == ' ') t.remove_prefix(1);
        rest = {};
        return std::string(t);
    }
};

struct Statement {
    enum class Kind { Topology, Node, Edge, Answer };
    Kind kind;
    TopologyKind topology{};
    TraceNode node;
    std::pair<std::string, std::string> edge;
    std::string answer;
};

// Recognizes a single non-blank line. Returns nullopt (with a message) when
// the line does not conform to the grammar.
std::optional<Statement> recognize(std::string_view line, bool ci, std::string& error) {
    LineCursor cur{line};
    cur.skip_ws();

    if (cur.eat_keyword("TOPOLOGY", ci)) {
        cur.skip_ws();
        if (!cur.eat_char(':')) {
            error = "expected ':' after TOPOLOGY";
            return std::nullopt;
        }
        std::string value(trim(cur.rest));
        std::optional<TopologyKind> kind;
        if (ci) {
            kind = topology_from_string(value);
        } else if (value == "chain" || value == "tree" || value == "graph") {
            kind = topology_from_string(value);
        }
        if (!kind) {
            error = "topology must be one of chain|tree|graph";
            return std::nullopt;
        }
        Statement s;
        s.kind = Statement::Kind::Topology;
        s.topology = *kind;
        return s;
    }

    if (cur.eat_keyword("NODE", ci)) {
        cur.skip_ws();
        Statement s;
        s.kind = Statement::Kind::Node;
        std::string_view id = cur.eat_identifier();
        if (id.empty()) {
            error = "expected node id after NODE";
            return std::nullopt;
        }
        s.node.id = std::string(id);
        cur.skip_ws();
        if (cur.eat_keyword("PARENT", ci)) {
            cur.skip_ws();
            while (true) {
                std::string_view pid = cur.eat_identifier();
                if (pid.empty()) {
                    error = "expected parent id";
                    return std::nullopt;
                }
                s.node.parents.emplace_back(pid);
                cur.skip_ws();
                if (cur.eat_char(',')) {
                    cur.skip_ws();
                    continue;
                }
                break;
            }
        }
        if (!cur.eat_char(':')) {
            error = "expected ':' after node declaration";
            return std::nullopt;
        }
        s.node.text = cur.take_text();
        return s;
    }

    if (cur.eat_keyword("EDGE", ci)) {
        cur.skip_ws();
        std::string_view a = cur.eat_identifier();
        if (a.empty()) {
            error = "expected link endpoint after EDGE";
            return std::nullopt;
        }
        cur.skip_ws();
        if (!cur.eat_char('-') || !cur.eat_char('-')) {
            error = "expected '--' between link endpoints";
            return std::nullopt;
        }
        cur.skip_ws();
        std::string_view b = cur.eat_identifier();
        if (b.empty()) {
            error = "expected second link endpoint";
            return std::nullopt;
        }
        cur.skip_ws();
        if (!cur.rest.empty()) {
            error = "unexpected trailing text after EDGE";
            return std::nullopt;
        }
        Statement s;
        s.kind = Statement::Kind::Edge;
        s.edge = {std::string(a), std::string(b)};
        return s;
    }

    if (cur.eat_keyword("ANSWER", ci)) {
        cur.skip_ws();
        if (!cur.eat_char(':')) {
            error = "expected ':' after ANSWER";
            return std::nullopt;
        }
        Statement s;
        s.kind = Statement::Kind::Answer;
        s.answer = cur.take_text();
        return s;
    }

    error = "unrecognized statement";
    return std::nullopt;
}

}  // namespace

ReasoningTrace parse_trace(std::string_view text, ParseMode mode) {
    const bool strict = mode == ParseMode::Strict;
    ReasoningTrace trace;
    std::unordered_map<std::string, int> node_lines;  // id -> declaring line
    std::vector<int> node_line_order;                 // parallel to trace.nodes
    std::vector<int> edge_lines;                      // parallel to trace.links
    bool seen_statement = false;
    bool seen_answer = false;

    int line_no = 0;
    for (std::string_view raw_line : split_lines(text)) {
        ++line_no;
        if (trim(raw_line).empty()) continue;

        std::string error;
        std::optional<Statement> st = recognize(raw_line, /*ci=*/!strict, error);
        if (!st) {
            if (strict) throw SyntaxError(line_no, error);
            continue;
        }

        if (strict && seen_answer)
            throw SyntaxError(line_no, "statement after ANSWER");

        switch (st->kind) {
            case Statement::Kind::Topology:
                if (strict && (seen_statement || trace.declared_topology))
                    throw SyntaxError(line_no, "TOPOLOGY must be the first statement");
                if (!trace.declared_topology) trace.declared_topology = st->topology;
                break;
            case Statement::Kind::Node: {
                auto [it, inserted] = node_lines.emplace(st->node.id, line_no);
                if (!inserted) {
                    if (strict) throw DuplicateNodeId(line_no, st->node.id);
                    break;  // lenient: keep the first declaration
                }
                (void)it;
                if (strict) {
                    for (const std::string& p : st->node.parents)
                        if (p == st->node.id)
                            throw SyntaxError(line_no, "node '" + p + "' lists itself as parent");
                }
                trace.nodes.push_back(std::move(st->node));
                node_line_order.push_back(line_no);
                break;
            }
            case Statement::Kind::Edge:
                trace.links.push_back(std::move(st->edge));
                edge_lines.push_back(line_no);
                break;
            case Statement::Kind::Answer:
                if (strict && seen_answer) throw SyntaxError(line_no, "duplicate ANSWER");
                trace.answer = std::move(st->answer);  // lenient: last one wins
                seen_answer = true;
                break;
        }
        seen_statement = true;
    }

    // Referential validation. Parent references may point forward, so this
    // runs after the whole document is read.
    if (strict) {
        for (std::size_t i = 0; i < trace.nodes.size(); ++i)
            for (const std::string& p : trace.nodes[i].parents)
                if (!node_lines.contains(p))
                    throw UnknownParentId(node_line_order[i], p);
        for (std::size_t i = 0; i < trace.links.size(); ++i) {
            if (!node_lines.contains(trace.links[i].first))
                throw UnknownLinkEndpoint(edge_lines[i], trace.links[i].first);
            if (!node_lines.contains(trace.links[i].second))
                throw UnknownLinkEndpoint(edge_lines[i], trace.links[i].second);
        }
    } else {
        for (TraceNode& node : trace.nodes)
            std::erase_if(node.parents, [&](const std::string& p) {
                return p == node.id || !node_lines.contains(p);
            });
        std::erase_if(trace.links, [&](const auto& link) {
            return !node_lines.contains(link.first) || !node_lines.contains(link.second);
        });
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_trace(const ReasoningTrace& trace) {
    std::unordered_set<std::string_view> ids;
    for (const TraceNode& node : trace.nodes) {
        if (!is_identifier(node.id))
            throw InvariantViolation("node id '" + node.id + "' is not a valid identifier");
        if (!ids.insert(node.id).second)
            throw InvariantViolation("duplicate node id '" + node.id + "'");
        if (node.text.find('\n') != std::string::npos || node.text.find('\r') != std::string::npos)
            throw InvariantViolation("node text must be a single line");
    }
    for (const TraceNode& node : trace.nodes) {
        for (const std::string& p : node.parents) {
            if (p == node.id)
                throw InvariantViolation("node '" + node.id + "' lists itself as parent");
            if (!ids.contains(p))
                throw InvariantViolation("parent '" + p + "' of node '" + node.id +
                                         "' is not declared");
        }
    }
    for (const auto& [a, b] : trace.links) {
        if (!ids.contains(a)) throw InvariantViolation("link endpoint '" + a + "' is not declared");
        if (!ids.contains(b)) throw InvariantViolation("link endpoint '" + b + "' is not declared");
    }
    if (trace.answer &&
        (trace.answer->find('\n') != std::string::npos ||
         trace.answer->find('\r') != std::string::npos))
        throw InvariantViolation("answer must be a single line");

    std::string out;
    if (trace.declared_topology) {
        out += "TOPOLOGY: ";
        out += to_string(*trace.declared_topology);
        out += '\n';
    }
    for (const TraceNode& node : trace.nodes) {
        out += "NODE ";
        out += node.id;
        if (!node.parents.empty()) {
            out += " PARENT ";
            for (std::size_t i = 0; i < node.parents.size(); ++i) {
                if (i) out += ',';
                out += node.parents[i];
            }
        }
        out += ':';
        if (!node.text.empty()) {
            out += ' ';
            out += node.text;
        }
        out += '\n';
    }
    for (const auto& [a, b] : trace.links) {
        out += "EDGE ";
        out += a;
        out += " -- ";
        out += b;
        out += '\n';
    }
    if (trace.answer) {
        out += "ANSWER:";
        if (!trace.answer->empty()) {
            out += ' ';
            out += *trace.answer;
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification

TopologyKind classify_topology(const ReasoningTrace& trace) {
    if (trace.nodes.empty()) throw EmptyTrace();
    if (!trace.links.empty()) return TopologyKind::Graph;

    std::unordered_map<std::string_view, int> index;
    for (std::size_t i = 0; i < trace.nodes.size(); ++i)
        index.emplace(trace.nodes[i].id, static_cast<int>(i));

    const int n = static_cast<int>(trace.nodes.size());
    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i) {
        const TraceNode& node = trace.nodes[i];
        if (node.parents.size() >= 2) return TopologyKind::Graph;
        for (const std::string& p : node.parents) {
            auto it = index.find(p);
            if (it == index.end())
                throw InvariantViolation("parent '" + p + "' is not declared");
            children[it->second].push_back(i);
        }
    }

    // Cycle detection on the parent->child digraph (iterative three-color).
    std::vector<int> color(n, 0);
    for (int start = 0; start < n; ++start) {
        if (color[start] != 0) continue;
        std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
        color[start] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < children[v].size()) {
                int c = children[v][next++];
                if (color[c] == 1) return TopologyKind::Graph;
                if (color[c] == 0) {
                    color[c] = 1;
                    stack.push_back({c, 0});
                }
            } else {
                color[v] = 2;
                stack.pop_back();
            }
        }
    }

    int roots = 0;
    for (const TraceNode& node : trace.nodes)
        if (node.parents.empty()) ++roots;
    bool branching = std::any_of(children.begin(), children.end(),
                                 [](const std::vector<int>& c) { return c.size() >= 2; });
    if (branching || roots > 1) return TopologyKind::Tree;
    return TopologyKind::Chain;
}

// ---------------------------------------------------------------------------
// Answer extraction

std::string ExtractedAnswer::display() const {
    switch (kind()) {
        case Kind::Choice: return std::string(1, choice_letter());
        case Kind::Number: return format_double(number_value());
        case Kind::Text: return text_value();
    }
    return {};
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Standalone letter A-E. `capital_only` matches the raw-text rule; payload
// interpretation is case-insensitive. `take_last` selects last vs first.
std::optional<char> find_standalone_letter(std::string_view s, bool capital_only, bool take_last) {
    std::optional<char> found;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        bool match = (c >= 'A' && c <= 'E') ||
                     (!capital_only && c >= 'a' && c <= 'e');
        if (!match) continue;
        if (i > 0 && is_word_char(s[i - 1])) continue;
        if (i + 1 < s.size() && is_word_char(s[i + 1])) continue;
        char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (!take_last) return upper;
        found = upper;
    }
    return found;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Scans for the last standalone decimal-number token ([+-]?digits[.digits][e...]).
std::optional<double> find_last_number_token(std::string_view s) {
    std::optional<double> found;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        bool could_start = is_digit(c) || c == '+' || c == '-' || c == '.';
        if (!could_start) {
            ++i;
            continue;
        }
        if (i > 0) {
            char prev = s[i - 1];
            if (is_word_char(prev) || prev == '.') {
                ++i;
                continue;
            }
        }
        std::size_t j = i;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        std::size_t digits_begin = j;
        while (j < s.size() && is_digit(s[j])) ++j;
        bool has_int_digits = j > digits_begin;
        bool has_frac_digits = false;
        if (j < s.size() && s[j] == '.') {
            std::size_t k = j + 1;
            while (k < s.size() && is_digit(s[k])) ++k;
            has_frac_digits = k > j + 1;
            if (has_int_digits || has_frac_digits) j = k;
        }
        if (!has_int_digits && !has_frac_digits) {
            ++i;
            continue;
        }
        if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
            std::size_t exp_begin = k;
            while (k < s.size() && is_digit(s[k])) ++k;
            if (k > exp_begin) j = k;
        }
        if (j < s.size() && is_word_char(s[j])) {
            // Something like "42nd"; not a number token.
            while (j < s.size() && is_word_char(s[j])) ++j;
            i = j;
            continue;
        }
        if (auto v = parse_decimal(s.substr(i, j - i))) found = v;
        i = j;
    }
    return found;
}

// Payload of the last balanced \boxed{...} in the text.
std::optional<std::string_view> last_boxed_payload(std::string_view s) {
    static constexpr std::string_view kMarker = "\\boxed{";
    std::size_t search_end = s.size();
    while (true) {
        std::size_t pos = s.rfind(kMarker, search_end == 0 ? 0 : search_end - 1);
        if (pos == std::string_view::npos) return std::nullopt;
        std::size_t body = pos + kMarker.size();
        int depth = 1;
        for (std::size_t i = body; i < s.size(); ++i) {
            if (s[i] == '{') ++depth;
            else if (s[i] == '}' && --depth == 0)
                return s.substr(body, i - body);
        }
        if (pos == 0) return std::nullopt;
        search_end = pos;  // unbalanced; try an earlier occurrence
    }
}

// Turns a captured payload (from an ANSWER line or \boxed{}) into a typed
// answer for the given question type.
ExtractedAnswer answer_from_payload(std::string_view payload, QuestionType qtype) {
    payload = trim(payload);
    if (qtype == QuestionType::MultipleChoice) {
        if (auto letter = find_standalone_letter(payload, /*capital_only=*/false,
                                                 /*take_last=*/false))
            return ExtractedAnswer::choice(*letter);
        return ExtractedAnswer::text(normalize_free_text(payload));
    }
    if (auto number = parse_decimal(payload)) return ExtractedAnswer::number(*number);
    return ExtractedAnswer::text(normalize_free_text(payload));
}

}  // namespace

std::optional<ExtractedAnswer> extract_answer(std::string_view raw_text, QuestionType qtype) {
    // (1) Last ANSWER: line with a non-empty payload. Empty payloads do not
    // fire the rule; the search falls through to the next tier.
    std::optional<std::string_view> answer_payload;
    for (std::string_view line : split_lines(raw_text)) {
        std::string_view t = trim(line);
        if (t.substr(0, 7) == "ANSWER:") {
            std::string_view p = trim(t.substr(7));
            if (!p.empty()) answer_payload = p;
        }
    }
    if (answer_payload) return answer_from_payload(*answer_payload, qtype);

    // (2) Last \boxed{...} payload.
    if (auto boxed = last_boxed_payload(raw_text)) {
        std::string_view p = trim(*boxed);
        if (!p.empty()) return answer_from_payload(p, qtype);
    }

    // (3) / (4) Raw-text fallbacks.
    if (qtype == QuestionType::MultipleChoice) {
        if (auto letter = find_standalone_letter(raw_text, /*capital_only=*/true,
                                                 /*take_last=*/true))
            return ExtractedAnswer::choice(*letter);
        return std::nullopt;
    }
    if (auto number = find_last_number_token(raw_text)) return ExtractedAnswer::number(*number);
    return std::nullopt;
}

}  // namespace topoforge
