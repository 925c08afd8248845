#include "topoforge/prompts.hpp"

#include <array>
#include <cctype>
#include <utility>
#include <vector>

namespace topoforge {

namespace {

std::string build_body(TopologyKind t) {
    std::string b = "{question}\n\n";
    b += kTemplateSentinel;
    b += "\n";
    switch (t) {
        case TopologyKind::Chain:
            b +=
                "Reason step by step as one straight chain: every step has exactly one\n"
                "parent, the previous step. Use at most {max_depth} steps. Reply only with\n"
                "lines in this format:\n"
                "TOPOLOGY: chain\n"
                "NODE s1: first step\n"
                "NODE s2 PARENT s1: next step\n"
                "ANSWER: final answer\n"
                "Do not branch and end with exactly one ANSWER line.\n";
            break;
        case TopologyKind::Tree:
            b +=
                "Reason as a tree: explore up to {n_children} alternative continuations per\n"
                "step, at most {max_depth} levels deep, then commit to one branch. Reply only\n"
                "with lines in this format:\n"
                "TOPOLOGY: tree\n"
                "NODE s1: first step\n"
                "NODE s2 PARENT s1: one continuation\n"
                "NODE s3 PARENT s1: another continuation\n"
                "ANSWER: final answer\n"
                "Each step names a single parent; end with exactly one ANSWER line.\n";
            break;
        case TopologyKind::Graph:
            b +=
                "Reason as a graph: explore up to {n_children} continuations per step, at\n"
                "most {max_depth} levels deep, and connect a step to up to {n_neighbors}\n"
                "related steps. Steps may merge several parents, and EDGE lines add\n"
                "undirected links. Reply only with lines in this format:\n"
                "TOPOLOGY: graph\n"
                "NODE s1: first step\n"
                "NODE s2 PARENT s1: one continuation\n"
                "NODE s3 PARENT s1,s2: a step merging both\n"
                "EDGE s1 -- s3\n"
                "ANSWER: final answer\n"
                "End with exactly one ANSWER line.\n";
            break;
    }
    return b;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

const PromptTemplate& default_template(TopologyKind t) {
    static const std::array<PromptTemplate, 3> kDefaults = {
        PromptTemplate{TopologyKind::Chain, build_body(TopologyKind::Chain)},
        PromptTemplate{TopologyKind::Tree, build_body(TopologyKind::Tree)},
        PromptTemplate{TopologyKind::Graph, build_body(TopologyKind::Graph)},
    };
    return kDefaults[topology_index(t)];
}

void validate_template(const PromptTemplate& tpl) {
    auto fail = [&](const std::string& why) {
        throw MissingTemplate(std::string(to_string(tpl.topology)) + " template: " + why);
    };
    if (count_occurrences(tpl.body, kTemplateSentinel) != 1)
        fail("sentinel " + std::string(kTemplateSentinel) + " must appear exactly once");

    struct Placeholder {
        std::string_view name;
        bool allowed;
    };
    const bool tree_up = tpl.topology != TopologyKind::Chain;
    const bool graph = tpl.topology == TopologyKind::Graph;
    const std::vector<Placeholder> placeholders = {
        {"{question}", true},
        {"{max_depth}", true},
        {"{n_children}", tree_up},
        {"{n_neighbors}", graph},
    };
    for (const auto& p : placeholders) {
        const bool present = tpl.body.find(p.name) != std::string::npos;
        if (p.allowed && !present) fail("missing required placeholder " + std::string(p.name));
        if (!p.allowed && present) fail("placeholder " + std::string(p.name) + " is not available");
    }
}

std::string render_prompt(const Question& question, const PromptTemplate& tpl,
                          const TopologyParams& params) {
    validate_template(tpl);
    const std::vector<std::pair<std::string_view, std::string>> values = {
        {"{question}", question.prompt},
        {"{max_depth}", std::to_string(params.max_depth)},
        {"{n_children}", std::to_string(params.n_children)},
        {"{n_neighbors}", std::to_string(params.n_neighbors)},
    };
    // Single pass: substituted text (e.g. the question) is never re-expanded.
    std::string out;
    out.reserve(tpl.body.size() + question.prompt.size());
    for (std::size_t i = 0; i < tpl.body.size();) {
        bool matched = false;
        if (tpl.body[i] == '{') {
            for (const auto& [name, value] : values) {
                if (tpl.body.compare(i, name.size(), name) == 0) {
                    out += value;
                    i += name.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out += tpl.body[i++];
    }
    return out;
}

std::string render_prompt(const Question& question, TopologyKind t, const TopologyParams& params) {
    return render_prompt(question, default_template(t), params);
}

std::string strip_topology_template(std::string_view prompt) {
    const std::size_t pos = prompt.find(kTemplateSentinel);
    std::string_view head = pos == std::string_view::npos ? prompt : prompt.substr(0, pos);
    while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.remove_suffix(1);
    return std::string(head);
}

}  // namespace topoforge
