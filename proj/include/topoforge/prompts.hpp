#pragma once

#include <string>
#include <string_view>

#include "topoforge/records.hpp"

namespace topoforge {

struct MissingTemplate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Marker separating the bare question from the topology instructions in a
// rendered prompt. Everything from the sentinel onward is template text and
// must never leak into training prompts.
inline constexpr std::string_view kTemplateSentinel = "<<topo-template:v1>>";
inline constexpr std::string_view kTemplateVersion = "v1";

// Degrees of freedom of the topology instructions.
struct TopologyParams {
    int max_depth = 5;
    int n_children = 3;
    int n_neighbors = 2;
};

struct PromptTemplate {
    TopologyKind topology = TopologyKind::Chain;
    // Placeholders: {question} and {max_depth} always; {n_children} from Tree
    // on; {n_neighbors} for Graph only. Must contain the sentinel exactly once.
    std::string body;
};

// Built-in template for each topology; instructs output in the canonical
// trace grammar.
const PromptTemplate& default_template(TopologyKind t);

// Throws MissingTemplate when the body misses the sentinel/placeholders or
// uses placeholders its topology does not have.
void validate_template(const PromptTemplate& tpl);

std::string render_prompt(const Question& question, const PromptTemplate& tpl,
                          const TopologyParams& params);
std::string render_prompt(const Question& question, TopologyKind t, const TopologyParams& params);

// Cuts the prompt at the sentinel and trims trailing whitespace, recovering
// the bare question text. Prompts without a sentinel pass through unchanged.
std::string strip_topology_template(std::string_view prompt);

}  // namespace topoforge
