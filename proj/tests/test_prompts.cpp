#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "topoforge/prompts.hpp"

using namespace topoforge;

namespace {

Question sample_question() {
    Question q;
    q.id = "q1";
    q.dataset = "alpha";
    q.subject = "arithmetic";
    q.qtype = QuestionType::MultipleChoice;
    q.prompt = "Which option halves 42?\nA) 20\nB) 21\nC) 22\nD) 84";
    q.ground_truth = "B";
    q.choices = {"A", "B", "C", "D"};
    return q;
}

std::size_t count(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos;
         pos = hay.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

TEST_CASE("default templates validate and carry the sentinel exactly once") {
    for (auto t : kAllTopologies) {
        const auto& tpl = default_template(t);
        CHECK(tpl.topology == t);
        CHECK_NOTHROW(validate_template(tpl));
        CHECK(count(tpl.body, kTemplateSentinel) == 1);
        // The rendered instructions tell the model which topology header to emit.
        std::string header = "TOPOLOGY: " + std::string(to_string(t));
        CHECK(tpl.body.find(header) != std::string::npos);
    }
}

TEST_CASE("rendering substitutes every placeholder") {
    Question q = sample_question();
    TopologyParams params{3, 2, 4};

    for (auto t : kAllTopologies) {
        std::string rendered = render_prompt(q, t, params);
        CHECK(rendered.find(q.prompt) == 0);  // question leads the prompt
        CHECK(rendered.find(kTemplateSentinel) != std::string::npos);
        for (const char* leftover : {"{question}", "{max_depth}", "{n_children}", "{n_neighbors}"})
            CHECK(rendered.find(leftover) == std::string::npos);
    }

    std::string chain = render_prompt(q, TopologyKind::Chain, params);
    CHECK(chain.find("at most 3 steps") != std::string::npos);

    std::string tree = render_prompt(q, TopologyKind::Tree, params);
    CHECK(tree.find("up to 2 alternative continuations") != std::string::npos);
    CHECK(tree.find("at most 3 levels deep") != std::string::npos);

    std::string graph = render_prompt(q, TopologyKind::Graph, params);
    CHECK(graph.find("up to 4") != std::string::npos);
    CHECK(graph.find("up to 2 continuations") != std::string::npos);
}

TEST_CASE("substituted question text is never re-expanded") {
    Question q = sample_question();
    q.prompt = "literal {max_depth} and {n_children} stay put";
    std::string rendered = render_prompt(q, TopologyKind::Tree, {});
    CHECK(rendered.find("literal {max_depth} and {n_children} stay put") == 0);
}

TEST_CASE("template validation rejects bad placeholder sets") {
    auto body_with = [](const std::string& extra) {
        return "{question} {max_depth} " + extra + std::string(kTemplateSentinel);
    };

    // Chain has no branching knobs.
    CHECK_THROWS_AS(validate_template({TopologyKind::Chain, body_with("{n_neighbors} ")}),
                    MissingTemplate);
    CHECK_THROWS_AS(validate_template({TopologyKind::Chain, body_with("{n_children} ")}),
                    MissingTemplate);
    // Tree needs n_children but must not mention neighbors.
    CHECK_THROWS_AS(validate_template({TopologyKind::Tree, body_with("")}), MissingTemplate);
    CHECK_THROWS_AS(validate_template({TopologyKind::Tree, body_with("{n_children} {n_neighbors} ")}),
                    MissingTemplate);
    // Graph needs everything.
    CHECK_THROWS_AS(validate_template({TopologyKind::Graph, body_with("{n_children} ")}),
                    MissingTemplate);
    CHECK_NOTHROW(validate_template({TopologyKind::Graph, body_with("{n_children} {n_neighbors} ")}));

    // Sentinel: exactly once.
    CHECK_THROWS_AS(validate_template({TopologyKind::Chain, "{question} {max_depth}"}), MissingTemplate);
    CHECK_THROWS_AS(validate_template({TopologyKind::Chain,
                                       "{question} {max_depth} " + std::string(kTemplateSentinel) +
                                           std::string(kTemplateSentinel)}),
                    MissingTemplate);
    // Question placeholder is mandatory everywhere.
    CHECK_THROWS_AS(validate_template({TopologyKind::Chain, "{max_depth} " + std::string(kTemplateSentinel)}),
                    MissingTemplate);
}

TEST_CASE("stripping a rendered prompt recovers the bare question") {
    Question q = sample_question();
    for (auto t : kAllTopologies) {
        std::string rendered = render_prompt(q, t, {});
        CHECK(strip_topology_template(rendered) == q.prompt);
    }
}

TEST_CASE("stripping passes sentinel-free prompts through") {
    CHECK(strip_topology_template("plain question") == "plain question");
    CHECK(strip_topology_template("") == "");
    std::string with = "text   \n\n" + std::string(kTemplateSentinel) + "junk after";
    CHECK(strip_topology_template(with) == "text");
}
