#pragma once

// Test-side trace generator and an independent topology oracle. The oracle
// deliberately uses a different algorithm (Kahn's indegree elimination) than
// the production classifier so the two can cross-check each other.

#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "topoforge/trace.hpp"

namespace testsupport {

inline std::string random_id(std::mt19937& rng, std::unordered_set<std::string>& used) {
    static constexpr char alphabet[] =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    std::uniform_int_distribution<int> len_d(1, 6);
    std::uniform_int_distribution<int> ch_d(0, static_cast<int>(sizeof(alphabet)) - 2);
    while (true) {
        std::string id;
        int len = len_d(rng);
        for (int i = 0; i < len; ++i) id += alphabet[ch_d(rng)];
        if (used.insert(id).second) return id;
    }
}

inline std::string random_text(std::mt19937& rng) {
    static constexpr char chars[] = "abcdefghijklmnopqrstuvwxyz 0123456789.,:;()+-*/=";
    std::uniform_int_distribution<int> len_d(0, 30);
    std::uniform_int_distribution<int> ch_d(0, static_cast<int>(sizeof(chars)) - 2);
    int len = len_d(rng);
    std::string text;
    for (int i = 0; i < len; ++i) text += chars[ch_d(rng)];
    return text;
}

// Generates a structurally valid trace: chains, trees, forests, DAGs with
// multi-parent nodes, parent cycles, and cross-linked trees all occur.
inline topoforge::ReasoningTrace random_trace(std::mt19937& rng) {
    using topoforge::ReasoningTrace;
    using topoforge::TraceNode;

    int n = std::uniform_int_distribution<int>(1, 8)(rng);
    std::unordered_set<std::string> used;
    std::vector<std::string> ids;
    ids.reserve(n);
    for (int i = 0; i < n; ++i) ids.push_back(random_id(rng, used));

    std::vector<std::vector<int>> parents(n);
    int shape = std::uniform_int_distribution<int>(0, 5)(rng);
    auto earlier = [&](int i) { return std::uniform_int_distribution<int>(0, i - 1)(rng); };
    switch (shape) {
        case 0:  // chain
            for (int i = 1; i < n; ++i) parents[i] = {i - 1};
            break;
        case 1:  // tree
            for (int i = 1; i < n; ++i) parents[i] = {earlier(i)};
            break;
        case 2:  // forest (some extra roots)
            for (int i = 1; i < n; ++i)
                if (rng() % 2) parents[i] = {earlier(i)};
            break;
        case 3:  // DAG, occasionally multi-parent (duplicates count as edges)
            for (int i = 1; i < n; ++i) {
                parents[i] = {earlier(i)};
                if (i >= 2 && rng() % 2) parents[i].push_back(earlier(i));
                if (rng() % 8 == 0) parents[i].push_back(parents[i][0]);
            }
            break;
        case 4:  // parent cycle over the first k nodes (forward references)
            if (n >= 2) {
                int k = std::uniform_int_distribution<int>(2, n)(rng);
                for (int i = 0; i < k; ++i) parents[i] = {(i + 1) % k};
                for (int i = k; i < n; ++i) parents[i] = {earlier(i)};
            }
            break;
        case 5:  // tree plus auxiliary links (added below)
            for (int i = 1; i < n; ++i) parents[i] = {earlier(i)};
            break;
    }

    ReasoningTrace trace;
    for (int i = 0; i < n; ++i) {
        TraceNode node;
        node.id = ids[i];
        node.text = random_text(rng);
        for (int p : parents[i]) node.parents.push_back(ids[p]);
        trace.nodes.push_back(std::move(node));
    }
    if (shape == 5 && n >= 2) {
        int m = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int e = 0; e < m; ++e) {
            int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
            int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
            trace.links.emplace_back(ids[a], ids[b]);
        }
    }

    switch (rng() % 4) {
        case 0: trace.declared_topology = topoforge::TopologyKind::Chain; break;
        case 1: trace.declared_topology = topoforge::TopologyKind::Tree; break;
        case 2: trace.declared_topology = topoforge::TopologyKind::Graph; break;
        default: break;  // leave undeclared
    }
    switch (rng() % 3) {
        case 0: trace.answer = random_text(rng); break;
        case 1: trace.answer = ""; break;
        default: break;
    }
    return trace;
}

// Independent classification: multigraph semantics (each parent entry is one
// edge), cycle detection by Kahn's algorithm instead of DFS coloring.
inline topoforge::TopologyKind oracle_classify(const topoforge::ReasoningTrace& trace) {
    using topoforge::TopologyKind;
    if (!trace.links.empty()) return TopologyKind::Graph;

    const int n = static_cast<int>(trace.nodes.size());
    std::unordered_map<std::string, int> idx;
    for (int i = 0; i < n; ++i) idx[trace.nodes[i].id] = i;

    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i) {
        indeg[i] = static_cast<int>(trace.nodes[i].parents.size());
        if (indeg[i] >= 2) return TopologyKind::Graph;
        for (const auto& p : trace.nodes[i].parents) children[idx.at(p)].push_back(i);
    }

    std::queue<int> ready;
    int roots = 0;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) {
            ready.push(i);
            ++roots;
        }
    std::vector<int> work = indeg;
    int processed = 0;
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop();
        ++processed;
        for (int c : children[v])
            if (--work[c] == 0) ready.push(c);
    }
    if (processed < n) return TopologyKind::Graph;  // leftover nodes sit on a cycle

    for (const auto& c : children)
        if (c.size() >= 2) return TopologyKind::Tree;
    if (roots > 1) return TopologyKind::Tree;
    return TopologyKind::Chain;
}

}  // namespace testsupport
