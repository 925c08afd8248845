#include "topoforge/analytics.hpp"

#include <map>
#include <unordered_map>

#include "topoforge/text.hpp"

namespace topoforge {

WinRateReport win_rate(const std::vector<QuestionLabels>& labels) {
    if (labels.empty()) throw EmptyCorpus();
    // Credit in sixths: a k-way tie awards 6/k to each winner, so totals stay
    // integral and symmetric ties divide out to exact thirds.
    std::array<long, 3> sixths{0, 0, 0};
    for (const auto& l : labels) {
        double best = l.scores[0].value;
        for (int i = 1; i < 3; ++i) best = std::max(best, l.scores[i].value);
        int k = 0;
        for (int i = 0; i < 3; ++i)
            if (l.scores[i].value == best) ++k;
        for (int i = 0; i < 3; ++i)
            if (l.scores[i].value == best) sixths[i] += 6 / k;
    }
    WinRateReport report;
    report.n_questions = static_cast<long>(labels.size());
    for (int i = 0; i < 3; ++i)
        report.rate[i] = static_cast<double>(sixths[i]) /
                         (6.0 * static_cast<double>(report.n_questions));
    report.tie_policy_note = "k-way ties split win credit 1/k per tied topology";
    return report;
}

std::vector<SubjectAccuracyRow> subject_accuracy(const std::vector<GenerationRecord>& records,
                                                 const std::vector<Question>& questions) {
    std::unordered_map<std::string_view, const Question*> by_id;
    for (const auto& q : questions) by_id.emplace(q.id, &q);

    std::map<std::pair<std::string, int>, std::array<long, 2>> cells;  // (subject, topo) -> [correct, n]
    for (const auto& r : records) {
        auto qit = by_id.find(r.question_id);
        if (qit == by_id.end()) continue;
        auto topo = r.label_topology();
        if (!topo || !r.outcome) continue;
        auto& cell = cells[{qit->second->subject, topology_index(*topo)}];
        cell[0] += *r.outcome;
        cell[1] += 1;
    }
    std::vector<SubjectAccuracyRow> rows;
    rows.reserve(cells.size());
    for (const auto& [key, cell] : cells)
        rows.push_back({key.first, static_cast<TopologyKind>(key.second),
                        static_cast<double>(cell[0]) / static_cast<double>(cell[1]), cell[1]});
    return rows;
}

std::vector<LengthStatsRow> length_stats(const std::vector<GenerationRecord>& records) {
    std::array<std::vector<double>, 3> lengths;
    for (const auto& r : records) {
        auto topo = r.label_topology();
        if (!topo) continue;
        lengths[topology_index(*topo)].push_back(static_cast<double>(r.token_length));
    }
    std::vector<LengthStatsRow> rows;
    for (TopologyKind t : kAllTopologies) {
        auto& ls = lengths[topology_index(t)];
        if (ls.empty()) continue;
        double sum = 0.0;
        for (double v : ls) sum += v;
        LengthStatsRow row;
        row.topology = t;
        row.n = static_cast<long>(ls.size());
        row.mean = sum / static_cast<double>(ls.size());
        row.median = quantile(ls, 0.5);
        row.q25 = quantile(ls, 0.25);
        row.q75 = quantile(ls, 0.75);
        rows.push_back(row);
    }
    return rows;
}

std::vector<TopologyFractionRow> topology_fractions(const std::vector<GenerationRecord>& records,
                                                    const std::vector<Question>& questions) {
    std::unordered_map<std::string_view, const Question*> by_id;
    for (const auto& q : questions) by_id.emplace(q.id, &q);

    std::map<std::string, std::array<long, 4>> splits;  // counts per topology + total
    for (const auto& r : records) {
        if (!r.classified_topology) continue;
        auto qit = by_id.find(r.question_id);
        if (qit == by_id.end()) continue;
        auto& counts = splits[qit->second->dataset];
        counts[topology_index(*r.classified_topology)] += 1;
        counts[3] += 1;
    }
    std::vector<TopologyFractionRow> rows;
    for (const auto& [split, counts] : splits)
        for (TopologyKind t : kAllTopologies)
            rows.push_back({split, t,
                            static_cast<double>(counts[topology_index(t)]) /
                                static_cast<double>(counts[3])});
    return rows;
}

// ---------------------------------------------------------------------------
// Report rendering

std::string win_rate_csv(const WinRateReport& report) {
    std::string out = "topology,rate,n\n";
    for (TopologyKind t : kAllTopologies) {
        out += to_string(t);
        out += ',';
        out += format_double(report.rate[topology_index(t)]);
        out += ',';
        out += std::to_string(report.n_questions);
        out += '\n';
    }
    return out;
}

std::string subject_accuracy_csv(const std::vector<SubjectAccuracyRow>& rows) {
    std::string out = "subject,topology,accuracy,n\n";
    for (const auto& r : rows) {
        out += r.subject;
        out += ',';
        out += to_string(r.topology);
        out += ',';
        out += format_double(r.accuracy);
        out += ',';
        out += std::to_string(r.n);
        out += '\n';
    }
    return out;
}

std::string length_stats_csv(const std::vector<LengthStatsRow>& rows) {
    std::string out = "topology,mean,median,q25,q75,n\n";
    for (const auto& r : rows) {
        out += to_string(r.topology);
        out += ',';
        out += format_double(r.mean);
        out += ',';
        out += format_double(r.median);
        out += ',';
        out += format_double(r.q25);
        out += ',';
        out += format_double(r.q75);
        out += ',';
        out += std::to_string(r.n);
        out += '\n';
    }
    return out;
}

std::string topology_fractions_csv(const std::vector<TopologyFractionRow>& rows) {
    std::string out = "split,topology,fraction\n";
    for (const auto& r : rows) {
        out += r.split;
        out += ',';
        out += to_string(r.topology);
        out += ',';
        out += format_double(r.fraction);
        out += '\n';
    }
    return out;
}

std::string summary_text(const WinRateReport& win, const std::vector<SubjectAccuracyRow>& acc,
                         const std::vector<LengthStatsRow>& lengths,
                         const std::vector<TopologyFractionRow>& fractions) {
    std::string out;
    out += "== Win rate (" + std::to_string(win.n_questions) + " questions) ==\n";
    for (TopologyKind t : kAllTopologies) {
        out += "  " + std::string(to_string(t)) + ": " +
               format_double(win.rate[topology_index(t)]) + "\n";
    }
    out += "  note: " + win.tie_policy_note + "\n";

    out += "\n== Accuracy by subject ==\n";
    for (const auto& r : acc)
        out += "  " + r.subject + " / " + std::string(to_string(r.topology)) + ": " +
               format_double(r.accuracy) + " (n=" + std::to_string(r.n) + ")\n";

    out += "\n== Generation length (tokens) ==\n";
    for (const auto& r : lengths)
        out += "  " + std::string(to_string(r.topology)) + ": mean " + format_double(r.mean) +
               ", median " + format_double(r.median) + ", q25 " + format_double(r.q25) + ", q75 " +
               format_double(r.q75) + " (n=" + std::to_string(r.n) + ")\n";

    out += "\n== Classified topology share by split ==\n";
    for (const auto& r : fractions)
        out += "  " + r.split + " / " + std::string(to_string(r.topology)) + ": " +
               format_double(r.fraction) + "\n";
    return out;
}

}  // namespace topoforge
