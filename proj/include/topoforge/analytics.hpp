#pragma once

#include <array>
#include <string>
#include <vector>

#include "topoforge/labeling.hpp"
#include "topoforge/records.hpp"

namespace topoforge {

struct EmptyCorpus : std::runtime_error {
    EmptyCorpus() : std::runtime_error("analytics over an empty corpus") {}
};

struct WinRateReport {
    std::array<double, 3> rate{};  // indexed by topology_index()
    long n_questions = 0;
    std::string tie_policy_note;
};

struct SubjectAccuracyRow {
    std::string subject;
    TopologyKind topology;
    double accuracy = 0.0;
    long n = 0;
    bool operator==(const SubjectAccuracyRow&) const = default;
};

struct LengthStatsRow {
    TopologyKind topology;
    double mean = 0.0, median = 0.0, q25 = 0.0, q75 = 0.0;
    long n = 0;
};

struct TopologyFractionRow {
    std::string split;
    TopologyKind topology;
    double fraction = 0.0;
    bool operator==(const TopologyFractionRow&) const = default;
};

// Per-topology share of questions where it attains the best F; k-way ties
// split the credit 1/k. Credit is accumulated in integer sixths (lcm of
// 1, 2, 3) so symmetric ties produce exact thirds. Throws EmptyCorpus.
WinRateReport win_rate(const std::vector<QuestionLabels>& labels);

// Accuracy per (subject, topology) cell over labeled records; empty cells
// are omitted. Records without a usable topology or outcome are skipped.
std::vector<SubjectAccuracyRow> subject_accuracy(const std::vector<GenerationRecord>& records,
                                                 const std::vector<Question>& questions);

// Token-length mean/median/q25/q75 per topology group (declared topology,
// else classified); groups with no records are omitted.
std::vector<LengthStatsRow> length_stats(const std::vector<GenerationRecord>& records);

// Share of classified topologies per dataset split; records with no
// classified topology are skipped. All three topology rows are emitted for
// every split so fractions visibly sum to 1.
std::vector<TopologyFractionRow> topology_fractions(const std::vector<GenerationRecord>& records,
                                                    const std::vector<Question>& questions);

// CSV renderings (header + rows, '\n' line endings, shortest round-trip
// number formatting).
std::string win_rate_csv(const WinRateReport& report);
std::string subject_accuracy_csv(const std::vector<SubjectAccuracyRow>& rows);
std::string length_stats_csv(const std::vector<LengthStatsRow>& rows);
std::string topology_fractions_csv(const std::vector<TopologyFractionRow>& rows);

// Human-readable digest of all four reports for report/summary output.
std::string summary_text(const WinRateReport& win, const std::vector<SubjectAccuracyRow>& acc,
                         const std::vector<LengthStatsRow>& lengths,
                         const std::vector<TopologyFractionRow>& fractions);

}  // namespace topoforge
