#include "topoforge/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "topoforge/analytics.hpp"
#include "topoforge/genclient.hpp"
#include "topoforge/labeling.hpp"
#include "topoforge/pairs.hpp"
#include "topoforge/simpo.hpp"
#include "topoforge/text.hpp"

namespace topoforge::cli {

namespace {

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::string default_errors_path(const std::string& out_path) {
    const std::string suffix = ".jsonl";
    if (out_path.size() > suffix.size() && out_path.ends_with(suffix))
        return out_path.substr(0, out_path.size() - suffix.size()) + ".errors.jsonl";
    return out_path + ".errors.jsonl";
}

// --------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string questions;
    std::string out;
    std::string errors_out;  // empty: derived from out
    std::vector<std::string> topologies{"chain", "tree", "graph"};
    bool resume = false;
    GenConfig cfg;
};

int run_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
    if (std::filesystem::exists(a.out) && !a.resume)
        throw ValidationError("output file '" + a.out +
                              "' already exists; pass --resume to rerun from the cache");
    std::vector<TopologyKind> kinds;
    for (const auto& name : a.topologies) {
        auto t = topology_from_string(name);
        if (!t) throw ValidationError("unknown topology '" + name + "'");
        kinds.push_back(*t);
    }

    const std::vector<Question> questions = read_questions(a.questions);
    const GenerationResult result = run_pipeline(questions, a.cfg, kinds);

    const std::string errors_path =
        a.errors_out.empty() ? default_errors_path(a.out) : a.errors_out;
    write_records(a.out, result.records);
    write_jsonl(errors_path, result.errors);

    out << "wrote " << result.records.size() << " records to " << a.out << " ("
        << result.errors.size() << " failed cells -> " << errors_path << ")\n";
    out << "cells: " << result.stats.cells_total << " total, " << result.stats.cache_hits
        << " from cache, " << result.stats.cells_fetched << " fetched\n";
    if (result.stats.partial_failure()) {
        err << "error: more than 10% of cells failed\n";
        return 2;
    }
    return 0;
}

// --------------------------------------------------------------------------
// label

struct LabelArgs {
    std::string in;
    std::string questions;
    std::string out;
};

int run_label(const LabelArgs& a, std::ostream& out, std::ostream& err) {
    const auto questions = read_questions(a.questions);
    const auto records = read_records(a.in);
    const LabelBuildResult result = build_question_labels(questions, records);
    print_warnings(result.warnings, err);
    write_labels(a.out, result.labels);
    out << "wrote " << result.labels.size() << " label rows to " << a.out << '\n';
    return 0;
}

// --------------------------------------------------------------------------
// segment

struct SegmentArgs {
    std::string in;
    std::string out;
    double q_hi = 0.85;
    double q_lo = 0.15;
};

int run_segment(const SegmentArgs& a, std::ostream& out, std::ostream&) {
    std::vector<QuestionLabels> labels = read_labels(a.in);
    const SegmentationResult seg = segment_difficulty(labels, a.q_hi, a.q_lo);
    apply_difficulty(labels, seg);
    write_labels(a.out, labels);

    std::array<long, 3> counts{};
    for (const auto& [id, d] : seg.difficulty) ++counts[static_cast<std::size_t>(d)];
    out << "segmented " << labels.size() << " questions: easy " << counts[0] << ", medium "
        << counts[1] << ", hard " << counts[2] << '\n';
    return 0;
}

// --------------------------------------------------------------------------
// analyze / report

struct AnalyzeArgs {
    std::string in;
    std::string questions;
    std::string labels;
    std::string out_dir;
};

int run_analyze(const AnalyzeArgs& a, bool with_summary, std::ostream& out, std::ostream&) {
    const auto questions = read_questions(a.questions);
    auto records = read_records(a.in);
    const auto labels = read_labels(a.labels);
    apply_outcomes(records, questions);

    const WinRateReport win = win_rate(labels);
    const auto acc = subject_accuracy(records, questions);
    const auto lengths = length_stats(records);
    const auto fractions = topology_fractions(records, questions);

    std::filesystem::create_directories(a.out_dir);
    const auto path = [&](const char* name) { return a.out_dir + "/" + name; };
    write_file_atomic(path("win_rate.csv"), win_rate_csv(win));
    write_file_atomic(path("subject_accuracy.csv"), subject_accuracy_csv(acc));
    write_file_atomic(path("length_stats.csv"), length_stats_csv(lengths));
    write_file_atomic(path("topology_fractions.csv"), topology_fractions_csv(fractions));
    int n_files = 4;
    if (with_summary) {
        write_file_atomic(path("summary.txt"), summary_text(win, acc, lengths, fractions));
        n_files = 5;
    }
    out << "wrote " << n_files << " report files to " << a.out_dir << '\n';
    return 0;
}

// --------------------------------------------------------------------------
// build-sft

struct SftArgs {
    std::string in;
    std::string questions;
    std::string labels;
    std::string out;
    SftConfig cfg;
};

int run_build_sft(const SftArgs& a, std::ostream& out, std::ostream& err) {
    const auto questions = read_questions(a.questions);
    const auto records = read_records(a.in);
    const auto labels = read_labels(a.labels);
    const SftBuildResult result =
        build_sft(questions, records, labels, make_stub_scorer(labels), a.cfg);
    print_warnings(result.warnings, err);
    write_sft_records(a.out, result.records);
    out << "wrote " << result.records.size() << " tuning records to " << a.out << '\n';
    return 0;
}

// --------------------------------------------------------------------------
// build-pairs

struct PairsArgs {
    std::string in;
    std::string questions;
    std::string out;
    std::string variant = "standard";
    long max_pairs = 4;
    double length_quantile = 0.25;
};

int run_build_pairs(const PairsArgs& a, std::ostream& out, std::ostream&) {
    const auto questions = read_questions(a.questions);
    const auto records = read_records(a.in);
    std::vector<PreferencePair> pairs;
    switch (variant_from_string(a.variant)) {
        case PairVariant::Standard:
            pairs = build_pref_standard(questions, records, a.max_pairs);
            break;
        case PairVariant::FrugalV1:
            pairs = build_pref_frugal_v1(questions, records, a.length_quantile, a.max_pairs);
            break;
        case PairVariant::FrugalV2:
            pairs = build_pref_frugal_v2(questions, records, a.length_quantile, a.max_pairs);
            break;
    }
    write_pairs(a.out, pairs);
    out << "wrote " << pairs.size() << " " << a.variant << " pairs to " << a.out << '\n';
    return 0;
}

// --------------------------------------------------------------------------
// simpo-check / simpo-train

struct CheckArgs {
    int instances = 120;
};

int run_simpo_check(const CheckArgs& a, std::uint64_t seed, std::ostream& out, std::ostream&) {
    const GradCheckResult result = run_gradient_check(a.instances, seed);
    out << "max relative error " << format_double(result.max_rel_err) << " over "
        << result.instances << " instances\n";
    return result.max_rel_err <= 1e-6 ? 0 : 1;
}

struct TrainArgs {
    std::string pairs;
    std::string out_metrics;
    std::string out_policy;  // optional
    int vocab = 64;
    SimpoConfig cfg;
    double lr = 0.1;
    long steps = 500;
};

int run_simpo_train(const TrainArgs& a, std::uint64_t seed, std::ostream& out, std::ostream&) {
    const auto pairs = read_pairs(a.pairs);
    const PreferenceBatch batch = batch_from_pairs(pairs, a.vocab);
    const TrainResult result = train(ToyPolicy(a.vocab), batch, a.cfg, a.steps, a.lr, seed);
    write_file_atomic(a.out_metrics, metrics_csv(result.metrics));
    if (!a.out_policy.empty()) save_policy(a.out_policy, result.policy);

    const TrainMetricsRow& last = result.metrics.back();
    out << "trained " << a.steps << " steps on " << pairs.size() << " pairs: loss "
        << format_double(last.loss) << ", mean margin " << format_double(last.mean_margin)
        << '\n';
    out << "metrics -> " << a.out_metrics;
    if (!a.out_policy.empty()) out << ", policy -> " << a.out_policy;
    out << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reasoning-trace dataset toolchain: sample traces from a chat endpoint,"
                 " label and segment them, and package tuning and preference datasets."};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.set_config("--config", "",
                   "configuration file; sections like [generate] hold per-subcommand options");

    std::uint64_t seed = 2026;
    app.add_option("--seed", seed, "seed for the toy-policy subcommands")->capture_default_str();

    int exit_code = 0;

    GenerateArgs gen;
    auto* generate = app.add_subcommand(
        "generate", "sample responses for every question/topology/sample cell");
    generate->add_option("--questions", gen.questions, "questions JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    generate->add_option("--out", gen.out, "responses JSONL output path")->required();
    generate->add_option("--errors-out", gen.errors_out,
                         "failed-cell sidecar path (default: <out>.errors.jsonl)");
    generate->add_option("--topologies", gen.topologies, "comma-separated subset of chain,tree,graph")
        ->delimiter(',')
        ->capture_default_str();
    generate->add_flag("--resume", gen.resume,
                       "allow an existing output file; cells replay from the cache");
    generate->add_option("--base-url", gen.cfg.base_url, "chat-completions server")
        ->capture_default_str();
    generate->add_option("--api-key-env", gen.cfg.api_key_env_name,
                         "environment variable holding the bearer token")
        ->capture_default_str();
    generate->add_option("--model", gen.cfg.model_name, "model name sent with each request")
        ->capture_default_str();
    generate->add_option("--temperature", gen.cfg.temperature, "sampling temperature")
        ->capture_default_str();
    generate->add_option("--samples", gen.cfg.n_samples_per_topology,
                         "samples per question/topology cell")
        ->capture_default_str();
    generate->add_option("--max-tokens", gen.cfg.max_tokens, "response token budget")
        ->capture_default_str();
    generate->add_option("--concurrency", gen.cfg.concurrency_limit,
                         "maximum in-flight requests")
        ->capture_default_str();
    generate->add_option("--cache-dir", gen.cfg.cache_dir, "content-addressed response cache")
        ->capture_default_str();
    generate->add_option("--max-depth", gen.cfg.topology_params.max_depth,
                         "depth budget quoted in prompts")
        ->capture_default_str();
    generate->add_option("--n-children", gen.cfg.topology_params.n_children,
                         "branching budget quoted in tree/graph prompts")
        ->capture_default_str();
    generate->add_option("--n-neighbors", gen.cfg.topology_params.n_neighbors,
                         "cross-link budget quoted in graph prompts")
        ->capture_default_str();
    generate->add_option("--retry-base-ms", gen.cfg.retry_base_ms,
                         "base delay of the exponential backoff")
        ->capture_default_str();
    generate->add_option("--max-attempts", gen.cfg.max_attempts, "attempts per cell")
        ->capture_default_str();
    generate->callback([&] { exit_code = run_generate(gen, out, err); });

    LabelArgs lab;
    auto* label = app.add_subcommand("label", "score responses and aggregate per-question labels");
    label->add_option("--in", lab.in, "responses JSONL file")->required()->check(CLI::ExistingFile);
    label->add_option("--questions", lab.questions, "questions JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    label->add_option("--out", lab.out, "labels JSONL output path")->required();
    label->callback([&] { exit_code = run_label(lab, out, err); });

    SegmentArgs seg;
    auto* segment = app.add_subcommand("segment", "assign difficulty tiers to labeled questions");
    segment->add_option("--in", seg.in, "labels JSONL file")->required()->check(CLI::ExistingFile);
    segment->add_option("--out", seg.out, "labels JSONL output path with difficulty filled")
        ->required();
    segment->add_option("--q-hi", seg.q_hi, "upper accuracy quantile (easy above it)")
        ->capture_default_str();
    segment->add_option("--q-lo", seg.q_lo, "lower accuracy quantile (hard below it)")
        ->capture_default_str();
    segment->callback([&] { exit_code = run_segment(seg, out, err); });

    AnalyzeArgs ana;
    const auto add_analyze_flags = [&](CLI::App* cmd) {
        cmd->add_option("--in", ana.in, "responses JSONL file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--questions", ana.questions, "questions JSONL file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--labels", ana.labels, "labels JSONL file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out-dir", ana.out_dir, "directory for the CSV reports")->required();
    };
    auto* analyze = app.add_subcommand("analyze", "write win-rate, accuracy, length, and mix CSVs");
    add_analyze_flags(analyze);
    analyze->callback([&] { exit_code = run_analyze(ana, false, out, err); });
    auto* report = app.add_subcommand("report", "analyze plus a human-readable summary file");
    add_analyze_flags(report);
    report->callback([&] { exit_code = run_analyze(ana, true, out, err); });

    SftArgs sft;
    auto* build_sft_cmd = app.add_subcommand("build-sft", "package top responses for tuning");
    build_sft_cmd->add_option("--in", sft.in, "responses JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    build_sft_cmd->add_option("--questions", sft.questions, "questions JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    build_sft_cmd->add_option("--labels", sft.labels, "segmented labels JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    build_sft_cmd->add_option("--out", sft.out, "tuning records JSONL output path")->required();
    build_sft_cmd->add_option("--quota-easy", sft.cfg.per_tier_quota[0], "easy-tier question quota")
        ->capture_default_str();
    build_sft_cmd
        ->add_option("--quota-medium", sft.cfg.per_tier_quota[1], "medium-tier question quota")
        ->capture_default_str();
    build_sft_cmd->add_option("--quota-hard", sft.cfg.per_tier_quota[2], "hard-tier question quota")
        ->capture_default_str();
    build_sft_cmd->add_option("--keep-top-m", sft.cfg.keep_top_m, "responses kept per question")
        ->capture_default_str();
    build_sft_cmd->callback([&] { exit_code = run_build_sft(sft, out, err); });

    PairsArgs prs;
    auto* build_pairs_cmd = app.add_subcommand("build-pairs", "package preference pairs");
    build_pairs_cmd->add_option("--in", prs.in, "responses JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    build_pairs_cmd->add_option("--questions", prs.questions, "questions JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    build_pairs_cmd->add_option("--out", prs.out, "preference pairs JSONL output path")->required();
    build_pairs_cmd->add_option("--variant", prs.variant, "pairing rule")
        ->check(CLI::IsMember({"standard", "frugal_v1", "frugal_v2"}))
        ->capture_default_str();
    build_pairs_cmd->add_option("--max-pairs", prs.max_pairs, "pair cap per question")
        ->capture_default_str();
    build_pairs_cmd
        ->add_option("--length-quantile", prs.length_quantile,
                     "corpus length quantile bounding frugal winners")
        ->capture_default_str();
    build_pairs_cmd->callback([&] { exit_code = run_build_pairs(prs, out, err); });

    CheckArgs chk;
    auto* simpo_check =
        app.add_subcommand("simpo-check", "verify analytic gradients against finite differences");
    simpo_check->add_option("--instances", chk.instances, "random instances to test")
        ->capture_default_str();
    simpo_check->callback([&] { exit_code = run_simpo_check(chk, seed, out, err); });

    TrainArgs trn;
    auto* simpo_train =
        app.add_subcommand("simpo-train", "train the toy policy on packaged preference pairs");
    simpo_train->add_option("--pairs", trn.pairs, "preference pairs JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    simpo_train->add_option("--out-metrics", trn.out_metrics, "per-step metrics CSV output path")
        ->required();
    simpo_train->add_option("--out-policy", trn.out_policy, "trained policy checkpoint path");
    simpo_train->add_option("--vocab", trn.vocab, "hashed token vocabulary size")
        ->capture_default_str();
    simpo_train->add_option("--beta", trn.cfg.beta, "margin scale")->capture_default_str();
    simpo_train->add_option("--gamma", trn.cfg.gamma, "target margin")->capture_default_str();
    simpo_train->add_option("--lr", trn.lr, "learning rate")->capture_default_str();
    simpo_train->add_option("--steps", trn.steps, "full-batch descent steps")
        ->capture_default_str();
    simpo_train->callback([&] { exit_code = run_simpo_train(trn, seed, out, err); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;  // usage problems collapse to exit 1
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace topoforge::cli
