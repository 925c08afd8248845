#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "topoforge/pairs.hpp"

namespace topoforge {

struct TokenOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Matrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(int rows, int cols)
        : n_rows(rows), n_cols(cols), data(static_cast<std::size_t>(rows) * cols, 0.0) {}
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * n_cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * n_cols + c]; }
    bool operator==(const Matrix&) const = default;
};

using TokenSequence = std::vector<int>;

// Bigram softmax policy: logits row r gives the distribution of the next
// token after token r; the extra last row is the begin-of-sequence context.
class ToyPolicy {
public:
    ToyPolicy() = default;
    explicit ToyPolicy(int vocab_size);

    int vocab_size() const { return vocab_; }
    int bos_row() const { return vocab_; }
    int rows() const { return vocab_ + 1; }
    Matrix& logits() { return logits_; }
    const Matrix& logits() const { return logits_; }

    std::vector<double> row_probs(int row) const;   // softmax(θ[row])
    double step_log_prob(int prev, int token) const;  // log softmax(θ[prev])[token]

    bool operator==(const ToyPolicy&) const = default;

private:
    int vocab_ = 0;
    Matrix logits_;
};

struct SimpoConfig {
    double beta = 2.0;
    double gamma = 0.5;
};

struct TokenizedPair {
    std::string context;  // carried through for bookkeeping; the bigram policy ignores it
    TokenSequence winner;
    TokenSequence loser;
};
using PreferenceBatch = std::vector<TokenizedPair>;

// log(1 + e^x) without overflow for large |x|.
double softplus(double x);
double sigmoid(double x);

// (1/T)·Σ_t log P(y_t | y_{t-1}); the first step conditions on BOS.
double sequence_avg_logprob(const ToyPolicy& policy, const TokenSequence& y);

// −Σ_t log P(y_t | y_{t-1}): summed, not length-normalized.
double ntp_loss(const ToyPolicy& policy, const TokenSequence& y);
Matrix ntp_grad(const ToyPolicy& policy, const TokenSequence& y);

// Mean over the batch of softplus(−z), z = β·(avg_w − avg_l) − γ.
double simpo_loss(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg);
Matrix simpo_grad(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg);
// Mean of the raw margins z over the batch.
double mean_margin(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg);

// Central differences (f(θ+h) − f(θ−h)) / 2h per logit entry.
Matrix finite_diff_grad(const std::function<double(const ToyPolicy&)>& loss_fn, ToyPolicy policy,
                        double h);

// Entry-wise |a−b| scaled by max(|a|,|b|); differences at or below abs_floor
// count as zero.
double max_relative_error(const Matrix& a, const Matrix& b, double abs_floor = 1e-10);

struct GradCheckResult {
    double max_rel_err = 0.0;
    int instances = 0;
};
// Random policies/batches: analytic simpo gradients against central
// differences (h = 1e-5) with V ≤ 8, T ≤ 6, β ∈ [0.5,4], γ ∈ [−1,2].
GradCheckResult run_gradient_check(int instances, std::uint64_t seed);

struct TrainMetricsRow {
    long step = 0;
    double loss = 0.0;
    double mean_margin = 0.0;

    bool operator==(const TrainMetricsRow&) const = default;
};

struct TrainResult {
    ToyPolicy policy;
    std::vector<TrainMetricsRow> metrics;  // row 0 = before training, row s = after s updates
};

// Full-batch gradient descent on the simpo loss. Descent over a fixed batch
// is deterministic; the seed is recorded in the interface so stochastic
// extensions stay reproducible.
TrainResult train(ToyPolicy policy, const PreferenceBatch& batch, const SimpoConfig& cfg,
                  long steps, double learning_rate, std::uint64_t seed);

// Argmax rollout of `length` tokens starting from BOS (ties: lowest token id).
TokenSequence greedy_decode(const ToyPolicy& policy, int length);

// Whitespace tokens hashed into [0, vocab_size); text without tokens maps to
// the single hash of the empty string so sequences are never empty.
TokenSequence hash_tokenize(std::string_view text, int vocab_size);
PreferenceBatch batch_from_pairs(const std::vector<PreferencePair>& pairs, int vocab_size);

// Plain-text checkpoint: header lines, then one row of decimals per context.
void save_policy(const std::string& path, const ToyPolicy& policy);
ToyPolicy load_policy(const std::string& path);

std::string metrics_csv(const std::vector<TrainMetricsRow>& rows);

}  // namespace topoforge
