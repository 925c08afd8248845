#include "topoforge/simpo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "topoforge/io.hpp"
#include "topoforge/text.hpp"

namespace topoforge {

namespace {

void check_tokens(const ToyPolicy& policy, const TokenSequence& y) {
    if (y.empty()) throw TokenOutOfRange("token sequence must not be empty");
    for (int tok : y) {
        if (tok < 0 || tok >= policy.vocab_size())
            throw TokenOutOfRange("token " + std::to_string(tok) + " outside vocab of " +
                                  std::to_string(policy.vocab_size()));
    }
}

void check_batch(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg) {
    if (batch.empty()) throw EmptyDataset("preference batch is empty");
    if (!(cfg.beta > 0)) throw ValidationError("beta must be positive");
    for (const auto& pair : batch) {
        check_tokens(policy, pair.winner);
        check_tokens(policy, pair.loser);
    }
}

double pair_margin(const ToyPolicy& policy, const TokenizedPair& pair, const SimpoConfig& cfg) {
    return cfg.beta * (sequence_avg_logprob(policy, pair.winner) -
                       sequence_avg_logprob(policy, pair.loser)) -
           cfg.gamma;
}

// Adds c · ∂avg_logprob(y)/∂θ into g.
void add_avg_logprob_grad(const ToyPolicy& policy, const TokenSequence& y, double c, Matrix& g) {
    const double inv_t = 1.0 / static_cast<double>(y.size());
    int prev = policy.bos_row();
    for (int tok : y) {
        const std::vector<double> probs = policy.row_probs(prev);
        for (int k = 0; k < policy.vocab_size(); ++k) {
            const double indicator = k == tok ? 1.0 : 0.0;
            g.at(prev, k) += c * inv_t * (indicator - probs[k]);
        }
        prev = tok;
    }
}

}  // namespace

ToyPolicy::ToyPolicy(int vocab_size) : vocab_(vocab_size) {
    if (vocab_size < 1) throw ValidationError("vocab size must be positive");
    logits_ = Matrix(vocab_size + 1, vocab_size);
}

std::vector<double> ToyPolicy::row_probs(int row) const {
    std::vector<double> probs(static_cast<std::size_t>(vocab_));
    double max_logit = logits_.at(row, 0);
    for (int k = 1; k < vocab_; ++k) max_logit = std::max(max_logit, logits_.at(row, k));
    double total = 0.0;
    for (int k = 0; k < vocab_; ++k) {
        probs[static_cast<std::size_t>(k)] = std::exp(logits_.at(row, k) - max_logit);
        total += probs[static_cast<std::size_t>(k)];
    }
    for (double& p : probs) p /= total;
    return probs;
}

double ToyPolicy::step_log_prob(int prev, int token) const {
    double max_logit = logits_.at(prev, 0);
    for (int k = 1; k < vocab_; ++k) max_logit = std::max(max_logit, logits_.at(prev, k));
    double total = 0.0;
    for (int k = 0; k < vocab_; ++k) total += std::exp(logits_.at(prev, k) - max_logit);
    return logits_.at(prev, token) - max_logit - std::log(total);
}

double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sequence_avg_logprob(const ToyPolicy& policy, const TokenSequence& y) {
    check_tokens(policy, y);
    double sum = 0.0;
    int prev = policy.bos_row();
    for (int tok : y) {
        sum += policy.step_log_prob(prev, tok);
        prev = tok;
    }
    return sum / static_cast<double>(y.size());
}

double ntp_loss(const ToyPolicy& policy, const TokenSequence& y) {
    check_tokens(policy, y);
    double sum = 0.0;
    int prev = policy.bos_row();
    for (int tok : y) {
        sum += policy.step_log_prob(prev, tok);
        prev = tok;
    }
    return -sum;
}

Matrix ntp_grad(const ToyPolicy& policy, const TokenSequence& y) {
    check_tokens(policy, y);
    Matrix g(policy.rows(), policy.vocab_size());
    // ntp_loss = −T · avg_logprob, so reuse the average-gradient accumulator.
    add_avg_logprob_grad(policy, y, -static_cast<double>(y.size()), g);
    return g;
}

double simpo_loss(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg) {
    check_batch(policy, batch, cfg);
    double total = 0.0;
    for (const auto& pair : batch) total += softplus(-pair_margin(policy, pair, cfg));
    return total / static_cast<double>(batch.size());
}

double mean_margin(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg) {
    check_batch(policy, batch, cfg);
    double total = 0.0;
    for (const auto& pair : batch) total += pair_margin(policy, pair, cfg);
    return total / static_cast<double>(batch.size());
}

Matrix simpo_grad(const ToyPolicy& policy, const PreferenceBatch& batch, const SimpoConfig& cfg) {
    check_batch(policy, batch, cfg);
    Matrix g(policy.rows(), policy.vocab_size());
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& pair : batch) {
        // d softplus(−z)/dz = −σ(−z); z depends on θ through the two averages.
        const double weight = sigmoid(-pair_margin(policy, pair, cfg)) * cfg.beta * inv_b;
        add_avg_logprob_grad(policy, pair.loser, weight, g);
        add_avg_logprob_grad(policy, pair.winner, -weight, g);
    }
    return g;
}

Matrix finite_diff_grad(const std::function<double(const ToyPolicy&)>& loss_fn, ToyPolicy policy,
                        double h) {
    if (!(h > 0)) throw ValidationError("finite-difference step must be positive");
    Matrix g(policy.rows(), policy.vocab_size());
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double original = policy.logits().data[i];
        policy.logits().data[i] = original + h;
        const double up = loss_fn(policy);
        policy.logits().data[i] = original - h;
        const double down = loss_fn(policy);
        policy.logits().data[i] = original;
        g.data[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double max_relative_error(const Matrix& a, const Matrix& b, double abs_floor) {
    if (a.n_rows != b.n_rows || a.n_cols != b.n_cols)
        throw ValidationError("gradient shapes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double diff = std::abs(a.data[i] - b.data[i]);
        if (diff <= abs_floor) continue;
        const double scale = std::max(std::abs(a.data[i]), std::abs(b.data[i]));
        worst = std::max(worst, diff / scale);
    }
    return worst;
}

GradCheckResult run_gradient_check(int instances, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logit_dist(-2.0, 2.0);
    std::uniform_real_distribution<double> beta_dist(0.5, 4.0);
    std::uniform_real_distribution<double> gamma_dist(-1.0, 2.0);

    GradCheckResult result;
    for (int i = 0; i < instances; ++i) {
        const int vocab = 2 + static_cast<int>(rng() % 7);  // ≤ 8
        ToyPolicy policy(vocab);
        for (double& v : policy.logits().data) v = logit_dist(rng);

        SimpoConfig cfg{beta_dist(rng), gamma_dist(rng)};
        PreferenceBatch batch(1 + rng() % 4);
        for (auto& pair : batch) {
            auto random_seq = [&] {
                TokenSequence y(1 + rng() % 6);  // ≤ 6
                for (int& tok : y) tok = static_cast<int>(rng() % vocab);
                return y;
            };
            pair.winner = random_seq();
            pair.loser = random_seq();
        }

        const Matrix analytic = simpo_grad(policy, batch, cfg);
        const Matrix numeric = finite_diff_grad(
            [&](const ToyPolicy& p) { return simpo_loss(p, batch, cfg); }, policy, 1e-5);
        result.max_rel_err = std::max(result.max_rel_err, max_relative_error(analytic, numeric));
        ++result.instances;
    }
    return result;
}

TrainResult train(ToyPolicy policy, const PreferenceBatch& batch, const SimpoConfig& cfg,
                  long steps, double learning_rate, std::uint64_t seed) {
    if (batch.empty()) throw EmptyDataset("training needs at least one preference pair");
    if (steps < 0) throw ValidationError("step count must be non-negative");
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be positive");
    static_cast<void>(seed);  // full-batch descent has no stochastic choices to seed

    TrainResult result{std::move(policy), {}};
    result.metrics.reserve(static_cast<std::size_t>(steps) + 1);
    auto log_row = [&](long step) {
        result.metrics.push_back(TrainMetricsRow{step, simpo_loss(result.policy, batch, cfg),
                                                 mean_margin(result.policy, batch, cfg)});
    };
    log_row(0);
    for (long s = 1; s <= steps; ++s) {
        const Matrix g = simpo_grad(result.policy, batch, cfg);
        auto& theta = result.policy.logits().data;
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= learning_rate * g.data[i];
        log_row(s);
    }
    return result;
}

TokenSequence greedy_decode(const ToyPolicy& policy, int length) {
    if (length < 1) throw ValidationError("decode length must be positive");
    TokenSequence out;
    out.reserve(static_cast<std::size_t>(length));
    int prev = policy.bos_row();
    for (int t = 0; t < length; ++t) {
        int best = 0;
        for (int k = 1; k < policy.vocab_size(); ++k)
            if (policy.logits().at(prev, k) > policy.logits().at(prev, best)) best = k;
        out.push_back(best);
        prev = best;
    }
    return out;
}

TokenSequence hash_tokenize(std::string_view text, int vocab_size) {
    if (vocab_size < 1) throw ValidationError("vocab size must be positive");
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start)
            out.push_back(static_cast<int>(fnv1a64(text.substr(start, i - start)) %
                                           static_cast<std::uint64_t>(vocab_size)));
    }
    if (out.empty())
        out.push_back(static_cast<int>(fnv1a64("") % static_cast<std::uint64_t>(vocab_size)));
    return out;
}

PreferenceBatch batch_from_pairs(const std::vector<PreferencePair>& pairs, int vocab_size) {
    PreferenceBatch batch;
    batch.reserve(pairs.size());
    for (const auto& p : pairs)
        batch.push_back(TokenizedPair{p.question_id, hash_tokenize(p.winner.text, vocab_size),
                                      hash_tokenize(p.loser.text, vocab_size)});
    return batch;
}

void save_policy(const std::string& path, const ToyPolicy& policy) {
    std::string out = "toy-policy v1\nvocab " + std::to_string(policy.vocab_size()) + "\n";
    for (int r = 0; r < policy.rows(); ++r) {
        for (int c = 0; c < policy.vocab_size(); ++c) {
            if (c) out += ' ';
            out += format_double(policy.logits().at(r, c));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

ToyPolicy load_policy(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "toy-policy v1")
        throw ValidationError(path + ": not a toy-policy checkpoint");
    std::string word;
    long vocab = 0;
    if (!(in >> word >> vocab) || word != "vocab" || vocab < 1)
        throw ValidationError(path + ": bad vocab header");
    ToyPolicy policy(static_cast<int>(vocab));
    for (int r = 0; r < policy.rows(); ++r) {
        for (int c = 0; c < policy.vocab_size(); ++c) {
            double v = 0.0;
            if (!(in >> v)) throw ValidationError(path + ": truncated logit matrix");
            policy.logits().at(r, c) = v;
        }
    }
    double extra = 0.0;
    if (in >> extra) throw ValidationError(path + ": trailing data after logit matrix");
    return policy;
}

std::string metrics_csv(const std::vector<TrainMetricsRow>& rows) {
    std::string out = "step,loss,mean_margin\n";
    for (const auto& row : rows) {
        out += std::to_string(row.step);
        out += ',';
        out += format_double(row.loss);
        out += ',';
        out += format_double(row.mean_margin);
        out += '\n';
    }
    return out;
}

}  // namespace topoforge
