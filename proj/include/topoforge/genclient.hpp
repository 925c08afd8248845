#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topoforge/io.hpp"
#include "topoforge/prompts.hpp"
#include "topoforge/records.hpp"

namespace topoforge {

// status 0 means the request never completed (connect/read failure).
struct EndpointError : std::runtime_error {
    int status;
    EndpointError(int status_code, const std::string& msg)
        : std::runtime_error(msg), status(status_code) {}
};

struct AuthMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string api_key_env_name = "TOPOFORGE_API_KEY";
    std::string model_name = "mock-small";
    double temperature = 0.7;
    int n_samples_per_topology = 10;
    int max_tokens = 1024;
    int concurrency_limit = 4;
    std::string cache_dir = "cache";
    TopologyParams topology_params{};
    // Backoff base for the 1s·2^k retry schedule; tests shrink it.
    long retry_base_ms = 1000;
    int max_attempts = 5;
};

void validate_config(const GenConfig& cfg);  // throws ValidationError

inline constexpr std::string_view kCacheKeyVersion = kTemplateVersion;

// SHA-256 over the request-determining fields; stable across runs.
std::string cache_key(const GenConfig& cfg, const std::string& question_id, TopologyKind topology,
                      int sample_index);

// Content-addressed response store: {dir}/{digest[0:2]}/{digest}.txt.
class ResponseCache {
public:
    explicit ResponseCache(std::string dir);
    std::optional<std::string> get(const std::string& digest) const;
    void put(const std::string& digest, const std::string& text) const;  // atomic, no mutation
    std::string path_for(const std::string& digest) const;

private:
    std::string dir_;
};

// One chat-completions call per sample against an OpenAI-compatible server,
// with bounded retries on 429/5xx/transport failures.
class EndpointClient {
public:
    EndpointClient(GenConfig cfg, std::string api_key);

    std::string complete(const std::string& prompt, const std::optional<std::string>& image_ref,
                         int sample_index) const;

    // POST body: model/messages/temperature/max_tokens/n plus a per-sample
    // seed so equal prompts can still yield distinct samples.
    static Json build_request(const GenConfig& cfg, const std::string& prompt,
                              const std::optional<std::string>& image_ref, int sample_index);
    static std::string extract_content(const Json& response_body);

private:
    GenConfig cfg_;
    std::string api_key_;
};

struct PipelineStats {
    long cells_total = 0;
    long cells_failed = 0;
    long cache_hits = 0;
    long cells_fetched = 0;  // cache misses sent to the network; hits + fetched == total

    bool partial_failure() const {
        return cells_total > 0 && cells_failed * 10 > cells_total;  // strictly above 10%
    }
};

struct GenerationResult {
    std::vector<GenerationRecord> records;  // question order × Chain<Tree<Graph × sample
    std::vector<Json> errors;               // one row per failed cell
    PipelineStats stats;
};

// All (question × topology × sample) cells: cached cells are read back, the
// rest fetched through a bounded worker pool; output order never depends on
// network timing. Throws AuthMissing when uncached cells remain and the key
// env var is unset.
GenerationResult run_pipeline(const std::vector<Question>& questions, const GenConfig& cfg,
                              std::vector<TopologyKind> topologies);

// Single-cell convenience: raw texts for one question/topology, ordered by
// sample index. Throws EndpointError on any unrecoverable sample.
std::vector<std::string> generate(const Question& question, TopologyKind topology,
                                  const GenConfig& cfg);

}  // namespace topoforge
