#include "topoforge/genclient.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <thread>

#include "topoforge/text.hpp"
#include "topoforge/trace.hpp"

namespace topoforge {

void validate_config(const GenConfig& cfg) {
    if (cfg.base_url.empty()) throw ValidationError("base_url must not be empty");
    if (cfg.api_key_env_name.empty()) throw ValidationError("api_key_env_name must not be empty");
    if (cfg.model_name.empty()) throw ValidationError("model_name must not be empty");
    if (!(cfg.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
    if (cfg.n_samples_per_topology < 1 || cfg.n_samples_per_topology > 64)
        throw ValidationError("n_samples_per_topology must lie in [1, 64]");
    if (cfg.max_tokens < 1) throw ValidationError("max_tokens must be positive");
    if (cfg.concurrency_limit < 1) throw ValidationError("concurrency_limit must be positive");
    if (cfg.cache_dir.empty()) throw ValidationError("cache_dir must not be empty");
    if (cfg.topology_params.max_depth < 1 || cfg.topology_params.n_children < 1 ||
        cfg.topology_params.n_neighbors < 1)
        throw ValidationError("topology parameters must be positive");
    if (cfg.retry_base_ms < 0) throw ValidationError("retry_base_ms must be non-negative");
    if (cfg.max_attempts < 1) throw ValidationError("max_attempts must be positive");
}

std::string cache_key(const GenConfig& cfg, const std::string& question_id, TopologyKind topology,
                      int sample_index) {
    std::string material = question_id;
    material += '|';
    material += to_string(topology);
    material += '|';
    material += std::to_string(sample_index);
    material += '|';
    material += cfg.model_name;
    material += '|';
    material += format_double(cfg.temperature);
    material += '|';
    material += kCacheKeyVersion;
    return sha256_hex(material);
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw ValidationError("cache directory must not be empty");
}

std::string ResponseCache::path_for(const std::string& digest) const {
    return dir_ + "/" + digest.substr(0, 2) + "/" + digest + ".txt";
}

std::optional<std::string> ResponseCache::get(const std::string& digest) const {
    const std::string path = path_for(digest);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    return read_file(path);
}

void ResponseCache::put(const std::string& digest, const std::string& text) const {
    const std::string path = path_for(digest);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) return;  // content-addressed: never rewrite
    write_file_atomic(path, text);
}

EndpointClient::EndpointClient(GenConfig cfg, std::string api_key)
    : cfg_(std::move(cfg)), api_key_(std::move(api_key)) {}

Json EndpointClient::build_request(const GenConfig& cfg, const std::string& prompt,
                                   const std::optional<std::string>& image_ref, int sample_index) {
    Json content;
    if (image_ref) {
        content = Json::array();
        content.push_back(Json{{"type", "text"}, {"text", prompt}});
        content.push_back(Json{{"type", "image_url"}, {"image_url", Json{{"url", *image_ref}}}});
    } else {
        content = prompt;
    }
    Json body;
    body["model"] = cfg.model_name;
    body["messages"] = Json::array({Json{{"role", "user"}, {"content", content}}});
    body["temperature"] = cfg.temperature;
    body["max_tokens"] = cfg.max_tokens;
    body["n"] = 1;
    // Distinguishes samples that share a prompt; deterministic servers can
    // fold it into their response choice.
    body["seed"] = sample_index;
    return body;
}

std::string EndpointClient::extract_content(const Json& response_body) {
    auto choices = response_body.find("choices");
    if (choices == response_body.end() || !choices->is_array() || choices->empty())
        throw EndpointError(200, "endpoint response carries no choices");
    const Json& message = (*choices)[0].contains("message") ? (*choices)[0]["message"] : Json();
    if (!message.is_object() || !message.contains("content") || !message["content"].is_string())
        throw EndpointError(200, "endpoint response carries no message content");
    return message["content"].get<std::string>();
}

namespace {

void backoff_sleep(long base_ms, int retry_ordinal) {
    if (base_ms <= 0) return;
    thread_local std::mt19937_64 rng(std::random_device{}());
    const long exp_ms = base_ms << std::min(retry_ordinal - 1, 10);
    const long jitter = base_ms > 1 ? static_cast<long>(rng() % (base_ms / 2 + 1)) : 0;
    std::this_thread::sleep_for(std::chrono::milliseconds(exp_ms + jitter));
}

}  // namespace

std::string EndpointClient::complete(const std::string& prompt,
                                     const std::optional<std::string>& image_ref,
                                     int sample_index) const {
    const std::string payload = build_request(cfg_, prompt, image_ref, sample_index).dump();
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

    int last_status = 0;
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
        if (attempt > 1) backoff_sleep(cfg_.retry_base_ms, attempt - 1);
        httplib::Client http(cfg_.base_url);
        http.set_connection_timeout(10, 0);
        http.set_read_timeout(60, 0);
        auto res = http.Post("/v1/chat/completions", headers, payload, "application/json");
        if (!res) {  // connect/read failure or timeout: retryable
            last_status = 0;
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            const Json parsed = Json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) throw EndpointError(200, "unparseable endpoint response");
            return extract_content(parsed);
        }
        last_status = res->status;
        last_error = "HTTP " + std::to_string(res->status);
        const bool retryable = res->status == 429 || res->status >= 500;
        if (!retryable) throw EndpointError(res->status, "endpoint rejected request: " + last_error);
    }
    throw EndpointError(last_status, "retries exhausted after " + std::to_string(cfg_.max_attempts) +
                                         " attempts: " + last_error);
}

namespace {

struct Cell {
    const Question* question = nullptr;
    TopologyKind topology = TopologyKind::Chain;
    int sample = 0;
    std::string prompt;
    std::string digest;
    std::optional<std::string> text;
    std::string error;
};

std::string require_api_key(const GenConfig& cfg, std::size_t uncached) {
    const char* key = std::getenv(cfg.api_key_env_name.c_str());
    if (key == nullptr || *key == '\0')
        throw AuthMissing("environment variable " + cfg.api_key_env_name + " is unset and " +
                          std::to_string(uncached) + " cells are uncached");
    return key;
}

GenerationRecord record_from_cell(const Cell& cell, const GenConfig& cfg) {
    GenerationRecord r;
    r.question_id = cell.question->id;
    r.declared_topology = cell.topology;
    r.sample_index = cell.sample;
    r.model = cfg.model_name;
    r.raw_text = *cell.text;
    try {
        r.classified_topology = classify_topology(parse_trace(r.raw_text, ParseMode::Lenient));
    } catch (const EmptyTrace&) {
        r.classified_topology = std::nullopt;  // freeform output, nothing to classify
    }
    r.answer = extract_answer(r.raw_text, cell.question->qtype);
    r.token_length = whitespace_token_count(r.raw_text);
    return r;
}

}  // namespace

GenerationResult run_pipeline(const std::vector<Question>& questions, const GenConfig& cfg,
                              std::vector<TopologyKind> topologies) {
    validate_config(cfg);
    if (topologies.empty()) throw ValidationError("topology subset must not be empty");
    std::sort(topologies.begin(), topologies.end(),
              [](TopologyKind a, TopologyKind b) { return topology_index(a) < topology_index(b); });
    topologies.erase(std::unique(topologies.begin(), topologies.end()), topologies.end());

    // Canonical cell order; everything downstream preserves it.
    std::vector<Cell> cells;
    cells.reserve(questions.size() * topologies.size() *
                  static_cast<std::size_t>(cfg.n_samples_per_topology));
    for (const auto& q : questions) {
        for (TopologyKind t : topologies) {
            const std::string prompt = render_prompt(q, t, cfg.topology_params);
            for (int s = 0; s < cfg.n_samples_per_topology; ++s)
                cells.push_back(Cell{&q, t, s, prompt, cache_key(cfg, q.id, t, s), std::nullopt, ""});
        }
    }

    GenerationResult result;
    result.stats.cells_total = static_cast<long>(cells.size());

    ResponseCache cache(cfg.cache_dir);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (auto hit = cache.get(cells[i].digest)) {
            cells[i].text = std::move(*hit);
            ++result.stats.cache_hits;
        } else {
            pending.push_back(i);
        }
    }

    if (!pending.empty()) {
        const EndpointClient client(cfg, require_api_key(cfg, pending.size()));
        result.stats.cells_fetched = static_cast<long>(pending.size());

        // Workers pull the next pending index; each writes only its own cell,
        // so assembly below needs no locks and no particular finish order.
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t j = next.fetch_add(1);
                if (j >= pending.size()) return;
                Cell& cell = cells[pending[j]];
                try {
                    std::string text = client.complete(cell.prompt, cell.question->image_ref,
                                                       cell.sample);
                    cache.put(cell.digest, text);
                    cell.text = std::move(text);
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
        };
        const std::size_t n_workers =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency_limit), pending.size());
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const Cell& cell : cells) {
        if (!cell.text) {
            ++result.stats.cells_failed;
            Json err;
            err["question_id"] = cell.question->id;
            err["topology"] = std::string(to_string(cell.topology));
            err["sample_index"] = cell.sample;
            err["model"] = cfg.model_name;
            err["error"] = cell.error.empty() ? "missing response" : cell.error;
            result.errors.push_back(std::move(err));
            continue;
        }
        result.records.push_back(record_from_cell(cell, cfg));
    }
    return result;
}

std::vector<std::string> generate(const Question& question, TopologyKind topology,
                                  const GenConfig& cfg) {
    validate_config(cfg);
    ResponseCache cache(cfg.cache_dir);
    const std::string prompt = render_prompt(question, topology, cfg.topology_params);

    std::vector<std::string> out(static_cast<std::size_t>(cfg.n_samples_per_topology));
    std::vector<int> missing;
    for (int s = 0; s < cfg.n_samples_per_topology; ++s) {
        const std::string digest = cache_key(cfg, question.id, topology, s);
        if (auto hit = cache.get(digest))
            out[static_cast<std::size_t>(s)] = std::move(*hit);
        else
            missing.push_back(s);
    }
    if (!missing.empty()) {
        const EndpointClient client(cfg, require_api_key(cfg, missing.size()));
        for (int s : missing) {
            std::string text = client.complete(prompt, question.image_ref, s);
            cache.put(cache_key(cfg, question.id, topology, s), text);
            out[static_cast<std::size_t>(s)] = std::move(text);
        }
    }
    return out;
}

}  // namespace topoforge
