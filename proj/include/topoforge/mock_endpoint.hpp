#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "topoforge/io.hpp"

namespace topoforge {

struct MockStats {
    std::atomic<long> requests{0};
    std::atomic<long> in_flight{0};
    std::atomic<long> max_in_flight{0};
};

struct MockOptions {
    int port = 0;                    // 0 picks a free port
    std::vector<int> status_script;  // forced status per request ordinal, then normal behavior
    long fail_after = -1;            // ≥ 0: requests beyond this many answer 500
    int latency_ms = 0;              // per-request delay, widens the concurrency window
};

// The canned completion for a request body: a pure function, so responses are
// independent of arrival order and identical across runs. Prompts carry a
// "(ref X)" marker naming the expected answer; the body's model/prompt/seed
// hash decides topology adherence, correctness, and verbosity.
std::string mock_completion_text(const Json& request_body);

// Minimal chat-completions server for tests and offline walkthroughs.
class MockEndpoint {
public:
    explicit MockEndpoint(MockOptions options = {});
    ~MockEndpoint();
    MockEndpoint(const MockEndpoint&) = delete;
    MockEndpoint& operator=(const MockEndpoint&) = delete;

    void start();  // binds, then serves on a background thread
    void stop();

    int port() const;
    std::string base_url() const;
    MockStats& stats();
    void reset_stats();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace topoforge
