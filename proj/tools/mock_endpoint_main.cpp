#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "topoforge/mock_endpoint.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic chat-completions endpoint for offline walkthroughs and tests."};
    topoforge::MockOptions opts;
    opts.port = 8080;
    app.add_option("--port", opts.port, "listen port (0 picks a free one)")
        ->capture_default_str();
    app.add_option("--latency-ms", opts.latency_ms, "artificial per-request delay")
        ->capture_default_str();
    app.add_option("--fail-after", opts.fail_after,
                   "answer 500 to every request after this many (-1 disables)")
        ->capture_default_str();
    app.add_option("--status-script", opts.status_script,
                   "comma-separated statuses forced onto the first requests, e.g. 429,429,200")
        ->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    topoforge::MockEndpoint endpoint(opts);
    try {
        endpoint.start();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "serving POST " << endpoint.base_url() << "/v1/chat/completions\n" << std::flush;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    endpoint.stop();
    std::cout << "served " << endpoint.stats().requests.load() << " requests\n";
    return 0;
}
