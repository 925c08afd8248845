#include "topoforge/mock_endpoint.hpp"

#include <httplib.h>

#include <chrono>
#include <stdexcept>
#include <thread>

#include "topoforge/text.hpp"

namespace topoforge {

namespace {

std::string prompt_from_body(const Json& body) {
    auto messages = body.find("messages");
    if (messages == body.end() || !messages->is_array() || messages->empty()) return "";
    const Json& content = (*messages)[0].value("content", Json());
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {  // multimodal parts: concatenate the text ones
        std::string out;
        for (const auto& part : content)
            if (part.is_object() && part.value("type", "") == "text")
                out += part.value("text", "");
        return out;
    }
    return "";
}

// The fixture convention: prompts embed "(ref X)" naming the expected answer.
std::string find_ref(const std::string& prompt) {
    const std::string open = "(ref ";
    const auto at = prompt.find(open);
    if (at == std::string::npos) return "";
    const auto close = prompt.find(')', at + open.size());
    if (close == std::string::npos) return "";
    return prompt.substr(at + open.size(), close - (at + open.size()));
}

std::string wrong_answer(const std::string& right) {
    if (right.size() == 1 && right[0] >= 'A' && right[0] <= 'E') {
        char c = right[0] == 'E' ? 'A' : static_cast<char>(right[0] + 1);
        return std::string(1, c);
    }
    if (auto v = parse_decimal(right)) return format_double(*v + 1.0);
    return right + " instead";
}

std::string requested_topology(const std::string& prompt) {
    if (prompt.find("TOPOLOGY: graph") != std::string::npos) return "graph";
    if (prompt.find("TOPOLOGY: tree") != std::string::npos) return "tree";
    return "chain";
}

std::string trace_body(const std::string& topology, const std::string& answer,
                       unsigned verbosity) {
    const std::string filler =
        verbosity == 0 ? "" : (verbosity == 1 ? " with one extra remark" : " after checking twice");
    std::string out = "TOPOLOGY: " + topology + "\n";
    out += "NODE s1: restate the question" + filler + "\n";
    if (topology == "chain") {
        out += "NODE s2 PARENT s1: work toward the result\n";
        out += "NODE s3 PARENT s2: settle on " + answer + "\n";
    } else if (topology == "tree") {
        out += "NODE s2 PARENT s1: try the direct route\n";
        out += "NODE s3 PARENT s1: try an alternative route\n";
        out += "NODE s4 PARENT s2: settle on " + answer + "\n";
    } else {
        out += "NODE s2 PARENT s1: expand the first idea\n";
        out += "NODE s3 PARENT s1,s2: merge both observations\n";
        if (verbosity == 2) out += "EDGE s2 -- s1\n";
        out += "NODE s4 PARENT s3: settle on " + answer + "\n";
    }
    out += "ANSWER: " + answer + "\n";
    return out;
}

}  // namespace

std::string mock_completion_text(const Json& request_body) {
    const std::string model = request_body.value("model", "");
    const std::string prompt = prompt_from_body(request_body);
    const long seed = request_body.value("seed", 0L);

    // Per-cell traits come from the model|prompt hash, per-sample variation
    // from model|prompt|seed, so reruns and retries see identical text.
    const std::uint64_t h_cell = fnv1a64(model + "|" + prompt);
    const std::uint64_t h_samp = fnv1a64(model + "|" + prompt + "|" + std::to_string(seed));

    const std::string ref = find_ref(prompt);
    const bool correct = h_samp % 10 < h_cell % 11;
    const std::string answer =
        ref.empty() ? (correct ? "B" : "C") : (correct ? ref : wrong_answer(ref));

    if (h_cell % 7 == 0)  // some cells ignore the trace grammar entirely
        return "I conclude the answer is " + answer + ".";

    const unsigned verbosity = static_cast<unsigned>(h_samp % 3);
    return trace_body(requested_topology(prompt), answer, verbosity);
}

struct MockEndpoint::Impl {
    MockOptions opts;
    MockStats stats;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<long> ordinal{0};  // request arrival counter, survives reset_stats
};

MockEndpoint::MockEndpoint(MockOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->opts = std::move(options);

    impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
        Impl& im = *impl_;
        const long inflight = im.stats.in_flight.fetch_add(1) + 1;
        long seen = im.stats.max_in_flight.load();
        while (inflight > seen && !im.stats.max_in_flight.compare_exchange_weak(seen, inflight)) {
        }
        im.stats.requests.fetch_add(1);
        const long ord = im.ordinal.fetch_add(1);

        if (im.opts.latency_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(im.opts.latency_ms));

        int status = 200;
        if (ord < static_cast<long>(im.opts.status_script.size()))
            status = im.opts.status_script[static_cast<std::size_t>(ord)];
        else if (im.opts.fail_after >= 0 && ord >= im.opts.fail_after)
            status = 500;

        if (status == 200) {
            const Json body = Json::parse(req.body, nullptr, false);
            Json reply;
            reply["choices"] = Json::array(
                {Json{{"message", Json{{"content", mock_completion_text(body)}}}}});
            res.set_content(reply.dump(), "application/json");
        } else {
            res.status = status;
            res.set_content("{\"error\":\"scripted failure\"}", "application/json");
        }
        im.stats.in_flight.fetch_sub(1);
    });
}

MockEndpoint::~MockEndpoint() { stop(); }

void MockEndpoint::start() {
    Impl& im = *impl_;
    if (im.thread.joinable()) throw std::runtime_error("mock endpoint already started");
    if (im.opts.port == 0) {
        im.port = im.server.bind_to_any_port("127.0.0.1");
        if (im.port <= 0) throw std::runtime_error("mock endpoint could not bind a port");
    } else {
        if (!im.server.bind_to_port("127.0.0.1", im.opts.port))
            throw std::runtime_error("mock endpoint could not bind port " +
                                     std::to_string(im.opts.port));
        im.port = im.opts.port;
    }
    im.thread = std::thread([&im] { im.server.listen_after_bind(); });
    while (!im.server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

void MockEndpoint::stop() {
    Impl& im = *impl_;
    if (!im.thread.joinable()) return;
    im.server.stop();
    im.thread.join();
}

int MockEndpoint::port() const { return impl_->port; }

std::string MockEndpoint::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

MockStats& MockEndpoint::stats() { return impl_->stats; }

void MockEndpoint::reset_stats() {
    impl_->stats.requests.store(0);
    impl_->stats.in_flight.store(0);
    impl_->stats.max_in_flight.store(0);
}

}  // namespace topoforge
