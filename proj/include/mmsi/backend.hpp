// Pluggable inference backends: a live chat-completions endpoint, a
// deterministic digest-keyed replay mock, and a model-free baseline.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mmsi {

struct ChatRequest {
    std::string system;
    std::string user;
    std::vector<std::string> images;  // ordered raster locators
    int max_output_tokens = 256;
    double temperature = 0.0;  // evaluation default: deterministic decoding
    std::string sample_id;     // carried into error messages
};

class Backend {
public:
    virtual ~Backend() = default;

    // Returns the completion text. Throws BackendError on failure.
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct EndpointConfig {
    std::string base_url;        // e.g. http://localhost:8000/v1
    std::string model_name;
    std::string api_key_env = "MMSI_API_KEY";  // env var holding the key
    double timeout_s = 60.0;
    int max_retries = 3;
    double backoff_base_s = 0.5;  // exponential, full jitter
    int max_in_flight = 4;
};

// Documented key=value config file ('#' comments, blank lines ignored).
EndpointConfig load_endpoint_config(const std::filesystem::path& path);

// POSTs standard chat-completions JSON (system + user messages, images as
// base64 data URLs) and returns the first choice's text. Retries transport
// errors, 429 and 5xx with jittered exponential backoff.
class EndpointBackend : public Backend {
public:
    explicit EndpointBackend(EndpointConfig config);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "endpoint:" + config_.model_name; }

private:
    EndpointConfig config_;
    std::string host_;       // scheme://host[:port]
    std::string path_prefix_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
};

// Answers from a digest-keyed fixture; misses are errors. Fixture file:
// {"schema": 1, "responses": {"<digest>": "<text>", ...}}.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const std::filesystem::path& fixture_path);
    explicit ReplayBackend(std::map<std::string, std::string> responses);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "replay"; }

    // Content digest over (system, user, image content digests). Image refs
    // naming readable files hash the file bytes, so fixtures survive path
    // changes; unreadable refs fall back to hashing the locator string.
    static std::string request_digest(const ChatRequest& request);

    static std::string fixture_to_json(const std::map<std::string, std::string>& responses);
    static std::map<std::string, std::string> fixture_from_json(std::string_view text);

private:
    std::map<std::string, std::string> responses_;
};

// Model-free stand-in: Markov speaker forecasting, canned utterances, and a
// previous-distinct-speaker referent heuristic. Deterministic under a seed.
class BaselineBackend : public Backend {
public:
    explicit BaselineBackend(std::uint64_t seed = 0) : seed_(seed) {}

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "baseline"; }

private:
    std::uint64_t seed_;
};

struct BatchResult {
    std::size_t index = 0;
    std::string text;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

// Runs requests through a worker pool of size max_in_flight; at no instant
// are more requests outstanding. Per-request failures are recorded, never
// abort the batch. Results are index-complete and sorted by index.
std::vector<BatchResult> run_batch(Backend& backend,
                                   std::span<const ChatRequest> requests,
                                   int max_in_flight);

}  // namespace mmsi
