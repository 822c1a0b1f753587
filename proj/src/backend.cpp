#include "mmsi/backend.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mmsi/error.hpp"
#include "mmsi/forecast.hpp"
#include "mmsi/json_io.hpp"
#include "mmsi/prompt.hpp"
#include "mmsi/sha256.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t chunk = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 6) & 0x3F]);
        out.push_back(kAlphabet[chunk & 0x3F]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        std::uint32_t chunk = bytes[i] << 16;
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        std::uint32_t chunk = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 6) & 0x3F]);
        out += "=";
    }
    return out;
}

std::string mime_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    return "image/png";
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

// Dialogue lines are the leading lines of the form "[PlayerN]: ...".
std::vector<PlayerId> leading_dialogue_speakers(std::string_view user) {
    std::vector<PlayerId> speakers;
    std::size_t pos = 0;
    while (pos <= user.size()) {
        std::size_t eol = user.find('\n', pos);
        std::string_view line = user.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? user.size() + 1 : eol + 1;
        std::string_view t = trim(line);
        if (t.size() < 4 || t.front() != '[') break;
        std::size_t close = t.find("]:");
        if (close == std::string_view::npos) break;
        auto player = player_from_label(t.substr(1, close - 1));
        if (!player) break;
        speakers.push_back(*player);
    }
    return speakers;
}

constexpr std::array<std::string_view, 6> kCannedLines = {
    "I am not sure about that.",
    "Wait, who did you see?",
    "I think we should vote.",
    "That was not me.",
    "Can you explain what you did?",
    "Let me think about it.",
};

}  // namespace

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    EndpointConfig config;
    std::istringstream lines{text};
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        }
        std::string key(trim(t.substr(0, eq)));
        std::string value(trim(t.substr(eq + 1)));
        try {
            if (key == "base_url") config.base_url = value;
            else if (key == "model_name") config.model_name = value;
            else if (key == "api_key_env") config.api_key_env = value;
            else if (key == "timeout_s") config.timeout_s = std::stod(value);
            else if (key == "max_retries") config.max_retries = std::stoi(value);
            else if (key == "backoff_base_s") config.backoff_base_s = std::stod(value);
            else if (key == "max_in_flight") config.max_in_flight = std::stoi(value);
            else throw ParseError("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError("config line " + std::to_string(line_no) +
                             ": bad value for '" + key + "'");
        }
    }
    if (config.timeout_s <= 0) throw ParseError("config: timeout_s must be > 0");
    if (config.max_retries < 0) throw ParseError("config: max_retries must be >= 0");
    if (config.max_in_flight < 1) throw ParseError("config: max_in_flight must be >= 1");
    return config;
}

EndpointBackend::EndpointBackend(EndpointConfig config)
    : config_(std::move(config)),
      rng_(std::chrono::steady_clock::now().time_since_epoch().count()) {
    if (config_.base_url.rfind("https://", 0) == 0) {
        throw ValidationError("endpoint: https is not supported in this build");
    }
    if (config_.base_url.rfind("http://", 0) != 0) {
        throw ValidationError("endpoint: base_url must start with http://");
    }
    std::size_t path_at = config_.base_url.find('/', 7);
    if (path_at == std::string::npos) {
        host_ = config_.base_url;
    } else {
        host_ = config_.base_url.substr(0, path_at);
        path_prefix_ = config_.base_url.substr(path_at);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') {
            path_prefix_.pop_back();
        }
    }
}

std::string EndpointBackend::complete(const ChatRequest& request) {
    if (request.user.empty() && request.images.empty()) {
        throw BackendError("endpoint: request has neither text nor images",
                           request.sample_id);
    }

    json body;
    body["model"] = config_.model_name;
    body["max_tokens"] = request.max_output_tokens;
    body["temperature"] = request.temperature;
    json messages = json::array();
    if (!request.system.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system}});
    }
    if (request.images.empty()) {
        messages.push_back({{"role", "user"}, {"content", request.user}});
    } else {
        json parts = json::array();
        for (const std::string& ref : request.images) {
            std::vector<std::uint8_t> bytes;
            try {
                bytes = read_binary_file(ref);
            } catch (const IoError& e) {
                throw BackendError(std::string("endpoint: ") + e.what(),
                                   request.sample_id);
            }
            json image_part;
            image_part["type"] = "image_url";
            image_part["image_url"] = {
                {"url", "data:" + mime_for(ref) + ";base64," + base64_encode(bytes)}};
            parts.push_back(std::move(image_part));
        }
        parts.push_back({{"type", "text"}, {"text", request.user}});
        messages.push_back({{"role", "user"}, {"content", std::move(parts)}});
    }
    body["messages"] = std::move(messages);
    const std::string payload = body.dump();

    const char* api_key = std::getenv(config_.api_key_env.c_str());
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            double cap = config_.backoff_base_s * std::pow(2.0, attempt - 1);
            double sleep_s;
            {
                std::lock_guard<std::mutex> lock(rng_mutex_);
                sleep_s = std::uniform_real_distribution<double>(0.0, cap)(rng_);
            }
            std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
        }

        httplib::Client client(host_);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));
        httplib::Headers headers;
        if (api_key && *api_key) {
            headers.emplace("Authorization", std::string("Bearer ") + api_key);
        }

        auto result = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                                  "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            last_error = "http status " + std::to_string(result->status);
            if (retryable_status(result->status)) continue;
            throw BackendError("endpoint: " + last_error, request.sample_id);
        }

        json response = json::parse(result->body, nullptr, false);
        if (response.is_discarded()) {
            throw BackendError("endpoint: response is not valid JSON",
                               request.sample_id);
        }
        try {
            return response.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const json::exception&) {
            throw BackendError("endpoint: response missing choices[0].message.content",
                               request.sample_id);
        }
    }
    throw BackendError("endpoint: giving up after " +
                           std::to_string(config_.max_retries + 1) + " attempts (" +
                           last_error + ")",
                       request.sample_id);
}

ReplayBackend::ReplayBackend(const std::filesystem::path& fixture_path)
    : responses_(fixture_from_json(read_text_file(fixture_path))) {}

ReplayBackend::ReplayBackend(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

std::string ReplayBackend::request_digest(const ChatRequest& request) {
    Sha256 hasher;
    auto frame = [&hasher](std::string_view part) {
        hasher.update(std::to_string(part.size()));
        hasher.update("\n");
        hasher.update(part);
        hasher.update("\n");
    };
    hasher.update("mmsi-chat-request-v1\n");
    frame(request.system);
    frame(request.user);
    frame(std::to_string(request.images.size()));
    for (const std::string& ref : request.images) {
        std::error_code ec;
        if (std::filesystem::is_regular_file(ref, ec)) {
            frame("f:" + sha256_file_hex(ref));
        } else {
            frame("r:" + sha256_hex(ref));
        }
    }
    return hasher.hex_digest();
}

std::string ReplayBackend::complete(const ChatRequest& request) {
    const std::string digest = request_digest(request);
    auto it = responses_.find(digest);
    if (it == responses_.end()) {
        throw BackendError("replay: no fixture entry for digest " + digest,
                           request.sample_id);
    }
    return it->second;
}

std::string ReplayBackend::fixture_to_json(
    const std::map<std::string, std::string>& responses) {
    json doc;
    doc["schema"] = 1;
    doc["responses"] = responses;
    return doc.dump(2) + "\n";
}

std::map<std::string, std::string> ReplayBackend::fixture_from_json(
    std::string_view text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ParseError("replay fixture: invalid JSON");
    }
    const json& map = doc.contains("responses") ? doc["responses"] : doc;
    if (!map.is_object()) throw ParseError("replay fixture: responses must be an object");
    std::map<std::string, std::string> responses;
    for (const auto& item : map.items()) {
        if (!item.value().is_string()) {
            throw ParseError("replay fixture: response values must be strings");
        }
        responses[item.key()] = item.value().get<std::string>();
    }
    return responses;
}

std::string BaselineBackend::complete(const ChatRequest& request) {
    const std::string& user = request.user;
    std::vector<PlayerId> dialogue = leading_dialogue_speakers(user);

    std::vector<Turn> window;
    window.reserve(dialogue.size());
    double t = 0.0;
    for (PlayerId speaker : dialogue) {
        window.push_back(Turn{speaker, "x", t, t + 1.0});
        t += 2.0;
    }

    auto forecast_speakers = [&](int k) -> std::vector<PlayerId> {
        if (window.empty()) return {PlayerId{0}};
        return markov_speaker_baseline(window, k, seed_);
    };
    auto canned = [&](PlayerId speaker, std::size_t position) {
        std::uint64_t mix = seed_ * 1099511628211ULL +
                            std::uint64_t(speaker.index) * 131 + position * 31;
        return std::string(kCannedLines[mix % kCannedLines.size()]);
    };
    auto fine_text = [&](const std::vector<PlayerId>& speakers) {
        ForecastTarget target;
        target.speakers = speakers;
        for (std::size_t i = 0; i < speakers.size(); ++i) {
            target.utterances.emplace_back(speakers[i], canned(speakers[i], i));
        }
        return serialize_forecast(target).second;
    };

    const bool wants_coarse = user.find(kSpeakerTurnInstruction) != std::string::npos;
    const bool wants_fine = user.find(kUtteranceInstruction) != std::string::npos;
    const bool wants_combined = user.find(build_forecast_prompt()) != std::string::npos;

    if (wants_combined || (wants_coarse && wants_fine)) {
        std::vector<PlayerId> speakers = forecast_speakers(4);
        ForecastTarget target;
        target.speakers = speakers;
        return serialize_forecast(target).first + "\n" + fine_text(speakers);
    }
    if (wants_coarse) {
        ForecastTarget target;
        target.speakers = forecast_speakers(8);
        return serialize_forecast(target).first;
    }
    if (wants_fine) {
        // Reuse the coarse sequence when present in the context.
        SpeakerParse coarse = parse_speaker_turns(user);
        std::vector<PlayerId> speakers =
            coarse.status == ParseStatus::Ok && !coarse.speakers.empty()
                ? coarse.speakers
                : forecast_speakers(4);
        return fine_text(speakers);
    }

    // Referent tasks: previous distinct speaker before the query turn.
    if (dialogue.empty()) return player_label(PlayerId{0});
    PlayerId querying = dialogue.back();
    for (auto it = dialogue.rbegin(); it != dialogue.rend(); ++it) {
        if (!(*it == querying)) return player_label(*it);
    }
    return player_label(querying);
}

std::vector<BatchResult> run_batch(Backend& backend,
                                   std::span<const ChatRequest> requests,
                                   int max_in_flight) {
    if (max_in_flight < 1) {
        throw ValidationError("run_batch: max_in_flight must be >= 1");
    }
    std::vector<BatchResult> results(requests.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        while (true) {
            std::size_t index = next.fetch_add(1);
            if (index >= requests.size()) break;
            results[index].index = index;
            try {
                results[index].text = backend.complete(requests[index]);
            } catch (const std::exception& e) {
                results[index].error = e.what();
            }
        }
    };

    const std::size_t worker_count =
        std::min<std::size_t>(std::size_t(max_in_flight), requests.size());
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (std::thread& thread : pool) thread.join();
    return results;
}

}  // namespace mmsi
