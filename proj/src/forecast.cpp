#include "mmsi/forecast.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <json.hpp>

#include "mmsi/error.hpp"

namespace mmsi {

namespace {

// Case-insensitive substring search; returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || haystack.size() < needle.size()) {
        return std::string_view::npos;
    }
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
                std::tolower(static_cast<unsigned char>(needle[j]))) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::string_view::npos;
}

// Scans "player<digits>" tokens (case-insensitive, optional one space).
std::vector<std::pair<std::size_t, PlayerId>> find_player_tokens(std::string_view text) {
    std::vector<std::pair<std::size_t, PlayerId>> tokens;
    constexpr std::string_view kWord = "player";
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t at = ifind(text.substr(pos), kWord);
        if (at == std::string_view::npos) break;
        at += pos;
        std::size_t digits = at + kWord.size();
        if (digits < text.size() && text[digits] == ' ') ++digits;
        std::size_t end = digits;
        int value = 0;
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end])) &&
               end - digits < 7) {
            value = value * 10 + (text[end] - '0');
            ++end;
        }
        if (end > digits) {
            tokens.emplace_back(at, PlayerId{value});
            pos = end;
        } else {
            pos = at + kWord.size();
        }
    }
    return tokens;
}

}  // namespace

std::string_view parse_status_name(ParseStatus status) {
    switch (status) {
        case ParseStatus::Ok: return "ok";
        case ParseStatus::Partial: return "partial";
        case ParseStatus::Failed: return "failed";
    }
    return "unknown";
}

SpeakerParse parse_speaker_turns(std::string_view text) {
    SpeakerParse result;
    std::size_t header = ifind(text, "upcoming speakers");
    if (header != std::string_view::npos) {
        std::size_t colon = text.find(':', header);
        if (colon != std::string_view::npos) {
            // Consume the remainder of the header's line only.
            std::size_t eol = text.find('\n', colon);
            std::string_view list = text.substr(
                colon + 1,
                eol == std::string_view::npos ? std::string_view::npos : eol - colon - 1);
            for (const auto& [offset, player] : find_player_tokens(list)) {
                result.speakers.push_back(player);
            }
            result.status = ParseStatus::Ok;
            return result;
        }
    }
    for (const auto& [offset, player] : find_player_tokens(text)) {
        result.speakers.push_back(player);
    }
    result.status = result.speakers.empty() ? ParseStatus::Failed : ParseStatus::Partial;
    return result;
}

UtteranceParse parse_utterances(std::string_view text) {
    UtteranceParse result;

    struct Marker {
        std::size_t begin;  // '[' position
        std::size_t body;   // first char after "]:"
        PlayerId player;
    };
    std::vector<Marker> markers;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find('[', pos);
        if (open == std::string_view::npos) break;
        std::size_t close = text.find(']', open);
        if (close == std::string_view::npos) break;
        auto player = player_from_label(text.substr(open + 1, close - open - 1));
        std::size_t after = close + 1;
        if (player && after < text.size() && text[after] == ':') {
            markers.push_back({open, after + 1, *player});
            pos = after + 1;
        } else {
            pos = open + 1;
        }
    }

    if (markers.empty()) {
        result.status = ParseStatus::Failed;
        return result;
    }
    for (std::size_t i = 0; i < markers.size(); ++i) {
        std::size_t body_end =
            i + 1 < markers.size() ? markers[i + 1].begin : text.size();
        std::string_view body = text.substr(markers[i].body, body_end - markers[i].body);
        result.utterances.emplace_back(markers[i].player, std::string(trim(body)));
    }
    result.status = ParseStatus::Ok;
    return result;
}

std::pair<std::string, std::string> serialize_forecast(const ForecastTarget& target) {
    std::string coarse(kSpeakerTurnsHeader);
    for (std::size_t i = 0; i < target.speakers.size(); ++i) {
        coarse += i == 0 ? " " : ", ";
        coarse += player_label(target.speakers[i]);
    }

    std::string fine;
    if (!target.utterances.empty()) {
        fine = std::string(kUtterancesHeader);
        for (const auto& [speaker, text] : target.utterances) {
            fine += " [";
            fine += player_label(speaker);
            fine += "]: ";
            fine += text;
        }
    }
    return {std::move(coarse), std::move(fine)};
}

std::vector<PlayerId> markov_speaker_baseline(std::span<const Turn> window, int k,
                                              std::uint64_t seed, bool sample) {
    if (window.empty()) {
        throw ValidationError("markov_speaker_baseline: empty window");
    }
    if (k <= 0) return {};

    // Universe = distinct speakers observed in the window, ascending.
    std::vector<int> speakers;
    for (const Turn& turn : window) speakers.push_back(turn.speaker.index);
    std::vector<int> universe = speakers;
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());

    // Add-one smoothed first-order transition counts.
    std::map<int, std::map<int, long long>> counts;
    for (int from : universe) {
        for (int to : universe) counts[from][to] = 1;
    }
    for (std::size_t i = 0; i + 1 < speakers.size(); ++i) {
        counts[speakers[i]][speakers[i + 1]] += 1;
    }

    std::mt19937_64 rng(seed);
    std::vector<PlayerId> out;
    out.reserve(static_cast<std::size_t>(k));
    int state = speakers.back();
    for (int step = 0; step < k; ++step) {
        const auto& row = counts[state];
        int next = universe.front();
        if (sample) {
            long long total = 0;
            for (const auto& [to, count] : row) total += count;
            std::uniform_int_distribution<long long> pick(0, total - 1);
            long long ticket = pick(rng);
            for (const auto& [to, count] : row) {
                if (ticket < count) {
                    next = to;
                    break;
                }
                ticket -= count;
            }
        } else {
            long long best = -1;
            for (const auto& [to, count] : row) {  // ascending: ties keep lowest
                if (count > best) {
                    best = count;
                    next = to;
                }
            }
        }
        out.push_back(PlayerId{next});
        state = next;
    }
    return out;
}

ForecastResponse coarse_to_fine_forecast(Backend& backend, const RenderedPrompt& prompt,
                                         int k, const ForecastStageOptions& opts) {
    ForecastResponse response;
    if (k <= 0 || (!opts.speaker_turns && !opts.detailed_utterances)) {
        response.parse_status = ParseStatus::Ok;
        return response;
    }

    auto make_request = [&](const std::string& user) {
        ChatRequest request;
        request.system = prompt.system_text;
        request.user = user;
        if (!opts.language_only) request.images = prompt.image_refs;
        request.max_output_tokens = opts.max_output_tokens;
        request.sample_id = prompt.sample_id;
        return request;
    };

    SpeakerParse coarse;
    coarse.status = ParseStatus::Failed;
    if (opts.speaker_turns) {
        std::string user = prompt.user_text;
        user += '\n';
        user += kSpeakerTurnInstruction;
        response.raw_coarse = backend.complete(make_request(user));
        coarse = parse_speaker_turns(response.raw_coarse);
        if (coarse.speakers.size() > std::size_t(k)) {
            coarse.speakers.resize(std::size_t(k));
        }
    }

    if (!opts.detailed_utterances) {
        response.parsed.speakers = coarse.speakers;
        response.parse_status = coarse.status;
        return response;
    }

    // Fine stage. When the coarse stage produced a usable sequence it is
    // appended to the context (Partial counts: the tokens were recovered).
    std::string fine_user = prompt.user_text;
    const bool coarse_usable =
        opts.speaker_turns && coarse.status != ParseStatus::Failed;
    if (coarse_usable) {
        ForecastTarget coarse_only;
        coarse_only.speakers = coarse.speakers;
        fine_user += '\n';
        fine_user += serialize_forecast(coarse_only).first;
    }
    fine_user += '\n';
    fine_user += kUtteranceInstruction;
    response.raw_fine = backend.complete(make_request(fine_user));

    UtteranceParse fine = parse_utterances(response.raw_fine);
    if (fine.status == ParseStatus::Ok) {
        if (fine.utterances.size() > std::size_t(k)) {
            fine.utterances.resize(std::size_t(k));
        }
        response.parsed.utterances = fine.utterances;
        for (const auto& [speaker, text] : fine.utterances) {
            response.parsed.speakers.push_back(speaker);
        }
        if (opts.speaker_turns) {
            response.parse_status = coarse.status == ParseStatus::Ok
                                        ? ParseStatus::Ok
                                        : ParseStatus::Partial;
        } else {
            response.parse_status = ParseStatus::Ok;
        }
    } else {
        // Fine failed: keep whatever the coarse stage gave us.
        response.parsed.speakers = coarse.speakers;
        response.parse_status =
            coarse_usable ? ParseStatus::Partial : ParseStatus::Failed;
    }
    return response;
}

std::string forecast_context_text(const ForecastResponse& response) {
    if (response.parse_status == ParseStatus::Failed || response.parsed.speakers.empty()) {
        return {};
    }
    auto [coarse, fine] = serialize_forecast(response.parsed);
    std::string out = std::move(coarse);
    if (!fine.empty()) {
        out += '\n';
        out += fine;
    }
    return out;
}

std::string forecast_response_to_json_line(const ForecastResponse& response,
                                           const std::string& sample_id) {
    nlohmann::json object;
    object["sample_id"] = sample_id;
    object["raw_coarse"] = response.raw_coarse;
    object["raw_fine"] = response.raw_fine;
    nlohmann::json parsed;
    nlohmann::json speakers = nlohmann::json::array();
    for (PlayerId speaker : response.parsed.speakers) speakers.push_back(speaker.index);
    parsed["speakers"] = std::move(speakers);
    nlohmann::json utterances = nlohmann::json::array();
    for (const auto& [speaker, text] : response.parsed.utterances) {
        utterances.push_back({speaker.index, text});
    }
    parsed["utterances"] = std::move(utterances);
    object["parsed"] = std::move(parsed);
    object["parse_status"] = std::string(parse_status_name(response.parse_status));
    return object.dump();
}

}  // namespace mmsi
