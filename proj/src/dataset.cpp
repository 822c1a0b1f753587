#include "mmsi/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <json.hpp>

#include "mmsi/error.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

bool looks_like_player_mention(std::string_view text) {
    std::string_view t = trim(text);
    if (t.empty()) return false;
    if (player_from_label(t).has_value()) return true;
    // Display names: a capitalized word (possibly several, "Sarah Jane").
    return std::isupper(static_cast<unsigned char>(t.front())) != 0;
}

std::string make_sample_id(const std::string& session_id, std::size_t turn_index,
                           TaskKind task) {
    char index_buf[16];
    std::snprintf(index_buf, sizeof(index_buf), "%04zu", turn_index);
    return session_id + "-" + index_buf + "-" + std::string(task_name(task));
}

json span_to_json(const std::optional<Span>& span) {
    if (!span) return nullptr;
    return json::array({span->begin, span->end});
}

std::optional<Span> span_from_json(const json& value, const std::string& where) {
    if (value.is_null()) return std::nullopt;
    if (!value.is_array() || value.size() != 2 || !value[0].is_number_unsigned() ||
        !value[1].is_number_unsigned()) {
        throw ParseError(where + ": span must be [start, end] or null");
    }
    return Span{value[0].get<std::size_t>(), value[1].get<std::size_t>()};
}

json turn_to_json(const Turn& turn) {
    json object;
    object["speaker"] = turn.speaker.index;
    object["utterance"] = turn.utterance;
    object["start"] = turn.start;
    object["end"] = turn.end;
    return object;
}

Turn turn_from_json(const json& object) {
    Turn turn;
    turn.speaker.index = object.at("speaker").get<int>();
    turn.utterance = object.at("utterance").get<std::string>();
    turn.start = object.at("start").get<double>();
    turn.end = object.at("end").get<double>();
    return turn;
}

json frame_to_json(const FrameAnnotation& frame) {
    json object;
    object["timestamp"] = frame.timestamp;
    object["frame_ref"] = frame.frame_ref;
    json persons = json::array();
    for (const PersonAnnotation& person : frame.persons) {
        json p;
        p["player"] = person.player.index;
        p["bbox"] = {person.bbox.x, person.bbox.y, person.bbox.width,
                     person.bbox.height};
        json kps = json::array();
        for (const Keypoint& kp : person.keypoints) {
            kps.push_back({kp.x, kp.y, kp.confidence});
        }
        p["keypoints"] = std::move(kps);
        persons.push_back(std::move(p));
    }
    object["persons"] = std::move(persons);
    return object;
}

FrameAnnotation frame_from_json(const json& object) {
    FrameAnnotation frame;
    frame.timestamp = object.at("timestamp").get<double>();
    frame.frame_ref = object.at("frame_ref").get<std::string>();
    for (const json& p : object.at("persons")) {
        PersonAnnotation person;
        person.player.index = p.at("player").get<int>();
        const json& box = p.at("bbox");
        person.bbox = {box.at(0).get<float>(), box.at(1).get<float>(),
                       box.at(2).get<float>(), box.at(3).get<float>()};
        const json& kps = p.at("keypoints");
        if (kps.size() != kKeypointCount) {
            throw ParseError("sample frame: keypoints must hold exactly " +
                             std::to_string(kKeypointCount) + " entries");
        }
        for (std::size_t k = 0; k < kKeypointCount; ++k) {
            person.keypoints[k] = {kps[k].at(0).get<float>(), kps[k].at(1).get<float>(),
                                   kps[k].at(2).get<float>()};
        }
        frame.persons.push_back(std::move(person));
    }
    return frame;
}

}  // namespace

std::string mask_mentioned_name(const std::string& utterance, Span span) {
    if (span.end > utterance.size() || span.begin > utterance.size()) {
        throw ValidationError("mask span out of bounds");
    }
    if (span.begin >= span.end) {
        throw ValidationError("mask span is empty");
    }
    std::string_view mention(utterance.data() + span.begin, span.end - span.begin);
    if (!looks_like_player_mention(mention)) {
        throw ValidationError("mask span '" + std::string(mention) +
                              "' is not a player reference");
    }
    std::string masked;
    masked.reserve(utterance.size() - mention.size() + kMaskToken.size());
    masked.append(utterance, 0, span.begin);
    masked.append(kMaskToken);
    masked.append(utterance, span.end, std::string::npos);
    return masked;
}

ForecastTarget build_forecast_target(const Transcript& transcript,
                                     std::size_t anchor_index, int k) {
    if (anchor_index >= transcript.turns.size()) {
        throw ValidationError("forecast anchor index out of range");
    }
    ForecastTarget target;
    if (k <= 0) return target;
    const std::size_t remaining = transcript.turns.size() - anchor_index - 1;
    const std::size_t take = std::min<std::size_t>(remaining, std::size_t(k));
    target.speakers.reserve(take);
    target.utterances.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const Turn& turn = transcript.turns[anchor_index + 1 + i];
        target.speakers.push_back(turn.speaker);
        target.utterances.emplace_back(turn.speaker, turn.utterance);
    }
    return target;
}

std::vector<OnlineSample> build_online_samples(const Transcript& transcript,
                                               const AnnotationTrack& track,
                                               const std::vector<QueryAnchor>& anchors,
                                               const WindowConfig& cfg) {
    if (cfg.d_turns < 1) throw ValidationError("d_turns must be >= 1");
    if (cfg.k_forecast < 0) throw ValidationError("k_forecast must be >= 0");
    if (!track.session_id.empty() && track.session_id != transcript.session_id) {
        throw ValidationError("session mismatch: transcript '" + transcript.session_id +
                              "' vs track '" + track.session_id + "'");
    }

    std::vector<OnlineSample> samples;
    samples.reserve(anchors.size());
    for (const QueryAnchor& anchor : anchors) {
        if (anchor.turn_index >= transcript.turns.size()) {
            throw ValidationError("anchor index " + std::to_string(anchor.turn_index) +
                                  " out of range");
        }
        const Turn& anchor_turn = transcript.turns[anchor.turn_index];
        const bool needs_span = anchor.task != TaskKind::SpeakingTarget;
        if (needs_span && !anchor.span) {
            throw ValidationError("anchor at turn " + std::to_string(anchor.turn_index) +
                                  ": task requires a span");
        }
        if (anchor.span && anchor.span->end > anchor_turn.utterance.size()) {
            throw ValidationError("anchor at turn " + std::to_string(anchor.turn_index) +
                                  ": span exceeds utterance bounds");
        }

        OnlineSample sample;
        sample.sample_id = make_sample_id(transcript.session_id, anchor.turn_index,
                                          anchor.task);
        sample.task = anchor.task;
        sample.ground_truth = anchor.ground_truth;
        sample.query_span = anchor.span;
        sample.query_time_t = anchor_turn.end;

        const std::size_t window_begin =
            anchor.turn_index + 1 >= std::size_t(cfg.d_turns)
                ? anchor.turn_index + 1 - std::size_t(cfg.d_turns)
                : 0;
        sample.dialogue_window.assign(transcript.turns.begin() + window_begin,
                                      transcript.turns.begin() + anchor.turn_index + 1);

        if (anchor.task == TaskKind::MentionedPlayer) {
            sample.masked_query_utterance =
                mask_mentioned_name(anchor_turn.utterance, *anchor.span);
            sample.dialogue_window.back().utterance = sample.masked_query_utterance;
        }

        const double window_start = sample.dialogue_window.front().start;
        for (const FrameAnnotation& frame : track.frames) {
            if (frame.timestamp < window_start) continue;
            if (frame.timestamp > sample.query_time_t) break;
            sample.frame_window.push_back(frame);
        }

        sample.forecast_target =
            build_forecast_target(transcript, anchor.turn_index, cfg.k_forecast);
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<QueryAnchor> parse_anchors_jsonl(std::string_view text,
                                             const ParseOptions& opts) {
    std::vector<QueryAnchor> anchors;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        const std::string where = "anchor line " + std::to_string(line_no);
        json object = json::parse(line, nullptr, false);
        if (object.is_discarded() || !object.is_object()) {
            throw ParseError(where + ": invalid JSON object");
        }
        for (const char* field : {"turn_index", "task", "ground_truth", "span"}) {
            if (!object.contains(field)) {
                throw ParseError(where + ": missing field '" + field + "'");
            }
        }
        for (const auto& item : object.items()) {
            if (item.key() != "turn_index" && item.key() != "task" &&
                item.key() != "ground_truth" && item.key() != "span") {
                if (opts.strict) {
                    throw ParseError(where + ": unknown field '" + item.key() + "'");
                }
            }
        }

        QueryAnchor anchor;
        anchor.turn_index = object["turn_index"].get<std::size_t>();
        auto task = task_from_name(object["task"].get<std::string>());
        if (!task) {
            throw ParseError(where + ": unknown task '" +
                             object["task"].get<std::string>() + "'");
        }
        anchor.task = *task;
        anchor.ground_truth.index = object["ground_truth"].get<int>();
        anchor.span = span_from_json(object["span"], where);
        anchors.push_back(anchor);
    }
    return anchors;
}

std::vector<QueryAnchor> load_anchors_jsonl(const std::filesystem::path& path,
                                            const ParseOptions& opts) {
    return parse_anchors_jsonl(read_text_file(path), opts);
}

std::string anchors_to_jsonl(const std::vector<QueryAnchor>& anchors) {
    std::string out;
    for (const QueryAnchor& anchor : anchors) {
        json object;
        object["turn_index"] = anchor.turn_index;
        object["task"] = std::string(task_name(anchor.task));
        object["ground_truth"] = anchor.ground_truth.index;
        object["span"] = span_to_json(anchor.span);
        out += object.dump();
        out += '\n';
    }
    return out;
}

std::string sample_to_json_line(const OnlineSample& sample) {
    json object;
    object["sample_id"] = sample.sample_id;
    object["task"] = std::string(task_name(sample.task));
    json window = json::array();
    for (const Turn& turn : sample.dialogue_window) window.push_back(turn_to_json(turn));
    object["dialogue_window"] = std::move(window);
    json frames = json::array();
    for (const FrameAnnotation& frame : sample.frame_window) {
        frames.push_back(frame_to_json(frame));
    }
    object["frame_window"] = std::move(frames);
    object["query_time_t"] = sample.query_time_t;
    object["ground_truth"] = sample.ground_truth.index;
    object["masked_query_utterance"] = sample.masked_query_utterance;
    object["query_span"] = span_to_json(sample.query_span);
    json forecast;
    json speakers = json::array();
    for (PlayerId speaker : sample.forecast_target.speakers) {
        speakers.push_back(speaker.index);
    }
    forecast["speakers"] = std::move(speakers);
    json utterances = json::array();
    for (const auto& [speaker, text] : sample.forecast_target.utterances) {
        utterances.push_back({speaker.index, text});
    }
    forecast["utterances"] = std::move(utterances);
    object["forecast_target"] = std::move(forecast);
    return object.dump();
}

OnlineSample sample_from_json_line(std::string_view line) {
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
        throw ParseError("sample line: invalid JSON object");
    }
    OnlineSample sample;
    sample.sample_id = object.at("sample_id").get<std::string>();
    auto task = task_from_name(object.at("task").get<std::string>());
    if (!task) throw ParseError("sample line: unknown task");
    sample.task = *task;
    for (const json& turn : object.at("dialogue_window")) {
        sample.dialogue_window.push_back(turn_from_json(turn));
    }
    for (const json& frame : object.at("frame_window")) {
        sample.frame_window.push_back(frame_from_json(frame));
    }
    sample.query_time_t = object.at("query_time_t").get<double>();
    sample.ground_truth.index = object.at("ground_truth").get<int>();
    sample.masked_query_utterance =
        object.at("masked_query_utterance").get<std::string>();
    sample.query_span = span_from_json(object.at("query_span"), "sample line");
    const json& forecast = object.at("forecast_target");
    for (const json& speaker : forecast.at("speakers")) {
        sample.forecast_target.speakers.push_back(PlayerId{speaker.get<int>()});
    }
    for (const json& pair : forecast.at("utterances")) {
        sample.forecast_target.utterances.emplace_back(PlayerId{pair.at(0).get<int>()},
                                                       pair.at(1).get<std::string>());
    }
    return sample;
}

std::string samples_to_jsonl(const std::vector<OnlineSample>& samples) {
    std::string out;
    for (const OnlineSample& sample : samples) {
        out += sample_to_json_line(sample);
        out += '\n';
    }
    return out;
}

std::vector<OnlineSample> parse_samples_jsonl(std::string_view text) {
    std::vector<OnlineSample> samples;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        if (trim(line).empty()) continue;
        samples.push_back(sample_from_json_line(line));
    }
    return samples;
}

std::vector<OnlineSample> load_samples_jsonl(const std::filesystem::path& path) {
    return parse_samples_jsonl(read_text_file(path));
}

void save_samples_jsonl(const std::filesystem::path& path,
                        const std::vector<OnlineSample>& samples) {
    write_text_file(path, samples_to_jsonl(samples));
}

}  // namespace mmsi
