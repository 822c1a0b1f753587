#include "mmsi/json_io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mmsi/error.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

void default_warn(const std::string& message) {
    std::cerr << "warning: " << message << "\n";
}

void emit_warning(const ParseOptions& opts, const std::string& message) {
    if (opts.warn) {
        opts.warn(message);
    } else {
        default_warn(message);
    }
}

// Enforces the mandatory/unknown-field policy for one JSON object.
void check_fields(const json& object, std::initializer_list<const char*> required,
                  const ParseOptions& opts, const std::string& where) {
    if (!object.is_object()) {
        throw ParseError(where + ": expected a JSON object");
    }
    for (const char* field : required) {
        if (!object.contains(field)) {
            throw ParseError(where + ": missing field '" + field + "'");
        }
    }
    for (const auto& item : object.items()) {
        bool known = false;
        for (const char* field : required) {
            if (item.key() == field) {
                known = true;
                break;
            }
        }
        if (!known) {
            if (opts.strict) {
                throw ParseError(where + ": unknown field '" + item.key() + "'");
            }
            emit_warning(opts, where + ": ignoring unknown field '" + item.key() + "'");
        }
    }
}

double require_number(const json& value, const std::string& where) {
    if (!value.is_number()) throw ParseError(where + ": expected a number");
    return value.get<double>();
}

int require_int(const json& value, const std::string& where) {
    if (!value.is_number_integer()) throw ParseError(where + ": expected an integer");
    return value.get<int>();
}

std::string require_string(const json& value, const std::string& where) {
    if (!value.is_string()) throw ParseError(where + ": expected a string");
    return value.get<std::string>();
}

json parse_json(std::string_view text, const std::string& where) {
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        throw ParseError(where + ": invalid JSON");
    }
    return value;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failure: " + path.string());
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failure: " + path.string());
}

Transcript parse_transcript_jsonl(std::string_view text, const std::string& session_id,
                                  int player_count, const ParseOptions& opts) {
    Transcript transcript;
    transcript.session_id = session_id;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    int max_speaker = -1;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        const std::string where = "transcript line " + std::to_string(line_no);
        json object = parse_json(line, where);
        check_fields(object, {"speaker", "utterance", "start", "end"}, opts, where);

        Turn turn;
        turn.speaker.index = require_int(object["speaker"], where + " speaker");
        turn.utterance = require_string(object["utterance"], where + " utterance");
        turn.start = require_number(object["start"], where + " start");
        turn.end = require_number(object["end"], where + " end");
        max_speaker = std::max(max_speaker, turn.speaker.index);
        transcript.turns.push_back(std::move(turn));
    }

    transcript.player_count = player_count > 0 ? player_count : max_speaker + 1;
    transcript.validate();
    return transcript;
}

Transcript load_transcript_jsonl(const std::filesystem::path& path,
                                 const std::string& session_id, int player_count,
                                 const ParseOptions& opts) {
    std::string sid = session_id.empty() ? path.stem().string() : session_id;
    return parse_transcript_jsonl(read_text_file(path), sid, player_count, opts);
}

std::string transcript_to_jsonl(const Transcript& transcript) {
    std::string out;
    for (const Turn& turn : transcript.turns) {
        json object;
        object["speaker"] = turn.speaker.index;
        object["utterance"] = turn.utterance;
        object["start"] = turn.start;
        object["end"] = turn.end;
        out += object.dump();
        out += '\n';
    }
    return out;
}

void save_transcript_jsonl(const std::filesystem::path& path,
                           const Transcript& transcript) {
    write_text_file(path, transcript_to_jsonl(transcript));
}

AnnotationTrack parse_annotation_track(std::string_view text, const ParseOptions& opts) {
    json doc = parse_json(text, "annotation document");
    check_fields(doc, {"session_id", "source_resolution", "frames"}, opts,
                 "annotation document");

    AnnotationTrack track;
    track.session_id = require_string(doc["session_id"], "session_id");

    const json& resolution = doc["source_resolution"];
    if (!resolution.is_array() || resolution.size() != 2) {
        throw ParseError("source_resolution: expected [width, height]");
    }
    track.source_width = require_int(resolution[0], "source_resolution width");
    track.source_height = require_int(resolution[1], "source_resolution height");

    if (!doc["frames"].is_array()) throw ParseError("frames: expected an array");
    for (std::size_t f = 0; f < doc["frames"].size(); ++f) {
        const json& frame_json = doc["frames"][f];
        const std::string where = "frame " + std::to_string(f);
        check_fields(frame_json, {"timestamp", "frame_ref", "persons"}, opts, where);

        FrameAnnotation frame;
        frame.timestamp = require_number(frame_json["timestamp"], where + " timestamp");
        frame.frame_ref = require_string(frame_json["frame_ref"], where + " frame_ref");

        if (!frame_json["persons"].is_array()) {
            throw ParseError(where + ": persons must be an array");
        }
        for (std::size_t p = 0; p < frame_json["persons"].size(); ++p) {
            const json& person_json = frame_json["persons"][p];
            const std::string pwhere = where + " person " + std::to_string(p);
            check_fields(person_json, {"player", "bbox", "keypoints"}, opts, pwhere);

            PersonAnnotation person;
            person.player.index = require_int(person_json["player"], pwhere + " player");

            const json& box = person_json["bbox"];
            if (!box.is_array() || box.size() != 4) {
                throw ParseError(pwhere + ": bbox must be [x, y, w, h]");
            }
            person.bbox.x = static_cast<float>(require_number(box[0], pwhere + " bbox"));
            person.bbox.y = static_cast<float>(require_number(box[1], pwhere + " bbox"));
            person.bbox.width = static_cast<float>(require_number(box[2], pwhere + " bbox"));
            person.bbox.height = static_cast<float>(require_number(box[3], pwhere + " bbox"));

            const json& keypoints = person_json["keypoints"];
            if (!keypoints.is_array() || keypoints.size() != kKeypointCount) {
                throw ParseError(pwhere + ": keypoints must hold exactly " +
                                 std::to_string(kKeypointCount) + " entries");
            }
            for (std::size_t k = 0; k < kKeypointCount; ++k) {
                const json& kp = keypoints[k];
                if (!kp.is_array() || kp.size() != 3) {
                    throw ParseError(pwhere + ": keypoint " + std::to_string(k) +
                                     " must be [x, y, confidence]");
                }
                person.keypoints[k].x =
                    static_cast<float>(require_number(kp[0], pwhere + " keypoint x"));
                person.keypoints[k].y =
                    static_cast<float>(require_number(kp[1], pwhere + " keypoint y"));
                person.keypoints[k].confidence =
                    static_cast<float>(require_number(kp[2], pwhere + " keypoint confidence"));
            }
            frame.persons.push_back(std::move(person));
        }
        track.frames.push_back(std::move(frame));
    }

    track.validate();
    return track;
}

AnnotationTrack load_annotation_track(const std::filesystem::path& path,
                                      const ParseOptions& opts) {
    return parse_annotation_track(read_text_file(path), opts);
}

std::string annotation_track_to_json(const AnnotationTrack& track) {
    json doc;
    doc["session_id"] = track.session_id;
    doc["source_resolution"] = {track.source_width, track.source_height};
    json frames = json::array();
    for (const FrameAnnotation& frame : track.frames) {
        json frame_json;
        frame_json["timestamp"] = frame.timestamp;
        frame_json["frame_ref"] = frame.frame_ref;
        json persons = json::array();
        for (const PersonAnnotation& person : frame.persons) {
            json person_json;
            person_json["player"] = person.player.index;
            person_json["bbox"] = {person.bbox.x, person.bbox.y, person.bbox.width,
                                   person.bbox.height};
            json keypoints = json::array();
            for (const Keypoint& kp : person.keypoints) {
                keypoints.push_back({kp.x, kp.y, kp.confidence});
            }
            person_json["keypoints"] = std::move(keypoints);
            persons.push_back(std::move(person_json));
        }
        frame_json["persons"] = std::move(persons);
        frames.push_back(std::move(frame_json));
    }
    doc["frames"] = std::move(frames);
    return doc.dump(2) + "\n";
}

void save_annotation_track(const std::filesystem::path& path,
                           const AnnotationTrack& track) {
    write_text_file(path, annotation_track_to_json(track));
}

}  // namespace mmsi
