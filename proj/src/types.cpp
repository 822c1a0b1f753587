#include "mmsi/types.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "mmsi/error.hpp"

namespace mmsi {

std::string player_label(PlayerId player) {
    return "Player" + std::to_string(player.index);
}

std::optional<PlayerId> player_from_label(std::string_view text) {
    std::string_view t = trim(text);
    constexpr std::string_view kWord = "player";
    if (t.size() < kWord.size() + 1) return std::nullopt;
    for (std::size_t i = 0; i < kWord.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(t[i])) != kWord[i]) {
            return std::nullopt;
        }
    }
    std::size_t pos = kWord.size();
    if (pos < t.size() && t[pos] == ' ') ++pos;  // tolerate "player 3"
    if (pos >= t.size()) return std::nullopt;
    int value = 0;
    for (; pos < t.size(); ++pos) {
        if (!std::isdigit(static_cast<unsigned char>(t[pos]))) return std::nullopt;
        value = value * 10 + (t[pos] - '0');
        if (value > 1'000'000) return std::nullopt;
    }
    return PlayerId{value};
}

std::string_view trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

void Transcript::validate() const {
    if (player_count < 1) {
        throw ValidationError("transcript '" + session_id + "': player_count must be >= 1");
    }
    double prev_start = -1.0;
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const Turn& turn = turns[i];
        const std::string where =
            "transcript '" + session_id + "' turn " + std::to_string(i);
        if (!(turn.start <= turn.end)) {
            throw ValidationError(where + ": start > end");
        }
        if (i > 0 && !(turn.start > prev_start)) {
            throw ValidationError(where + ": start times must be strictly increasing");
        }
        prev_start = turn.start;
        if (trim(turn.utterance).empty()) {
            throw ValidationError(where + ": empty utterance");
        }
        if (turn.speaker.index < 0 || turn.speaker.index >= player_count) {
            throw ValidationError(where + ": speaker index " +
                                  std::to_string(turn.speaker.index) +
                                  " outside player_count " + std::to_string(player_count));
        }
    }
}

void AnnotationTrack::validate(int player_count) const {
    double prev_ts = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const FrameAnnotation& frame = frames[i];
        const std::string where =
            "track '" + session_id + "' frame " + std::to_string(i);
        if (have_prev && !(frame.timestamp > prev_ts)) {
            throw ValidationError(where + ": timestamps must be strictly increasing");
        }
        prev_ts = frame.timestamp;
        have_prev = true;

        std::set<int> seen;
        for (const PersonAnnotation& person : frame.persons) {
            if (!seen.insert(person.player.index).second) {
                throw ValidationError(where + ": duplicate annotation for " +
                                      player_label(person.player));
            }
            if (person.player.index < 0 ||
                (player_count >= 0 && person.player.index >= player_count)) {
                throw ValidationError(where + ": player index out of range");
            }
            const BoundingBox& box = person.bbox;
            if (!(box.width > 0.0f) || !(box.height > 0.0f)) {
                throw ValidationError(where + ": bbox must have positive size");
            }
            if (!std::isfinite(box.x) || !std::isfinite(box.y) ||
                !std::isfinite(box.width) || !std::isfinite(box.height)) {
                throw ValidationError(where + ": bbox coordinates must be finite");
            }
            for (const Keypoint& kp : person.keypoints) {
                if (!std::isfinite(kp.x) || !std::isfinite(kp.y) ||
                    !std::isfinite(kp.confidence)) {
                    throw ValidationError(where + ": keypoint values must be finite");
                }
                if (kp.confidence < 0.0f || kp.confidence > 1.0f) {
                    throw ValidationError(where + ": keypoint confidence outside [0,1]");
                }
            }
        }
    }
}

std::string_view task_name(TaskKind task) {
    switch (task) {
        case TaskKind::SpeakingTarget: return "speaking_target";
        case TaskKind::PronounCoreference: return "pronoun_coreference";
        case TaskKind::MentionedPlayer: return "mentioned_player";
    }
    return "unknown";
}

std::optional<TaskKind> task_from_name(std::string_view name) {
    for (TaskKind task : kAllTasks) {
        if (task_name(task) == name) return task;
    }
    return std::nullopt;
}

}  // namespace mmsi
