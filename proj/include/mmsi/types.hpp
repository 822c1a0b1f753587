// Core domain types: players, turns, transcripts, frame annotations.
//
// All types here are plain immutable-after-construction values and safe to
// share across threads. Validation is explicit via validate(); constructors
// do not throw.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmsi {

// 0-based participant index. Display names ("Player3") are formatting only.
struct PlayerId {
    int index = 0;

    friend bool operator==(PlayerId a, PlayerId b) { return a.index == b.index; }
    friend auto operator<=>(PlayerId a, PlayerId b) { return a.index <=> b.index; }
};

// "PlayerN" label used in dialogue serialization and model responses.
std::string player_label(PlayerId player);

// Parses a "playerN" token (case-insensitive, optional single space before
// the digits). Returns nullopt when the text is not exactly one such token.
std::optional<PlayerId> player_from_label(std::string_view text);

// One utterance. Boundaries are half-open [start, end) in seconds.
struct Turn {
    PlayerId speaker;
    std::string utterance;
    double start = 0.0;
    double end = 0.0;
};

struct Transcript {
    std::string session_id;
    int player_count = 0;
    std::vector<Turn> turns;

    // Throws ValidationError on: player_count < 1, unsorted or non-strictly
    // increasing start times, start > end, empty (after trim) utterances,
    // speaker index outside [0, player_count).
    void validate() const;
};

inline constexpr std::size_t kKeypointCount = 17;  // COCO-17 ordering

struct Keypoint {
    float x = 0.0f;
    float y = 0.0f;
    float confidence = 0.0f;  // 0 marks a missing joint
};

// Pixel-space box, top-left origin, y-down.
struct BoundingBox {
    float x = 0.0f;
    float y = 0.0f;
    float width = 0.0f;
    float height = 0.0f;
};

struct PersonAnnotation {
    PlayerId player;
    BoundingBox bbox;
    std::array<Keypoint, kKeypointCount> keypoints{};
};

struct FrameAnnotation {
    double timestamp = 0.0;
    std::string frame_ref;  // locator of the source image (path)
    std::vector<PersonAnnotation> persons;
};

struct AnnotationTrack {
    std::string session_id;
    std::vector<FrameAnnotation> frames;
    int source_width = 0;
    int source_height = 0;

    // Throws ValidationError on: non-increasing timestamps, non-positive
    // box sizes, non-finite coordinates, duplicate player within a frame,
    // and (when player_count >= 0) player index out of range.
    void validate(int player_count = -1) const;
};

enum class TaskKind {
    SpeakingTarget,
    PronounCoreference,
    MentionedPlayer,
};

inline constexpr std::array<TaskKind, 3> kAllTasks = {
    TaskKind::SpeakingTarget,
    TaskKind::PronounCoreference,
    TaskKind::MentionedPlayer,
};

std::string_view task_name(TaskKind task);  // "speaking_target", ...
std::optional<TaskKind> task_from_name(std::string_view name);

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace mmsi
