// Strictly-causal online sample construction: dialogue windows, frame
// windows, forecast targets, and mention masking.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmsi/json_io.hpp"
#include "mmsi/types.hpp"

namespace mmsi {

struct WindowConfig {
    int d_turns = 10;    // history window, in dialogue turns
    int k_forecast = 4;  // forecast horizon, in turns
};

// Character span within an utterance, half-open [begin, end).
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(Span a, Span b) = default;
};

struct QueryAnchor {
    std::size_t turn_index = 0;
    TaskKind task = TaskKind::SpeakingTarget;
    PlayerId ground_truth;
    // Marks the queried pronoun (PronounCoreference) or the masked name
    // (MentionedPlayer); absent for SpeakingTarget.
    std::optional<Span> span;
};

struct ForecastTarget {
    std::vector<PlayerId> speakers;
    std::vector<std::pair<PlayerId, std::string>> utterances;  // aligned

    bool empty() const { return speakers.empty(); }

    friend bool operator==(const ForecastTarget& a, const ForecastTarget& b) = default;
};

struct OnlineSample {
    std::string sample_id;
    TaskKind task = TaskKind::SpeakingTarget;
    std::vector<Turn> dialogue_window;       // contiguous suffix ending at anchor
    std::vector<FrameAnnotation> frame_window;
    double query_time_t = 0.0;               // anchor turn's end
    PlayerId ground_truth;
    std::string masked_query_utterance;      // MentionedPlayer only, else ""
    std::optional<Span> query_span;          // span within the anchor utterance
    ForecastTarget forecast_target;
};

inline constexpr std::string_view kMaskToken = "<MASK>";

// Replaces exactly the span with kMaskToken. Throws ValidationError when the
// span is degenerate, out of bounds, or does not look like a player mention
// (a "playerN" token or a capitalized name).
std::string mask_mentioned_name(const std::string& utterance, Span span);

ForecastTarget build_forecast_target(const Transcript& transcript,
                                     std::size_t anchor_index, int k);

// One sample per anchor. The frame window spans
// [start of earliest windowed turn, query_time_t], inclusive. For
// MentionedPlayer anchors the anchor turn inside dialogue_window carries the
// masked utterance so no sample text leaks the ground truth.
std::vector<OnlineSample> build_online_samples(const Transcript& transcript,
                                               const AnnotationTrack& track,
                                               const std::vector<QueryAnchor>& anchors,
                                               const WindowConfig& cfg = {});

// --- Anchor / sample files (line-oriented JSON) ---

std::vector<QueryAnchor> load_anchors_jsonl(const std::filesystem::path& path,
                                            const ParseOptions& opts = {});
std::vector<QueryAnchor> parse_anchors_jsonl(std::string_view text,
                                             const ParseOptions& opts = {});
std::string anchors_to_jsonl(const std::vector<QueryAnchor>& anchors);

std::string sample_to_json_line(const OnlineSample& sample);
OnlineSample sample_from_json_line(std::string_view line);
std::string samples_to_jsonl(const std::vector<OnlineSample>& samples);
std::vector<OnlineSample> parse_samples_jsonl(std::string_view text);
std::vector<OnlineSample> load_samples_jsonl(const std::filesystem::path& path);
void save_samples_jsonl(const std::filesystem::path& path,
                        const std::vector<OnlineSample>& samples);

}  // namespace mmsi
