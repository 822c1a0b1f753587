// Coarse-to-fine conversation forecasting: the response grammar and its
// parsers, a model-free Markov speaker baseline, and the two-call
// orchestration against a backend.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmsi/backend.hpp"
#include "mmsi/dataset.hpp"
#include "mmsi/prompt.hpp"

namespace mmsi {

enum class ParseStatus { Ok, Partial, Failed };

std::string_view parse_status_name(ParseStatus status);

struct ForecastResponse {
    std::string raw_coarse;
    std::string raw_fine;
    ForecastTarget parsed;
    ParseStatus parse_status = ParseStatus::Failed;
};

// Grammar anchors. The coarse header introduces the speaker list, the fine
// header introduces the bracketed utterances.
inline constexpr std::string_view kSpeakerTurnsHeader = "The upcoming speakers' turns:";
inline constexpr std::string_view kUtterancesHeader = "The upcoming utterances:";

// Per-stage instructions used by the two-call orchestration (the combined
// single-prompt query is build_forecast_prompt()).
inline constexpr std::string_view kSpeakerTurnInstruction =
    "Predict the upcoming speakers' turns.";
inline constexpr std::string_view kUtteranceInstruction =
    "Predict the upcoming utterance of each speaker.";

struct SpeakerParse {
    std::vector<PlayerId> speakers;
    ParseStatus status = ParseStatus::Failed;
};

// Extracts the ordered speaker list after the coarse header. Header present
// -> Ok (even when the list is empty); player tokens without the header ->
// Partial; neither -> Failed. Tokens on lines after the header line are not
// consumed, so combined coarse+fine responses parse cleanly.
SpeakerParse parse_speaker_turns(std::string_view text);

struct UtteranceParse {
    std::vector<std::pair<PlayerId, std::string>> utterances;
    ParseStatus status = ParseStatus::Failed;
};

// Splits on "[PlayerN]:" markers, trimming each segment. Zero markers ->
// Failed.
UtteranceParse parse_utterances(std::string_view text);

// Exact inverse of the two parsers on well-formed input:
//   coarse: "The upcoming speakers' turns: Player0, Player4, ..."
//   fine:   "The upcoming utterances: [Player0]: ... [Player4]: ..."
// An empty target serializes to the bare coarse header and an empty fine.
std::pair<std::string, std::string> serialize_forecast(const ForecastTarget& target);

// First-order transition counts over the window speakers with add-one
// smoothing; greedy argmax decoding, ties broken by lowest player index.
// With sample=true, draws from the smoothed distribution (seeded).
std::vector<PlayerId> markov_speaker_baseline(std::span<const Turn> window, int k,
                                              std::uint64_t seed = 0,
                                              bool sample = false);

struct ForecastStageOptions {
    bool speaker_turns = true;        // stage 1 (coarse)
    bool detailed_utterances = true;  // stage 2 (fine)
    // Drop image refs from forecast-stage requests (dialogue-only context).
    bool language_only = false;
    int max_output_tokens = 512;
};

// Two sequential backend calls: stage 1 requests the speaker sequence from
// the dialogue context; stage 2 appends the parsed coarse output to the
// context and requests utterances. A coarse parse failure downgrades to a
// single-stage fine request (status Partial); k = 0 performs no calls.
// The prompt should be the dialogue-context prompt (no task query).
ForecastResponse coarse_to_fine_forecast(Backend& backend,
                                         const RenderedPrompt& prompt, int k,
                                         const ForecastStageOptions& opts = {});

// "The upcoming speakers' turns: ...\nThe upcoming utterances: ..." block
// inserted into the task prompt as anticipated-future context. Empty when
// the response carries nothing usable.
std::string forecast_context_text(const ForecastResponse& response);

std::string forecast_response_to_json_line(const ForecastResponse& response,
                                           const std::string& sample_id);

}  // namespace mmsi
