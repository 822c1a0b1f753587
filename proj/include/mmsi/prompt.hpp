// Textual prompt assembly: the color-mapping system sentence, serialized
// dialogue history, the three task queries, and the forecasting query.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmsi/dataset.hpp"
#include "mmsi/overlay.hpp"
#include "mmsi/types.hpp"

namespace mmsi {

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
    std::vector<std::string> image_refs;  // chronological
    std::string sample_id;

    friend bool operator==(const RenderedPrompt& a, const RenderedPrompt& b) = default;
};

// "The red, blue, ... colors correspond to Player0, ..., respectively."
// Truncates consistently for fewer players; singular form for one.
std::string build_system_prompt(const ColorMap& colors);

// One "[PlayerN]: <utterance>" line per turn, chronological. Newlines inside
// an utterance are normalized to spaces. Empty windows are an error.
std::string serialize_dialogue(std::span<const Turn> window);

std::string build_task_prompt(TaskKind task);
std::string build_forecast_prompt();

struct AssembleOptions {
    bool include_task_query = true;
    bool include_forecast_query = false;
    // False when the images are raw frames without overlay annotations; the
    // color-mapping sentence is emitted only for annotated images.
    bool images_annotated = true;
    // Wrap the queried pronoun span in asterisks on the final dialogue line.
    bool highlight_pronoun_span = true;
    // Pre-generated forecast lines inserted between the dialogue and the
    // task query (the model-visible "anticipated future" context).
    std::string forecast_context;
};

// Builds the full prompt for one sample. image_refs must correspond to the
// sample's frame window (possibly a single grid image); passing images for a
// sample with no frame window is an error.
RenderedPrompt assemble(const OnlineSample& sample,
                        std::vector<std::string> image_refs, const ColorMap& colors,
                        const AssembleOptions& opts = {});

std::string prompt_to_json_line(const RenderedPrompt& prompt);
RenderedPrompt prompt_from_json_line(std::string_view line);

}  // namespace mmsi
