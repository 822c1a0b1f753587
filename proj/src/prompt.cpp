#include "mmsi/prompt.hpp"

#include <json.hpp>

#include "mmsi/error.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

std::string join_list(const std::vector<std::string>& items) {
    // Oxford-style joining: "a", "a and b", "a, b, and c".
    if (items.empty()) return {};
    if (items.size() == 1) return items[0];
    if (items.size() == 2) return items[0] + " and " + items[1];
    std::string out;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
        out += items[i];
        out += ", ";
    }
    out += "and " + items.back();
    return out;
}

std::string normalize_utterance(std::string_view utterance) {
    std::string out(utterance);
    for (char& ch : out) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return out;
}

}  // namespace

std::string build_system_prompt(const ColorMap& colors) {
    const std::size_t n = colors.size();
    if (n < 1 || n > kPlayerColorNames.size()) {
        throw ValidationError("build_system_prompt: color map must hold 1-6 entries");
    }
    std::vector<std::string> color_names;
    std::vector<std::string> player_names;
    for (std::size_t i = 0; i < n; ++i) {
        color_names.emplace_back(kPlayerColorNames[i]);
        player_names.push_back(player_label(PlayerId{static_cast<int>(i)}));
    }
    if (n == 1) {
        return "The " + color_names[0] + " color corresponds to " + player_names[0] + ".";
    }
    return "The " + join_list(color_names) + " colors correspond to " +
           join_list(player_names) + ", respectively.";
}

std::string serialize_dialogue(std::span<const Turn> window) {
    if (window.empty()) {
        throw ValidationError("serialize_dialogue: empty window");
    }
    std::string out;
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (i > 0) out += '\n';
        out += '[';
        out += player_label(window[i].speaker);
        out += "]: ";
        out += normalize_utterance(window[i].utterance);
    }
    return out;
}

std::string build_task_prompt(TaskKind task) {
    switch (task) {
        case TaskKind::SpeakingTarget:
            return "Identify which player the speaker is talking to?";
        case TaskKind::PronounCoreference:
            return "Determine which player a pronoun refers to?";
        case TaskKind::MentionedPlayer:
            return "Predict which player is mentioned by name?";
    }
    throw ValidationError("build_task_prompt: unknown task");
}

std::string build_forecast_prompt() {
    return "Predict the upcoming speakers' turns and then predict the upcoming "
           "utterance of each speaker.";
}

RenderedPrompt assemble(const OnlineSample& sample, std::vector<std::string> image_refs,
                        const ColorMap& colors, const AssembleOptions& opts) {
    if (!image_refs.empty() && sample.frame_window.empty()) {
        throw ValidationError("assemble: images supplied for a sample without frames [" +
                              sample.sample_id + "]");
    }

    std::vector<Turn> window = sample.dialogue_window;
    if (window.empty()) {
        throw ValidationError("assemble: sample has an empty dialogue window [" +
                              sample.sample_id + "]");
    }

    if (sample.task == TaskKind::PronounCoreference && opts.highlight_pronoun_span &&
        sample.query_span) {
        Turn& anchor = window.back();
        const Span span = *sample.query_span;
        if (span.end <= anchor.utterance.size() && span.begin < span.end) {
            anchor.utterance.insert(span.end, "*");
            anchor.utterance.insert(span.begin, "*");
        }
    }

    RenderedPrompt prompt;
    prompt.sample_id = sample.sample_id;
    prompt.image_refs = std::move(image_refs);
    if (!prompt.image_refs.empty() && opts.images_annotated) {
        prompt.system_text = build_system_prompt(colors);
    }

    prompt.user_text = serialize_dialogue(window);
    if (!opts.forecast_context.empty()) {
        prompt.user_text += '\n';
        prompt.user_text += opts.forecast_context;
    }
    if (opts.include_task_query) {
        prompt.user_text += '\n';
        prompt.user_text += build_task_prompt(sample.task);
    }
    if (opts.include_forecast_query) {
        prompt.user_text += '\n';
        prompt.user_text += build_forecast_prompt();
    }
    return prompt;
}

std::string prompt_to_json_line(const RenderedPrompt& prompt) {
    json object;
    object["system"] = prompt.system_text;
    object["user"] = prompt.user_text;
    object["images"] = prompt.image_refs;
    object["sample_id"] = prompt.sample_id;
    return object.dump();
}

RenderedPrompt prompt_from_json_line(std::string_view line) {
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
        throw ParseError("prompt line: invalid JSON object");
    }
    RenderedPrompt prompt;
    prompt.system_text = object.at("system").get<std::string>();
    prompt.user_text = object.at("user").get<std::string>();
    prompt.image_refs = object.at("images").get<std::vector<std::string>>();
    prompt.sample_id = object.at("sample_id").get<std::string>();
    return prompt;
}

}  // namespace mmsi
