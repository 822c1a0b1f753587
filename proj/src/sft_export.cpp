#include "mmsi/sft_export.hpp"

#include <json.hpp>

#include "mmsi/error.hpp"
#include "mmsi/forecast.hpp"

namespace mmsi {

using nlohmann::json;

std::string sft_target_text(const OnlineSample& sample) {
    std::string target = player_label(sample.ground_truth);
    if (!sample.forecast_target.empty()) {
        auto [coarse, fine] = serialize_forecast(sample.forecast_target);
        target += '\n';
        target += coarse;
        if (!fine.empty()) {
            target += '\n';
            target += fine;
        }
    }
    return target;
}

std::string sft_header_line(const WindowConfig& cfg) {
    json header;
    header["type"] = "header";
    header["schema"] = 1;
    header["d_turns"] = cfg.d_turns;
    header["k_forecast"] = cfg.k_forecast;
    json training;
    training["lora"] = {{"rank", 512},
                        {"alpha", 16},
                        {"dropout", 0.05},
                        {"target_modules", {"q_proj", "v_proj"}}};
    training["learning_rate"] = {{"speaking_target", 1e-4},
                                 {"pronoun_coreference", 1e-3},
                                 {"mentioned_player", 1e-4}};
    training["batch_size"] = 1;
    training["gradient_accumulation_steps"] = 4;
    training["epochs"] = 5;
    header["training_config"] = std::move(training);
    return header.dump();
}

std::string export_sft_records(std::span<const OnlineSample> samples,
                               std::span<const RenderedPrompt> prompts,
                               const WindowConfig& cfg) {
    if (samples.size() != prompts.size()) {
        throw ValidationError("sft export: " + std::to_string(samples.size()) +
                              " samples vs " + std::to_string(prompts.size()) +
                              " prompts");
    }
    std::string out = sft_header_line(cfg);
    out += '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].sample_id != prompts[i].sample_id) {
            throw ValidationError("sft export: misaligned pair at index " +
                                  std::to_string(i) + " (" + samples[i].sample_id +
                                  " vs " + prompts[i].sample_id + ")");
        }
        json record;
        record["type"] = "record";
        record["sample_id"] = samples[i].sample_id;
        json input;
        input["system"] = prompts[i].system_text;
        input["user"] = prompts[i].user_text;
        input["images"] = prompts[i].image_refs;
        record["input"] = std::move(input);
        record["target"] = sft_target_text(samples[i]);
        out += record.dump();
        out += '\n';
    }
    return out;
}

}  // namespace mmsi
