// Supervised fine-tuning record export: one JSON line per sample pairing the
// rendered input prompt with the joint target text (task answer followed by
// the serialized forecast).
#pragma once

#include <span>
#include <string>

#include "mmsi/dataset.hpp"
#include "mmsi/prompt.hpp"

namespace mmsi {

// Target text for one sample: "PlayerN" answer, then the coarse and fine
// forecast lines when the target is non-empty.
std::string sft_target_text(const OnlineSample& sample);

// Metadata header line carrying the downstream training configuration
// (LoRA rank 512 / alpha 16 / dropout 0.05 on the q/v projections, task
// learning rates, batch and epoch settings). Training itself is out of
// scope for this harness; the header exists for downstream trainers.
std::string sft_header_line(const WindowConfig& cfg);

// Header line followed by one record per (sample, prompt) pair. The two
// spans must be aligned one-to-one by sample_id.
std::string export_sft_records(std::span<const OnlineSample> samples,
                               std::span<const RenderedPrompt> prompts,
                               const WindowConfig& cfg = {});

}  // namespace mmsi
