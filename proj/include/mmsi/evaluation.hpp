// Referent scoring, per-task accuracy aggregation, ablation grids, the
// offline->online gap check, and report emission.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmsi/backend.hpp"
#include "mmsi/dataset.hpp"
#include "mmsi/overlay.hpp"

namespace mmsi {

struct EvalRecord {
    std::string sample_id;
    TaskKind task = TaskKind::SpeakingTarget;
    std::string raw_response;
    std::optional<PlayerId> predicted;  // nullopt = unparseable
    PlayerId ground_truth;
    bool correct = false;
    std::int64_t latency_ms = 0;
    std::string error;  // per-sample backend failure, scored incorrect
};

// Case-insensitive scan for "playerN" tokens. Exactly one distinct player
// mentioned -> that player; zero or several distinct -> unparseable.
std::optional<PlayerId> parse_referent(std::string_view text);

// Exact rational accuracy; rounding happens only at render time.
struct Accuracy {
    long long correct = 0;
    long long total = 0;

    double value() const { return total == 0 ? 0.0 : double(correct) / double(total); }
    std::string fixed4() const;    // "0.6470", half-up from the exact ratio
    std::string percent2() const;  // "64.58"

    friend bool operator==(Accuracy a, Accuracy b) = default;
};

// Per-task accuracy over all records carrying that task; errored and
// unparseable records count as incorrect, never dropped.
std::map<TaskKind, Accuracy> aggregate_accuracy(std::span<const EvalRecord> records);
// Single-task variant; throws ValidationError when no record has the task.
Accuracy aggregate_accuracy(std::span<const EvalRecord> records, TaskKind task);

struct ForecastScore {
    bool exact_sequence = false;
    double per_position = 0.0;  // matches at aligned indices / max(len)
};

ForecastScore score_forecast_speakers(std::span<const PlayerId> predicted,
                                      std::span<const PlayerId> gold);

enum class Modality { L, LV };

std::string_view modality_name(Modality modality);  // "L" / "L+V"

struct AblationConfig {
    std::string model = "baseline";
    Modality modality = Modality::LV;
    bool forecast_enabled = true;
    bool speaker_turns = true;        // coarse component
    bool detailed_utterances = true;  // fine component
    int forecast_k = 4;               // supported ablation values: 2, 4, 8
    bool overlay_enabled = true;      // "Prompt" column
    OverlayOptions overlay{};
    double fps = 1.0;
    bool grid6 = false;

    // Compact, filesystem-safe row tag.
    std::string label() const;
};

struct EvalOptions {
    std::filesystem::path image_dir;   // where rendered PNGs are written
    std::filesystem::path frames_dir;  // base for relative frame_refs
    // Frames whose frame_ref does not resolve render on a blank canvas of
    // this size (the preprocessing resolution).
    int canvas_width = 640;
    int canvas_height = 360;
    int player_count = 6;
    int max_in_flight = 1;
    bool keep_records = true;  // retain per-sample records in the Report
};

struct ReportRow {
    AblationConfig config;
    std::map<TaskKind, Accuracy> accuracy;
    std::size_t record_count = 0;
    std::size_t error_count = 0;
};

struct Report {
    int schema = 1;
    std::vector<ReportRow> rows;
    std::vector<EvalRecord> records;

    std::size_t total_errors() const;
};

// Renders prompts per the ablation (overlay flags, fps/grid, modality L
// drops images), optionally runs coarse-to-fine forecasting before the task
// query, collects one EvalRecord per sample, and aggregates. Per-sample
// backend failures are recorded; the run always completes.
Report run_evaluation(std::span<const OnlineSample> samples, Backend& backend,
                      const AblationConfig& ablation, const EvalOptions& opts);

// One report row per configuration, in order.
Report run_ablation_grid(std::span<const OnlineSample> samples, Backend& backend,
                         std::span<const AblationConfig> grid, const EvalOptions& opts);

// --- Offline -> online gap check ---

struct GapCheckConfig {
    double p_offline = 1.0;  // oracle accuracy with future turns in context
    double p_online = 0.0;   // oracle accuracy without
    int n_per_arm = 1000;
    std::uint64_t seed = 0;
    int player_count = 6;
    double confidence = 0.99;
    // When set, the check refuses to run if the two-proportion bound at the
    // requested confidence exceeds this tolerance (insufficient samples).
    std::optional<double> required_tolerance_pts;
};

struct GapReport {
    double accuracy_offline = 0.0;
    double accuracy_online = 0.0;
    double measured_gap_pts = 0.0;
    double configured_gap_pts = 0.0;
    double binomial_bound_pts = 0.0;  // at the configured confidence
    bool within_bound = false;
    int n_per_arm = 0;

    std::string arrow() const;  // "72.7 -> 59.1" rendered with a real arrow
};

// Synthesizes n samples per arm, answers them with a probabilistic oracle
// that is correct at p_offline when future turns are present in the context
// and at p_online otherwise, then measures the harness-side gap.
GapReport offline_online_gap_check(const GapCheckConfig& cfg);

std::string gap_report_to_json(const GapReport& report);
std::string render_gap_table(const GapReport& report);

// --- Report rendering ---

std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);
std::string render_table(const Report& report);
std::string render_csv(const Report& report);  // comma-separated, same cells

std::string eval_record_to_json_line(const EvalRecord& record);
EvalRecord eval_record_from_json_line(std::string_view line);

// Writes <out_dir>/report.json, report.txt and report.csv.
void emit_report(const Report& report, const std::filesystem::path& out_dir);

}  // namespace mmsi
