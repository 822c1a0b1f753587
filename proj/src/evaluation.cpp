#include "mmsi/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mmsi/error.hpp"
#include "mmsi/forecast.hpp"
#include "mmsi/json_io.hpp"
#include "mmsi/prompt.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

std::string sanitize_for_path(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ||
                          ch == '_' || ch == '.';
        out.push_back(keep ? ch : '_');
    }
    return out;
}

// Half-up rendering of correct/total * scale with `digits` decimals, from
// exact integer arithmetic so reports never drift across platforms.
std::string rational_fixed(long long correct, long long total, int digits,
                           long long scale) {
    if (total == 0) return "-";
    long long factor = scale;
    for (int i = 0; i < digits; ++i) factor *= 10;
    const long long numerator = (2 * correct * factor + total) / (2 * total);
    std::string digits_str = std::to_string(numerator);
    while (digits_str.size() <= std::size_t(digits)) {
        digits_str.insert(digits_str.begin(), '0');
    }
    digits_str.insert(digits_str.size() - std::size_t(digits), ".");
    return digits_str;
}

struct PreparedPrompt {
    RenderedPrompt context;  // dialogue only, used by the forecast stages
    RenderedPrompt answer;   // ends with the task query
    std::vector<std::string> image_refs;
};

// Renders one sample's images per the ablation and assembles its prompts.
PreparedPrompt prepare_prompt(const OnlineSample& sample, const AblationConfig& ablation,
                              const EvalOptions& opts, const ColorMap& colors,
                              const std::string& forecast_context) {
    PreparedPrompt prepared;

    if (ablation.modality == Modality::LV && !sample.frame_window.empty()) {
        AnnotationTrack window_track;
        window_track.session_id.clear();  // per-sample slice, no session check
        window_track.frames = sample.frame_window;
        const double t0 = sample.dialogue_window.front().start;
        const double t1 = sample.query_time_t;
        const SamplingMode mode = ablation.grid6
                                      ? SamplingMode::grid6()
                                      : SamplingMode::per_second(ablation.fps);
        std::vector<FrameAnnotation> sampled = sample_frames(window_track, t0, t1, mode);

        const bool annotate = ablation.overlay_enabled && ablation.overlay.any();
        std::vector<Image> rendered;
        rendered.reserve(sampled.size());
        for (const FrameAnnotation& frame : sampled) {
            Image base;
            std::filesystem::path ref = frame.frame_ref;
            if (ref.is_relative() && !opts.frames_dir.empty()) {
                ref = opts.frames_dir / ref;
            }
            std::error_code ec;
            if (!frame.frame_ref.empty() && std::filesystem::is_regular_file(ref, ec)) {
                base = load_image(ref);
            } else {
                base = Image::filled(opts.canvas_width, opts.canvas_height,
                                     {24, 24, 24});
            }
            rendered.push_back(annotate ? render_overlay(base, frame, colors,
                                                         ablation.overlay)
                                        : std::move(base));
        }

        const std::string stem =
            sanitize_for_path(sample.sample_id) + "_" + sanitize_for_path(ablation.label());
        if (ablation.grid6) {
            Image grid = compose_grid(rendered);
            std::filesystem::path out = opts.image_dir / (stem + "_grid.png");
            save_png(out, grid);
            prepared.image_refs.push_back(out.string());
        } else {
            for (std::size_t i = 0; i < rendered.size(); ++i) {
                std::filesystem::path out =
                    opts.image_dir / (stem + "_" + std::to_string(i) + ".png");
                save_png(out, rendered[i]);
                prepared.image_refs.push_back(out.string());
            }
        }

        AssembleOptions context_opts;
        context_opts.include_task_query = false;
        context_opts.images_annotated = annotate;
        prepared.context = assemble(sample, prepared.image_refs, colors, context_opts);

        AssembleOptions answer_opts;
        answer_opts.images_annotated = annotate;
        answer_opts.forecast_context = forecast_context;
        prepared.answer = assemble(sample, prepared.image_refs, colors, answer_opts);
        return prepared;
    }

    AssembleOptions context_opts;
    context_opts.include_task_query = false;
    prepared.context = assemble(sample, {}, colors, context_opts);

    AssembleOptions answer_opts;
    answer_opts.forecast_context = forecast_context;
    prepared.answer = assemble(sample, {}, colors, answer_opts);
    return prepared;
}

EvalRecord evaluate_one(const OnlineSample& sample, Backend& backend,
                        const AblationConfig& ablation, const EvalOptions& opts,
                        const ColorMap& colors) {
    EvalRecord record;
    record.sample_id = sample.sample_id;
    record.task = sample.task;
    record.ground_truth = sample.ground_truth;

    const auto started = std::chrono::steady_clock::now();
    try {
        PreparedPrompt prepared = prepare_prompt(sample, ablation, opts, colors, "");

        std::string forecast_context;
        if (ablation.forecast_enabled && ablation.forecast_k > 0) {
            ForecastStageOptions stage_opts;
            stage_opts.speaker_turns = ablation.speaker_turns;
            stage_opts.detailed_utterances = ablation.detailed_utterances;
            ForecastResponse forecast = coarse_to_fine_forecast(
                backend, prepared.context, ablation.forecast_k, stage_opts);
            forecast_context = forecast_context_text(forecast);
            if (!forecast_context.empty()) {
                prepared = prepare_prompt(sample, ablation, opts, colors,
                                          forecast_context);
            }
        }

        ChatRequest request;
        request.system = prepared.answer.system_text;
        request.user = prepared.answer.user_text;
        request.images = prepared.answer.image_refs;
        request.sample_id = sample.sample_id;
        record.raw_response = backend.complete(request);
        record.predicted = parse_referent(record.raw_response);
        record.correct = record.predicted && *record.predicted == sample.ground_truth;
    } catch (const std::exception& e) {
        record.error = e.what();
        record.correct = false;
    }
    record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return record;
}

std::string task_column_header(TaskKind task) {
    switch (task) {
        case TaskKind::SpeakingTarget: return "SpeakTarget";
        case TaskKind::PronounCoreference: return "PronounCoref";
        case TaskKind::MentionedPlayer: return "MentionedPlayer";
    }
    return "?";
}

std::vector<std::string> row_cells(const ReportRow& row) {
    const AblationConfig& config = row.config;
    std::vector<std::string> cells;
    cells.push_back(config.model);
    cells.emplace_back(modality_name(config.modality));
    cells.push_back(config.forecast_enabled ? "\xE2\x9C\x93" : "-");
    cells.push_back(config.overlay_enabled && config.overlay.any() ? "\xE2\x9C\x93"
                                                                   : "-");
    cells.push_back(std::to_string(config.forecast_k));
    const bool prompt_on = config.overlay_enabled;
    cells.push_back(prompt_on && config.overlay.text ? "\xE2\x9C\x93" : "-");
    cells.push_back(prompt_on && config.overlay.rect ? "\xE2\x9C\x93" : "-");
    cells.push_back(prompt_on && config.overlay.point ? "\xE2\x9C\x93" : "-");
    {
        std::ostringstream fps;
        fps << config.fps;
        cells.push_back(config.grid6 ? "grid6" : fps.str());
    }
    for (TaskKind task : kAllTasks) {
        auto it = row.accuracy.find(task);
        cells.push_back(it == row.accuracy.end() ? "-" : it->second.percent2());
    }
    cells.push_back(std::to_string(row.record_count));
    cells.push_back(std::to_string(row.error_count));
    return cells;
}

std::vector<std::string> header_cells() {
    std::vector<std::string> cells = {"Model", "Mod",  "Forecast", "Prompt", "Length",
                                      "Text",  "Rect", "Point",    "FPS"};
    for (TaskKind task : kAllTasks) cells.push_back(task_column_header(task));
    cells.push_back("Samples");
    cells.push_back("Errors");
    return cells;
}

// Display width: the check mark is 3 bytes but 1 column.
std::size_t display_width(const std::string& cell) {
    std::size_t width = 0;
    for (std::size_t i = 0; i < cell.size();) {
        unsigned char ch = static_cast<unsigned char>(cell[i]);
        i += ch < 0x80 ? 1 : (ch < 0xE0 ? 2 : (ch < 0xF0 ? 3 : 4));
        ++width;
    }
    return width;
}

json accuracy_to_json(const Accuracy& accuracy) {
    json object;
    object["correct"] = accuracy.correct;
    object["total"] = accuracy.total;
    object["percent"] = accuracy.percent2();
    return object;
}

Accuracy accuracy_from_json(const json& object) {
    Accuracy accuracy;
    accuracy.correct = object.at("correct").get<long long>();
    accuracy.total = object.at("total").get<long long>();
    return accuracy;
}

json ablation_to_json(const AblationConfig& config) {
    json object;
    object["model"] = config.model;
    object["modality"] = std::string(modality_name(config.modality));
    object["forecast_enabled"] = config.forecast_enabled;
    object["speaker_turns"] = config.speaker_turns;
    object["detailed_utterances"] = config.detailed_utterances;
    object["forecast_k"] = config.forecast_k;
    object["overlay_enabled"] = config.overlay_enabled;
    object["overlay_text"] = config.overlay.text;
    object["overlay_rect"] = config.overlay.rect;
    object["overlay_point"] = config.overlay.point;
    object["keypoint_confidence_threshold"] = config.overlay.keypoint_confidence_threshold;
    object["fps"] = config.fps;
    object["grid6"] = config.grid6;
    return object;
}

AblationConfig ablation_from_json(const json& object) {
    AblationConfig config;
    config.model = object.at("model").get<std::string>();
    config.modality = object.at("modality").get<std::string>() == "L" ? Modality::L
                                                                      : Modality::LV;
    config.forecast_enabled = object.at("forecast_enabled").get<bool>();
    config.speaker_turns = object.at("speaker_turns").get<bool>();
    config.detailed_utterances = object.at("detailed_utterances").get<bool>();
    config.forecast_k = object.at("forecast_k").get<int>();
    config.overlay_enabled = object.at("overlay_enabled").get<bool>();
    config.overlay.text = object.at("overlay_text").get<bool>();
    config.overlay.rect = object.at("overlay_rect").get<bool>();
    config.overlay.point = object.at("overlay_point").get<bool>();
    config.overlay.keypoint_confidence_threshold =
        object.at("keypoint_confidence_threshold").get<float>();
    config.fps = object.at("fps").get<double>();
    config.grid6 = object.at("grid6").get<bool>();
    return config;
}

}  // namespace

std::optional<PlayerId> parse_referent(std::string_view text) {
    // Any "playerN" token counts; exactly one distinct index may appear.
    std::set<int> distinct;
    constexpr std::string_view kWord = "player";
    for (std::size_t i = 0; i + kWord.size() < text.size() + 1; ++i) {
        bool match = true;
        for (std::size_t j = 0; j < kWord.size(); ++j) {
            if (std::tolower(static_cast<unsigned char>(text[i + j])) != kWord[j]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        std::size_t digits = i + kWord.size();
        if (digits < text.size() && text[digits] == ' ') ++digits;
        std::size_t end = digits;
        int value = 0;
        while (end < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[end])) && end - digits < 7) {
            value = value * 10 + (text[end] - '0');
            ++end;
        }
        if (end > digits) {
            distinct.insert(value);
            i = end - 1;
        }
    }
    if (distinct.size() != 1) return std::nullopt;
    return PlayerId{*distinct.begin()};
}

std::string Accuracy::fixed4() const { return rational_fixed(correct, total, 4, 1); }

std::string Accuracy::percent2() const {
    return rational_fixed(correct, total, 2, 100);
}

std::map<TaskKind, Accuracy> aggregate_accuracy(std::span<const EvalRecord> records) {
    std::map<TaskKind, Accuracy> accuracy;
    for (const EvalRecord& record : records) {
        Accuracy& entry = accuracy[record.task];
        entry.total += 1;
        if (record.correct) entry.correct += 1;
    }
    return accuracy;
}

Accuracy aggregate_accuracy(std::span<const EvalRecord> records, TaskKind task) {
    Accuracy accuracy;
    for (const EvalRecord& record : records) {
        if (record.task != task) continue;
        accuracy.total += 1;
        if (record.correct) accuracy.correct += 1;
    }
    if (accuracy.total == 0) {
        throw ValidationError("aggregate_accuracy: no records for task '" +
                              std::string(task_name(task)) + "'");
    }
    return accuracy;
}

ForecastScore score_forecast_speakers(std::span<const PlayerId> predicted,
                                      std::span<const PlayerId> gold) {
    ForecastScore score;
    const std::size_t longest = std::max(predicted.size(), gold.size());
    if (longest == 0) {
        return {true, 1.0};
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < std::min(predicted.size(), gold.size()); ++i) {
        if (predicted[i] == gold[i]) ++matches;
    }
    score.per_position = double(matches) / double(longest);
    score.exact_sequence =
        predicted.size() == gold.size() && matches == predicted.size();
    return score;
}

std::string_view modality_name(Modality modality) {
    return modality == Modality::L ? "L" : "L+V";
}

std::string AblationConfig::label() const {
    std::string overlay_tag;
    if (!overlay_enabled || !overlay.any()) {
        overlay_tag = "raw";
    } else {
        if (overlay.text) overlay_tag += "t";
        if (overlay.rect) overlay_tag += "r";
        if (overlay.point) overlay_tag += "p";
    }
    std::ostringstream out;
    out << (modality == Modality::L ? "L" : "LV") << "_"
        << (forecast_enabled ? "fc" : "nofc");
    if (forecast_enabled) {
        out << (speaker_turns ? "S" : "") << (detailed_utterances ? "U" : "") << "k"
            << forecast_k;
    }
    out << "_" << overlay_tag << "_";
    if (grid6) {
        out << "grid6";
    } else {
        out << "fps" << fps;
    }
    return sanitize_for_path(out.str());
}

std::size_t Report::total_errors() const {
    std::size_t errors = 0;
    for (const ReportRow& row : rows) errors += row.error_count;
    return errors;
}

Report run_evaluation(std::span<const OnlineSample> samples, Backend& backend,
                      const AblationConfig& ablation, const EvalOptions& opts) {
    std::vector<AblationConfig> grid{ablation};
    return run_ablation_grid(samples, backend, grid, opts);
}

Report run_ablation_grid(std::span<const OnlineSample> samples, Backend& backend,
                         std::span<const AblationConfig> grid, const EvalOptions& opts) {
    if (opts.max_in_flight < 1) {
        throw ValidationError("run_evaluation: max_in_flight must be >= 1");
    }
    if (!opts.image_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(opts.image_dir, ec);
    }
    const ColorMap colors = assign_colors(opts.player_count);

    Report report;
    for (const AblationConfig& config : grid) {
        std::vector<EvalRecord> records(samples.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                std::size_t index = next.fetch_add(1);
                if (index >= samples.size()) break;
                records[index] =
                    evaluate_one(samples[index], backend, config, opts, colors);
            }
        };
        const std::size_t worker_count =
            std::min<std::size_t>(std::size_t(opts.max_in_flight), samples.size());
        if (worker_count <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(worker_count);
            for (std::size_t i = 0; i < worker_count; ++i) pool.emplace_back(worker);
            for (std::thread& thread : pool) thread.join();
        }

        ReportRow row;
        row.config = config;
        row.accuracy = aggregate_accuracy(records);
        row.record_count = records.size();
        for (const EvalRecord& record : records) {
            if (!record.error.empty()) ++row.error_count;
        }
        report.rows.push_back(std::move(row));
        if (opts.keep_records) {
            report.records.insert(report.records.end(),
                                  std::make_move_iterator(records.begin()),
                                  std::make_move_iterator(records.end()));
        }
    }
    return report;
}

GapReport offline_online_gap_check(const GapCheckConfig& cfg) {
    if (!(cfg.p_online >= 0.0 && cfg.p_online <= cfg.p_offline && cfg.p_offline <= 1.0)) {
        throw ValidationError("gap check requires 0 <= p_online <= p_offline <= 1");
    }
    if (cfg.n_per_arm < 1) throw ValidationError("gap check: n_per_arm must be >= 1");
    if (cfg.player_count < 2 || cfg.player_count > 6) {
        throw ValidationError("gap check: player_count must be in [2, 6]");
    }

    // Two-proportion bound at the requested confidence (normal approx).
    const double z = cfg.confidence >= 0.999  ? 3.2905
                     : cfg.confidence >= 0.99 ? 2.5758
                     : cfg.confidence >= 0.95 ? 1.9600
                                              : 1.6449;
    const double variance =
        cfg.p_offline * (1.0 - cfg.p_offline) / cfg.n_per_arm +
        cfg.p_online * (1.0 - cfg.p_online) / cfg.n_per_arm;
    const double bound_pts = z * std::sqrt(variance) * 100.0;
    if (cfg.required_tolerance_pts && bound_pts > *cfg.required_tolerance_pts) {
        throw ValidationError(
            "gap check: insufficient sample count for the requested tolerance (bound " +
            std::to_string(bound_pts) + " pts)");
    }

    constexpr std::string_view kFutureHeader = "Upcoming dialogue:";

    // Deterministic probabilistic oracle: answers the ground truth with the
    // arm's configured rate, a wrong player otherwise.
    struct OracleBackend final : Backend {
        double p_offline, p_online;
        int player_count;
        std::mt19937_64 rng;
        std::uniform_real_distribution<double> unit{0.0, 1.0};

        OracleBackend(double off, double on, int players, std::uint64_t seed)
            : p_offline(off), p_online(on), player_count(players), rng(seed) {}

        std::string complete(const ChatRequest& request) override {
            auto truth_at = request.user.rfind("#gt=");
            if (truth_at == std::string::npos) {
                throw BackendError("gap oracle: missing ground-truth tag",
                                   request.sample_id);
            }
            const int truth = std::stoi(request.user.substr(truth_at + 4));
            const bool offline =
                request.user.find("Upcoming dialogue:") != std::string::npos;
            const double p = offline ? p_offline : p_online;
            const bool correct = unit(rng) < p;
            const int answer = correct ? truth : (truth + 1) % player_count;
            return player_label(PlayerId{answer});
        }
        std::string name() const override { return "gap-oracle"; }
    };

    OracleBackend oracle(cfg.p_offline, cfg.p_online, cfg.player_count, cfg.seed);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> pick_player(0, cfg.player_count - 1);

    auto run_arm = [&](bool offline) {
        std::vector<EvalRecord> records;
        records.reserve(std::size_t(cfg.n_per_arm));
        for (int i = 0; i < cfg.n_per_arm; ++i) {
            const int truth = pick_player(rng);
            std::string user;
            for (int line = 0; line < 4; ++line) {
                user += "[" + player_label(PlayerId{pick_player(rng)}) +
                        "]: synthetic history line\n";
            }
            if (offline) {
                user += std::string(kFutureHeader) + "\n";
                user += "[" + player_label(PlayerId{pick_player(rng)}) +
                        "]: synthetic future line\n";
            }
            user += build_task_prompt(TaskKind::SpeakingTarget);
            user += "\n#gt=" + std::to_string(truth);

            ChatRequest request;
            request.user = std::move(user);
            request.sample_id = (offline ? "off-" : "on-") + std::to_string(i);

            EvalRecord record;
            record.sample_id = request.sample_id;
            record.task = TaskKind::SpeakingTarget;
            record.ground_truth = PlayerId{truth};
            record.raw_response = oracle.complete(request);
            record.predicted = parse_referent(record.raw_response);
            record.correct = record.predicted && *record.predicted == record.ground_truth;
            records.push_back(std::move(record));
        }
        return aggregate_accuracy(records, TaskKind::SpeakingTarget);
    };

    const Accuracy offline_acc = run_arm(true);
    const Accuracy online_acc = run_arm(false);

    GapReport report;
    report.accuracy_offline = offline_acc.value();
    report.accuracy_online = online_acc.value();
    report.measured_gap_pts =
        (offline_acc.value() - online_acc.value()) * 100.0;
    report.configured_gap_pts = (cfg.p_offline - cfg.p_online) * 100.0;
    report.binomial_bound_pts = bound_pts;
    report.within_bound =
        std::abs(report.measured_gap_pts - report.configured_gap_pts) <= bound_pts;
    report.n_per_arm = cfg.n_per_arm;
    return report;
}

std::string GapReport::arrow() const {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.1f \xE2\x86\x92 %.1f",
                  accuracy_offline * 100.0, accuracy_online * 100.0);
    return buffer;
}

std::string gap_report_to_json(const GapReport& report) {
    json object;
    object["schema"] = 1;
    object["accuracy_offline"] = report.accuracy_offline;
    object["accuracy_online"] = report.accuracy_online;
    object["measured_gap_pts"] = report.measured_gap_pts;
    object["configured_gap_pts"] = report.configured_gap_pts;
    object["binomial_bound_pts"] = report.binomial_bound_pts;
    object["within_bound"] = report.within_bound;
    object["n_per_arm"] = report.n_per_arm;
    object["arrow"] = report.arrow();
    return object.dump(2) + "\n";
}

std::string render_gap_table(const GapReport& report) {
    std::ostringstream out;
    out << "Offline -> Online (speaking target, synthetic oracle)\n";
    out << "  " << report.arrow() << "\n";
    char line[160];
    std::snprintf(line, sizeof(line),
                  "  gap: %.1f pts (configured %.1f, bound +/-%.1f at 99%%, n=%d/arm)%s\n",
                  report.measured_gap_pts, report.configured_gap_pts,
                  report.binomial_bound_pts, report.n_per_arm,
                  report.within_bound ? "" : "  ** OUTSIDE BOUND **");
    out << line;
    return out.str();
}

std::string eval_record_to_json_line(const EvalRecord& record) {
    json object;
    object["sample_id"] = record.sample_id;
    object["task"] = std::string(task_name(record.task));
    object["raw_response"] = record.raw_response;
    object["predicted"] = record.predicted ? json(record.predicted->index) : json(nullptr);
    object["ground_truth"] = record.ground_truth.index;
    object["correct"] = record.correct;
    object["latency_ms"] = record.latency_ms;
    object["error"] = record.error;
    return object.dump();
}

EvalRecord eval_record_from_json_line(std::string_view line) {
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
        throw ParseError("record line: invalid JSON object");
    }
    EvalRecord record;
    record.sample_id = object.at("sample_id").get<std::string>();
    auto task = task_from_name(object.at("task").get<std::string>());
    if (!task) throw ParseError("record line: unknown task");
    record.task = *task;
    record.raw_response = object.at("raw_response").get<std::string>();
    if (!object.at("predicted").is_null()) {
        record.predicted = PlayerId{object.at("predicted").get<int>()};
    }
    record.ground_truth.index = object.at("ground_truth").get<int>();
    record.correct = object.at("correct").get<bool>();
    record.latency_ms = object.at("latency_ms").get<std::int64_t>();
    record.error = object.at("error").get<std::string>();
    return record;
}

std::string report_to_json(const Report& report) {
    json doc;
    doc["schema"] = report.schema;
    json rows = json::array();
    for (const ReportRow& row : report.rows) {
        json row_json;
        row_json["config"] = ablation_to_json(row.config);
        json accuracy;
        for (const auto& [task, value] : row.accuracy) {
            accuracy[std::string(task_name(task))] = accuracy_to_json(value);
        }
        row_json["accuracy"] = std::move(accuracy);
        row_json["record_count"] = row.record_count;
        row_json["error_count"] = row.error_count;
        rows.push_back(std::move(row_json));
    }
    doc["rows"] = std::move(rows);
    json records = json::array();
    for (const EvalRecord& record : report.records) {
        records.push_back(json::parse(eval_record_to_json_line(record)));
    }
    doc["records"] = std::move(records);
    return doc.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ParseError("report: invalid JSON");
    }
    Report report;
    report.schema = doc.at("schema").get<int>();
    for (const json& row_json : doc.at("rows")) {
        ReportRow row;
        row.config = ablation_from_json(row_json.at("config"));
        for (const auto& item : row_json.at("accuracy").items()) {
            auto task = task_from_name(item.key());
            if (!task) throw ParseError("report: unknown task '" + item.key() + "'");
            row.accuracy[*task] = accuracy_from_json(item.value());
        }
        row.record_count = row_json.at("record_count").get<std::size_t>();
        row.error_count = row_json.at("error_count").get<std::size_t>();
        report.rows.push_back(std::move(row));
    }
    if (doc.contains("records")) {
        for (const json& record_json : doc.at("records")) {
            report.records.push_back(eval_record_from_json_line(record_json.dump()));
        }
    }
    return report;
}

std::string render_table(const Report& report) {
    std::vector<std::vector<std::string>> table;
    table.push_back(header_cells());
    for (const ReportRow& row : report.rows) table.push_back(row_cells(row));

    std::vector<std::size_t> widths(table.front().size(), 0);
    for (const auto& row : table) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], display_width(row[c]));
        }
    }

    std::ostringstream out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            if (c > 0) out << "  ";
            out << table[r][c];
            const std::size_t pad = widths[c] - display_width(table[r][c]);
            for (std::size_t i = 0; i < pad; ++i) out << ' ';
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) {
                total += widths[c] + (c > 0 ? 2 : 0);
            }
            out << std::string(total, '-') << '\n';
        }
    }
    return out.str();
}

std::string render_csv(const Report& report) {
    auto escape = [](const std::string& cell) {
        if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
        std::string quoted = "\"";
        for (char ch : cell) {
            if (ch == '"') quoted += '"';
            quoted += ch;
        }
        quoted += '"';
        return quoted;
    };
    std::ostringstream out;
    const auto header = header_cells();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c > 0) out << ',';
        out << escape(header[c]);
    }
    out << '\n';
    for (const ReportRow& row : report.rows) {
        const auto cells = row_cells(row);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c > 0) out << ',';
            out << escape(cells[c]);
        }
        out << '\n';
    }
    return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    write_text_file(out_dir / "report.json", report_to_json(report));
    write_text_file(out_dir / "report.txt", render_table(report));
    write_text_file(out_dir / "report.csv", render_csv(report));
}

}  // namespace mmsi
