// mmsi: single entry point for the pipeline — dataset construction, prompt
// rendering, evaluation, the offline/online gap check, and report rendering.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmsi/backend.hpp"
#include "mmsi/dataset.hpp"
#include "mmsi/error.hpp"
#include "mmsi/evaluation.hpp"
#include "mmsi/forecast.hpp"
#include "mmsi/json_io.hpp"
#include "mmsi/manifest.hpp"
#include "mmsi/overlay.hpp"
#include "mmsi/prompt.hpp"
#include "mmsi/sft_export.hpp"
#include "mmsi/version.hpp"

namespace {

using namespace mmsi;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitSampleErrors = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct CommonOptions {
    bool deterministic = false;
    bool strict = true;
    std::uint64_t seed = 0;
};

ParseOptions parse_options_for(const CommonOptions& common) {
    ParseOptions opts;
    opts.strict = common.strict;
    return opts;
}

// Combined render output line: the sample plus its rendered prompt.
struct PromptedSample {
    OnlineSample sample;
    RenderedPrompt prompt;
    bool annotated = false;
};

std::string prompted_to_line(const PromptedSample& entry) {
    json object;
    object["sample"] = json::parse(sample_to_json_line(entry.sample));
    object["prompt"] = json::parse(prompt_to_json_line(entry.prompt));
    object["annotated"] = entry.annotated;
    return object.dump();
}

PromptedSample prompted_from_line(std::string_view line) {
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
        throw ParseError("prompts file: invalid JSON line");
    }
    PromptedSample entry;
    entry.sample = sample_from_json_line(object.at("sample").dump());
    entry.prompt = prompt_from_json_line(object.at("prompt").dump());
    entry.annotated = object.value("annotated", false);
    return entry;
}

std::vector<PromptedSample> load_prompted(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<PromptedSample> entries;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = std::string_view(text).substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        if (trim(line).empty()) continue;
        entries.push_back(prompted_from_line(line));
    }
    return entries;
}

// Ablation grid spec: semicolon-separated axes, comma-separated values.
//   k=2,4,8;overlay=text,text+rect,text+rect+point;fps=1.0;modality=L+V;
//   forecast=on,off;components=speakers+utterances,speakers,utterances
std::vector<AblationConfig> parse_ablation_grid(const std::string& spec,
                                                const AblationConfig& base) {
    std::vector<int> ks{base.forecast_k};
    std::vector<OverlayOptions> overlays{base.overlay};
    std::vector<bool> overlay_enabled{base.overlay_enabled};
    struct FpsValue { double fps; bool grid6; };
    std::vector<FpsValue> fps_values{{base.fps, base.grid6}};
    std::vector<Modality> modalities{base.modality};
    std::vector<bool> forecasts{base.forecast_enabled};
    struct Components { bool speakers; bool utterances; };
    std::vector<Components> components{{base.speaker_turns, base.detailed_utterances}};

    std::istringstream axes(spec);
    std::string axis;
    while (std::getline(axes, axis, ';')) {
        std::string_view a = trim(axis);
        if (a.empty()) continue;
        std::size_t eq = a.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("ablation axis '" + std::string(a) + "': expected name=values");
        }
        std::string name(trim(a.substr(0, eq)));
        std::vector<std::string> values;
        {
            std::istringstream list{std::string(a.substr(eq + 1))};
            std::string value;
            while (std::getline(list, value, ',')) {
                values.emplace_back(trim(value));
            }
        }
        if (values.empty()) throw ParseError("ablation axis '" + name + "': no values");

        if (name == "k") {
            ks.clear();
            for (const std::string& value : values) ks.push_back(std::stoi(value));
        } else if (name == "overlay") {
            overlays.clear();
            overlay_enabled.clear();
            for (const std::string& value : values) {
                OverlayOptions overlay;
                overlay.text = overlay.rect = overlay.point = false;
                overlay.keypoint_confidence_threshold =
                    base.overlay.keypoint_confidence_threshold;
                bool enabled = true;
                if (value == "raw" || value == "none") {
                    enabled = false;
                } else {
                    std::istringstream parts{value};
                    std::string part;
                    while (std::getline(parts, part, '+')) {
                        if (part == "text") overlay.text = true;
                        else if (part == "rect") overlay.rect = true;
                        else if (part == "point") overlay.point = true;
                        else throw ParseError("ablation overlay value '" + value +
                                              "': unknown part '" + part + "'");
                    }
                }
                overlays.push_back(overlay);
                overlay_enabled.push_back(enabled);
            }
        } else if (name == "fps") {
            fps_values.clear();
            for (const std::string& value : values) {
                if (value == "grid6") {
                    fps_values.push_back({1.0, true});
                } else {
                    fps_values.push_back({std::stod(value), false});
                }
            }
        } else if (name == "modality") {
            modalities.clear();
            for (const std::string& value : values) {
                if (value == "L") modalities.push_back(Modality::L);
                else if (value == "L+V" || value == "LV") modalities.push_back(Modality::LV);
                else throw ParseError("ablation modality '" + value + "' unknown");
            }
        } else if (name == "forecast") {
            forecasts.clear();
            for (const std::string& value : values) {
                if (value == "on") forecasts.push_back(true);
                else if (value == "off") forecasts.push_back(false);
                else throw ParseError("ablation forecast '" + value + "' unknown");
            }
        } else if (name == "components") {
            components.clear();
            for (const std::string& value : values) {
                if (value == "speakers+utterances" || value == "both") {
                    components.push_back({true, true});
                } else if (value == "speakers") {
                    components.push_back({true, false});
                } else if (value == "utterances") {
                    components.push_back({false, true});
                } else if (value == "none") {
                    components.push_back({false, false});
                } else {
                    throw ParseError("ablation components '" + value + "' unknown");
                }
            }
        } else {
            throw ParseError("ablation axis '" + name + "' unknown");
        }
    }

    std::vector<AblationConfig> grid;
    for (int k : ks) {
        for (std::size_t o = 0; o < overlays.size(); ++o) {
            for (const FpsValue& fps : fps_values) {
                for (Modality modality : modalities) {
                    for (bool forecast : forecasts) {
                        for (const Components& component : components) {
                            AblationConfig config = base;
                            config.forecast_k = k;
                            config.overlay = overlays[o];
                            config.overlay_enabled = overlay_enabled[o];
                            config.fps = fps.fps;
                            config.grid6 = fps.grid6;
                            config.modality = modality;
                            config.forecast_enabled = forecast;
                            config.speaker_turns = component.speakers;
                            config.detailed_utterances = component.utterances;
                            grid.push_back(std::move(config));
                        }
                    }
                }
            }
        }
    }
    return grid;
}

int cmd_build_dataset(const CommonOptions& common, const std::string& transcripts,
                      const std::string& annotations, const std::string& anchors,
                      const std::string& task_filter, int d, int k,
                      const std::string& session_id, int player_count, bool sft,
                      const std::string& out_dir) {
    ParseOptions popts = parse_options_for(common);
    Transcript transcript = load_transcript_jsonl(transcripts, session_id, player_count, popts);
    AnnotationTrack track = load_annotation_track(annotations, popts);
    track.validate(transcript.player_count);
    std::vector<QueryAnchor> anchor_list = load_anchors_jsonl(anchors, popts);

    if (task_filter != "all") {
        auto task = task_from_name(task_filter);
        if (!task) throw ParseError("unknown task filter '" + task_filter + "'");
        std::erase_if(anchor_list,
                      [&](const QueryAnchor& anchor) { return anchor.task != *task; });
    }

    WindowConfig cfg{d, k};
    std::vector<OnlineSample> samples =
        build_online_samples(transcript, track, anchor_list, cfg);

    const std::filesystem::path out{out_dir};
    save_samples_jsonl(out / "samples.jsonl", samples);

    if (sft) {
        // Training prompts: raw frame refs at the 1 fps default, combined
        // task + forecast query, no overlay annotations at this stage.
        const ColorMap colors = assign_colors(transcript.player_count);
        std::vector<RenderedPrompt> prompts;
        prompts.reserve(samples.size());
        for (const OnlineSample& sample : samples) {
            std::vector<std::string> refs;
            if (!sample.frame_window.empty()) {
                AnnotationTrack window_track;
                window_track.frames = sample.frame_window;
                for (const FrameAnnotation& frame :
                     sample_frames(window_track, sample.dialogue_window.front().start,
                                   sample.query_time_t, SamplingMode::per_second(1.0))) {
                    refs.push_back(frame.frame_ref);
                }
            }
            AssembleOptions aopts;
            aopts.include_forecast_query = true;
            aopts.images_annotated = false;
            prompts.push_back(assemble(sample, std::move(refs), colors, aopts));
        }
        write_text_file(out / "sft.jsonl", export_sft_records(samples, prompts, cfg));
    }

    json config;
    config["command"] = "build-dataset";
    config["d"] = d;
    config["k"] = k;
    config["task"] = task_filter;
    config["session_id"] = transcript.session_id;
    config["player_count"] = transcript.player_count;
    config["sft"] = sft;
    config["strict"] = common.strict;
    write_manifest(out, make_manifest("build-dataset", config.dump(),
                                      {transcripts, annotations, anchors}, common.seed,
                                      common.deterministic));
    std::cout << "wrote " << samples.size() << " samples to "
              << (out / "samples.jsonl").string() << "\n";
    return kExitOk;
}

int cmd_render(const CommonOptions& common, const std::string& samples_path,
               const std::string& frames_dir, bool prompt_text, bool prompt_rect,
               bool prompt_point, const std::string& mode_spec, int player_count,
               const std::string& out_dir) {
    std::vector<OnlineSample> samples = load_samples_jsonl(samples_path);

    SamplingMode mode = SamplingMode::per_second(1.0);
    if (mode_spec == "grid6") {
        mode = SamplingMode::grid6();
    } else if (mode_spec.rfind("fps:", 0) == 0) {
        mode = SamplingMode::per_second(std::stod(mode_spec.substr(4)));
    } else {
        throw ParseError("--mode must be fps:<rate> or grid6");
    }

    OverlayOptions overlay;
    overlay.text = prompt_text;
    overlay.rect = prompt_rect;
    overlay.point = prompt_point;
    const bool annotate = overlay.any();

    const std::filesystem::path out{out_dir};
    const std::filesystem::path image_dir = out / "images";
    std::filesystem::create_directories(image_dir);

    const ColorMap colors = assign_colors(player_count);
    std::string lines;
    for (const OnlineSample& sample : samples) {
        std::vector<std::string> refs;
        if (!sample.frame_window.empty()) {
            AnnotationTrack window_track;
            window_track.frames = sample.frame_window;
            std::vector<FrameAnnotation> sampled =
                sample_frames(window_track, sample.dialogue_window.front().start,
                              sample.query_time_t, mode);
            std::vector<Image> rendered;
            for (const FrameAnnotation& frame : sampled) {
                std::filesystem::path ref = frame.frame_ref;
                if (ref.is_relative() && !frames_dir.empty()) {
                    ref = std::filesystem::path(frames_dir) / ref;
                }
                std::error_code ec;
                Image base = (!frame.frame_ref.empty() &&
                              std::filesystem::is_regular_file(ref, ec))
                                 ? load_image(ref)
                                 : Image::filled(640, 360, {24, 24, 24});
                rendered.push_back(
                    annotate ? render_overlay(base, frame, colors, overlay)
                             : std::move(base));
            }
            std::string stem = sample.sample_id;
            for (char& ch : stem) {
                if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' &&
                    ch != '_') {
                    ch = '_';
                }
            }
            if (mode.kind == SamplingMode::Kind::Grid6) {
                std::filesystem::path path = image_dir / (stem + "_grid.png");
                save_png(path, compose_grid(rendered));
                refs.push_back(path.string());
            } else {
                for (std::size_t i = 0; i < rendered.size(); ++i) {
                    std::filesystem::path path =
                        image_dir / (stem + "_" + std::to_string(i) + ".png");
                    save_png(path, rendered[i]);
                    refs.push_back(path.string());
                }
            }
        }

        AssembleOptions aopts;
        aopts.images_annotated = annotate;
        PromptedSample entry;
        entry.prompt = assemble(sample, std::move(refs), colors, aopts);
        entry.sample = sample;
        entry.annotated = annotate;
        lines += prompted_to_line(entry);
        lines += '\n';
    }
    write_text_file(out / "prompts.jsonl", lines);

    json config;
    config["command"] = "render";
    config["prompt_text"] = prompt_text;
    config["prompt_rect"] = prompt_rect;
    config["prompt_point"] = prompt_point;
    config["mode"] = mode_spec;
    config["player_count"] = player_count;
    write_manifest(out, make_manifest("render", config.dump(), {samples_path},
                                      common.seed, common.deterministic));
    std::cout << "rendered " << samples.size() << " prompts to "
              << (out / "prompts.jsonl").string() << "\n";
    return kExitOk;
}

int cmd_eval(const CommonOptions& common, const std::string& prompts_path,
             const std::string& backend_kind, const std::string& fixture,
             const std::string& endpoint_config, const std::string& ablation_spec,
             const std::string& frames_dir, int player_count, int jobs,
             const std::string& out_dir) {
    std::vector<PromptedSample> entries = load_prompted(prompts_path);
    std::vector<OnlineSample> samples;
    samples.reserve(entries.size());
    for (PromptedSample& entry : entries) samples.push_back(std::move(entry.sample));

    std::unique_ptr<Backend> backend;
    int default_jobs = 1;
    if (backend_kind == "replay") {
        if (fixture.empty()) throw ParseError("--backend replay requires --fixture");
        backend = std::make_unique<ReplayBackend>(std::filesystem::path(fixture));
        default_jobs = static_cast<int>(std::thread::hardware_concurrency());
    } else if (backend_kind == "baseline") {
        backend = std::make_unique<BaselineBackend>(common.seed);
        default_jobs = static_cast<int>(std::thread::hardware_concurrency());
    } else if (backend_kind == "endpoint") {
        if (endpoint_config.empty()) {
            throw ParseError("--backend endpoint requires --config");
        }
        EndpointConfig config = load_endpoint_config(endpoint_config);
        default_jobs = config.max_in_flight;
        backend = std::make_unique<EndpointBackend>(std::move(config));
    } else {
        throw ParseError("--backend must be endpoint, replay or baseline");
    }

    AblationConfig base;
    base.model = backend->name();
    std::vector<AblationConfig> grid =
        ablation_spec.empty() ? std::vector<AblationConfig>{base}
                              : parse_ablation_grid(ablation_spec, base);

    const std::filesystem::path out{out_dir};
    EvalOptions opts;
    opts.image_dir = out / "images";
    opts.frames_dir = frames_dir;
    opts.player_count = player_count;
    opts.max_in_flight = jobs > 0 ? jobs : std::max(1, default_jobs);

    Report report = run_ablation_grid(samples, *backend, grid, opts);
    emit_report(report, out);
    std::string record_lines;
    for (const EvalRecord& record : report.records) {
        record_lines += eval_record_to_json_line(record);
        record_lines += '\n';
    }
    write_text_file(out / "records.jsonl", record_lines);

    json config;
    config["command"] = "eval";
    config["backend"] = backend_kind;
    config["ablation"] = ablation_spec;
    config["player_count"] = player_count;
    config["jobs"] = opts.max_in_flight;
    std::vector<std::filesystem::path> inputs{prompts_path};
    if (!fixture.empty()) inputs.push_back(fixture);
    if (!endpoint_config.empty()) inputs.push_back(endpoint_config);
    write_manifest(out, make_manifest("eval", config.dump(), inputs, common.seed,
                                      common.deterministic));

    std::cout << render_table(report);
    const std::size_t errors = report.total_errors();
    if (errors > 0) {
        std::cerr << errors << " sample(s) recorded backend errors\n";
        return kExitSampleErrors;
    }
    return kExitOk;
}

int cmd_gap_check(const CommonOptions& common, double p_offline, double p_online,
                  int n, double tolerance, const std::string& out_dir) {
    GapCheckConfig cfg;
    cfg.p_offline = p_offline;
    cfg.p_online = p_online;
    cfg.n_per_arm = n;
    cfg.seed = common.seed;
    if (tolerance > 0) cfg.required_tolerance_pts = tolerance;

    GapReport report = offline_online_gap_check(cfg);
    const std::filesystem::path out{out_dir};
    write_text_file(out / "gap.json", gap_report_to_json(report));
    write_text_file(out / "gap.txt", render_gap_table(report));

    json config;
    config["command"] = "gap-check";
    config["p_offline"] = p_offline;
    config["p_online"] = p_online;
    config["n"] = n;
    config["tolerance"] = tolerance;
    write_manifest(out, make_manifest("gap-check", config.dump(), {}, common.seed,
                                      common.deterministic));

    std::cout << render_gap_table(report);
    return kExitOk;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
    Report report = report_from_json(read_text_file(in_path));
    std::string rendered;
    if (format == "table") rendered = render_table(report);
    else if (format == "json") rendered = report_to_json(report);
    else if (format == "csv") rendered = render_csv(report);
    else throw ParseError("--format must be table, json or csv");

    if (out_path.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(out_path, rendered);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online multi-party social interaction evaluation harness"};
    app.set_version_flag("--version", std::string(mmsi::kToolVersion));
    app.require_subcommand(1);

    CommonOptions common;
    app.add_flag("--deterministic", common.deterministic,
                 "zero manifest timestamps for byte-identical outputs");
    app.add_flag("!--no-strict", common.strict,
                 "ignore unknown input fields with a warning");
    app.add_option("--seed", common.seed, "seed for randomized components");

    // build-dataset
    auto* build = app.add_subcommand("build-dataset",
                                     "build causal online samples from a corpus");
    std::string transcripts, annotations, anchors, session_id;
    std::string task_filter = "all";
    int d = 10, k = 4, player_count_in = 0;
    bool sft = false;
    std::string out_dir;
    build->add_option("--transcripts", transcripts, "turn-per-line JSONL")->required();
    build->add_option("--annotations", annotations, "annotation JSON document")->required();
    build->add_option("--anchors", anchors, "anchor JSONL")->required();
    build->add_option("--task", task_filter,
                      "all|speaking_target|pronoun_coreference|mentioned_player");
    build->add_option("--d", d, "history window in turns (default 10)");
    build->add_option("--k", k, "forecast horizon in turns (default 4)");
    build->add_option("--session-id", session_id, "override the session id");
    build->add_option("--player-count", player_count_in,
                      "override the inferred player count");
    build->add_flag("--sft", sft, "also export supervised fine-tuning records");
    build->add_option("--out", out_dir, "output directory")->required();

    // render
    auto* render = app.add_subcommand("render", "render visual prompts for samples");
    std::string samples_path, frames_dir, mode_spec = "fps:1.0";
    bool prompt_text = false, prompt_rect = false, prompt_point = false;
    int player_count = 6;
    render->add_option("--samples", samples_path, "samples.jsonl")->required();
    render->add_option("--frames-dir", frames_dir, "base directory for frame refs");
    render->add_flag("--prompt-text", prompt_text, "overlay identity labels");
    render->add_flag("--prompt-rect", prompt_rect, "overlay bounding boxes");
    render->add_flag("--prompt-point", prompt_point, "overlay body keypoints");
    render->add_option("--mode", mode_spec, "fps:<rate> or grid6");
    render->add_option("--player-count", player_count, "players in the color map");
    render->add_option("--out", out_dir, "output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "run the evaluation end-to-end");
    std::string prompts_path, backend_kind, fixture, endpoint_config, ablation_spec;
    int jobs = 0;
    eval->add_option("--prompts", prompts_path, "prompts.jsonl from render")->required();
    eval->add_option("--backend", backend_kind, "endpoint|replay|baseline")->required();
    eval->add_option("--fixture", fixture, "replay fixture JSON");
    eval->add_option("--config", endpoint_config, "endpoint key=value config file");
    eval->add_option("--ablation", ablation_spec,
                     "grid spec, e.g. k=2,4,8;overlay=text,text+rect+point");
    eval->add_option("--frames-dir", frames_dir, "base directory for frame refs");
    eval->add_option("--player-count", player_count, "players in the color map");
    eval->add_option("--jobs", jobs, "max in-flight samples (default: auto)");
    eval->add_option("--out", out_dir, "output directory")->required();

    // gap-check
    auto* gap = app.add_subcommand("gap-check", "offline vs online oracle gap check");
    double p_offline = 0.727, p_online = 0.591, tolerance = 0.0;
    int n = 5000;
    gap->add_option("--p-offline", p_offline, "oracle accuracy with future context");
    gap->add_option("--p-online", p_online, "oracle accuracy without future context");
    gap->add_option("--n", n, "samples per arm");
    gap->add_option("--tolerance", tolerance,
                    "required tolerance in points (error when unattainable)");
    gap->add_option("--out", out_dir, "output directory")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "re-render a report file");
    std::string report_in, report_format = "table", report_out;
    report_cmd->add_option("--in", report_in, "report.json")->required();
    report_cmd->add_option("--format", report_format, "table|json|csv");
    report_cmd->add_option("--out", report_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (build->parsed()) {
            return cmd_build_dataset(common, transcripts, annotations, anchors,
                                     task_filter, d, k, session_id, player_count_in,
                                     sft, out_dir);
        }
        if (render->parsed()) {
            return cmd_render(common, samples_path, frames_dir, prompt_text,
                              prompt_rect, prompt_point, mode_spec, player_count,
                              out_dir);
        }
        if (eval->parsed()) {
            return cmd_eval(common, prompts_path, backend_kind, fixture,
                            endpoint_config, ablation_spec, frames_dir, player_count,
                            jobs, out_dir);
        }
        if (gap->parsed()) {
            return cmd_gap_check(common, p_offline, p_online, n, tolerance, out_dir);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_in, report_format, report_out);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
