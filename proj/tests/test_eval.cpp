#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "mmsi/error.hpp"
#include "mmsi/evaluation.hpp"
#include "mmsi/forecast.hpp"
#include "support/synthetic.hpp"

using namespace mmsi;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("mmsi_eval_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Records every request and answers with a fixed policy.
class RecordingBackend final : public Backend {
public:
    explicit RecordingBackend(std::string reply = "Player0") : reply_(std::move(reply)) {}

    std::string complete(const ChatRequest& request) override {
        std::lock_guard<std::mutex> lock(mutex_);
        requests.push_back(request);
        return reply_;
    }
    std::string name() const override { return "recording"; }

    std::vector<ChatRequest> requests;

private:
    std::mutex mutex_;
    std::string reply_;
};

std::vector<OnlineSample> small_corpus(std::mt19937_64& rng, std::size_t anchor_count,
                                       int turn_count = 40) {
    testsupport::CorpusOptions opts;
    opts.turn_count = turn_count;
    Transcript transcript = testsupport::make_transcript(rng, opts, "eval");
    AnnotationTrack track = testsupport::make_track(rng, transcript, opts);
    auto anchors = testsupport::make_anchors(rng, transcript, anchor_count);
    return build_online_samples(transcript, track, anchors, {10, 4});
}

}  // namespace

TEST_CASE("parse_referent recognizes exactly one distinct player") {
    CHECK(parse_referent("Player3")->index == 3);
    CHECK(parse_referent("The answer is player3.")->index == 3);
    CHECK(parse_referent("PLAYER 4 did it")->index == 4);
    CHECK(!parse_referent("Player3 or Player4"));
    CHECK(!parse_referent("no names at all"));
    CHECK(!parse_referent(""));
    // Repeated mentions of the same player are fine.
    CHECK(parse_referent("Player2... yes, Player2!")->index == 2);
}

TEST_CASE("accuracy arithmetic is exact") {
    Accuracy accuracy{647, 1000};
    CHECK(accuracy.fixed4() == "0.6470");
    CHECK(accuracy.percent2() == "64.70");

    CHECK(Accuracy{1000, 1000}.fixed4() == "1.0000");
    CHECK(Accuracy{0, 3}.fixed4() == "0.0000");
    CHECK(Accuracy{1, 3}.fixed4() == "0.3333");
    CHECK(Accuracy{2, 3}.fixed4() == "0.6667");  // half-up at the 4th decimal
    CHECK(Accuracy{6458, 10000}.percent2() == "64.58");
}

TEST_CASE("aggregate_accuracy matches a brute-force recount") {
    std::mt19937_64 rng(12);
    std::vector<EvalRecord> records;
    for (int i = 0; i < 10000; ++i) {
        EvalRecord record;
        record.task = kAllTasks[rng() % 3];
        record.correct = (rng() % 100) < 60;
        records.push_back(record);
    }

    auto aggregated = aggregate_accuracy(records);
    for (TaskKind task : kAllTasks) {
        long long correct = 0, total = 0;
        for (const EvalRecord& record : records) {
            if (record.task != task) continue;
            ++total;
            if (record.correct) ++correct;
        }
        CHECK(aggregated[task].correct == correct);
        CHECK(aggregated[task].total == total);
    }

    SUBCASE("permutation invariance") {
        auto shuffled = records;
        for (int round = 0; round < 10; ++round) {
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            CHECK(aggregate_accuracy(shuffled) == aggregated);
        }
    }
    SUBCASE("single-task variant requires records") {
        std::vector<EvalRecord> none;
        CHECK_THROWS_AS(aggregate_accuracy(none, TaskKind::SpeakingTarget),
                        ValidationError);
    }
}

TEST_CASE("score_forecast_speakers alignment") {
    std::vector<PlayerId> a{{0}, {4}, {0}, {3}};
    auto perfect = score_forecast_speakers(a, a);
    CHECK(perfect.exact_sequence);
    CHECK(perfect.per_position == doctest::Approx(1.0));

    std::vector<PlayerId> predicted{{0}, {4}};
    std::vector<PlayerId> gold{{0}, {3}, {2}, {1}};
    auto partial = score_forecast_speakers(predicted, gold);
    CHECK(!partial.exact_sequence);
    CHECK(partial.per_position == doctest::Approx(0.25));

    auto vacuous = score_forecast_speakers({}, {});
    CHECK(vacuous.exact_sequence);
    CHECK(vacuous.per_position == doctest::Approx(1.0));
}

TEST_CASE("run_evaluation end to end with the baseline backend") {
    std::mt19937_64 rng(77);
    auto samples = small_corpus(rng, 20);
    REQUIRE(samples.size() >= 10);

    BaselineBackend backend(3);
    EvalOptions opts;
    opts.image_dir = temp_dir("baseline") / "images";
    AblationConfig config;
    config.model = backend.name();
    config.modality = Modality::L;  // no images for speed here

    Report report = run_evaluation(samples, backend, config, opts);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].record_count == samples.size());
    CHECK(report.records.size() == samples.size());
    CHECK(report.rows[0].error_count == 0);
    for (const EvalRecord& record : report.records) {
        CHECK(!record.sample_id.empty());
        CHECK(record.error.empty());
    }

    // Deterministic across runs.
    Report again = run_evaluation(samples, backend, config, opts);
    CHECK(report_to_json(again) == report_to_json(report));
}

TEST_CASE("modality L issues zero image refs") {
    std::mt19937_64 rng(78);
    auto samples = small_corpus(rng, 8);
    RecordingBackend backend;
    EvalOptions opts;
    opts.image_dir = temp_dir("modL") / "images";
    AblationConfig config;
    config.modality = Modality::L;
    config.forecast_enabled = false;

    run_evaluation(samples, backend, config, opts);
    REQUIRE(!backend.requests.empty());
    for (const ChatRequest& request : backend.requests) {
        CHECK(request.images.empty());
    }
}

TEST_CASE("modality L+V renders annotated frames and system prompts") {
    std::mt19937_64 rng(79);
    auto samples = small_corpus(rng, 4);
    RecordingBackend backend;
    EvalOptions opts;
    opts.image_dir = temp_dir("modLV") / "images";
    AblationConfig config;
    config.modality = Modality::LV;
    config.forecast_enabled = false;

    run_evaluation(samples, backend, config, opts);
    REQUIRE(!backend.requests.empty());
    bool any_images = false;
    for (const ChatRequest& request : backend.requests) {
        if (!request.images.empty()) {
            any_images = true;
            CHECK(request.system.find("colors correspond to") != std::string::npos);
            for (const std::string& ref : request.images) {
                CHECK(std::filesystem::exists(ref));
            }
        }
    }
    CHECK(any_images);

    SUBCASE("grid6 issues exactly one image per sample request") {
        RecordingBackend grid_backend;
        AblationConfig grid_config = config;
        grid_config.grid6 = true;
        EvalOptions grid_opts = opts;
        grid_opts.image_dir = temp_dir("grid") / "images";
        run_evaluation(samples, grid_backend, grid_config, grid_opts);
        for (const ChatRequest& request : grid_backend.requests) {
            if (!request.images.empty()) CHECK(request.images.size() == 1);
        }
    }
}

TEST_CASE("forecast context is generated before the task query") {
    std::mt19937_64 rng(80);
    auto samples = small_corpus(rng, 3);
    BaselineBackend backend(1);
    RecordingBackend recorder;  // second pass records the final prompts

    EvalOptions opts;
    opts.image_dir = temp_dir("fc") / "images";
    AblationConfig config;
    config.modality = Modality::L;
    config.forecast_enabled = true;
    config.forecast_k = 4;

    // The baseline produces parseable forecasts, so the final task request
    // must contain the serialized forecast context.
    Report report = run_evaluation(samples, backend, config, opts);
    CHECK(report.rows[0].error_count == 0);

    // Verify prompt structure via a recording pass on a scripted pipeline:
    // run only the task request by disabling forecasting and injecting the
    // context manually is covered in prompt tests; here assert the pipeline
    // made 3 calls per sample (coarse, fine, answer).
    RecordingBackend counter("The upcoming speakers' turns: Player0");
    run_evaluation(samples, counter, config, opts);
    CHECK(counter.requests.size() == samples.size() * 3);

    std::size_t with_context = 0;
    for (const ChatRequest& request : counter.requests) {
        const bool is_answer =
            request.user.find("Identify which player") != std::string::npos ||
            request.user.find("pronoun refers to") != std::string::npos ||
            request.user.find("mentioned by name") != std::string::npos;
        if (is_answer &&
            request.user.find("The upcoming speakers' turns:") != std::string::npos) {
            ++with_context;
        }
    }
    CHECK(with_context == samples.size());
}

TEST_CASE("per-sample backend failures are recorded, run completes") {
    class FlakyBackend final : public Backend {
    public:
        std::string complete(const ChatRequest& request) override {
            if (request.sample_id.find("-0002-") != std::string::npos) {
                throw BackendError("boom", request.sample_id);
            }
            return "Player1";
        }
        std::string name() const override { return "flaky"; }
    };

    std::mt19937_64 rng(81);
    auto samples = small_corpus(rng, 10);
    FlakyBackend backend;
    EvalOptions opts;
    opts.image_dir = temp_dir("flaky") / "images";
    AblationConfig config;
    config.modality = Modality::L;
    config.forecast_enabled = false;

    Report report = run_evaluation(samples, backend, config, opts);
    CHECK(report.rows[0].record_count == samples.size());
    std::size_t errored = 0;
    for (const EvalRecord& record : report.records) {
        if (!record.error.empty()) {
            ++errored;
            CHECK(!record.correct);
        }
    }
    CHECK(errored == report.rows[0].error_count);
}

TEST_CASE("ablation grid yields one row per configuration") {
    std::mt19937_64 rng(82);
    auto samples = small_corpus(rng, 6);
    BaselineBackend backend(2);
    EvalOptions opts;
    opts.image_dir = temp_dir("grid_rows") / "images";

    std::vector<AblationConfig> grid;
    for (int k : {2, 4, 8}) {
        AblationConfig config;
        config.modality = Modality::L;
        config.forecast_k = k;
        grid.push_back(config);
    }
    Report report = run_ablation_grid(samples, backend, grid, opts);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].config.forecast_k == 2);
    CHECK(report.rows[1].config.forecast_k == 4);
    CHECK(report.rows[2].config.forecast_k == 8);
}

TEST_CASE("gap check: deterministic extremes and binomial bound") {
    GapCheckConfig cfg;
    cfg.p_offline = 1.0;
    cfg.p_online = 0.0;
    cfg.n_per_arm = 500;
    cfg.seed = 9;
    GapReport report = offline_online_gap_check(cfg);
    CHECK(report.measured_gap_pts == doctest::Approx(100.0));
    CHECK(report.accuracy_offline == doctest::Approx(1.0));
    CHECK(report.accuracy_online == doctest::Approx(0.0));
    CHECK(report.within_bound);

    SUBCASE("equal rates give ~zero gap") {
        GapCheckConfig same;
        same.p_offline = 0.6;
        same.p_online = 0.6;
        same.n_per_arm = 4000;
        same.seed = 10;
        GapReport zero = offline_online_gap_check(same);
        CHECK(zero.configured_gap_pts == doctest::Approx(0.0));
        CHECK(zero.within_bound);
    }
    SUBCASE("precondition and sample-size errors") {
        GapCheckConfig bad;
        bad.p_offline = 0.4;
        bad.p_online = 0.6;  // online above offline
        CHECK_THROWS_AS(offline_online_gap_check(bad), ValidationError);

        GapCheckConfig tiny;
        tiny.p_offline = 0.727;
        tiny.p_online = 0.591;
        tiny.n_per_arm = 50;
        tiny.required_tolerance_pts = 2.0;
        CHECK_THROWS_AS(offline_online_gap_check(tiny), ValidationError);
    }
    SUBCASE("arrow rendering") {
        CHECK(report.arrow().find("100.0") != std::string::npos);
        CHECK(report.arrow().find("\xE2\x86\x92") != std::string::npos);
    }
}

TEST_CASE("report renders consistently across formats") {
    std::mt19937_64 rng(83);
    auto samples = small_corpus(rng, 12);
    BaselineBackend backend(4);
    EvalOptions opts;
    opts.image_dir = temp_dir("report") / "images";
    AblationConfig config;
    config.modality = Modality::L;
    Report report = run_evaluation(samples, backend, config, opts);

    // JSON round trip preserves rows and records.
    Report back = report_from_json(report_to_json(report));
    CHECK(back.rows.size() == report.rows.size());
    CHECK(back.records.size() == report.records.size());
    CHECK(report_to_json(back) == report_to_json(report));

    // Table and CSV agree cell-for-cell.
    std::string table = render_table(report);
    std::string csv = render_csv(report);
    CHECK(table.find("Model") != std::string::npos);
    CHECK(table.find("Length") != std::string::npos);
    for (const ReportRow& row : report.rows) {
        for (const auto& [task, accuracy] : row.accuracy) {
            CHECK(table.find(accuracy.percent2()) != std::string::npos);
            CHECK(csv.find(accuracy.percent2()) != std::string::npos);
        }
    }

    // Emission writes the three files.
    auto out = temp_dir("emit");
    emit_report(report, out);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK(std::filesystem::exists(out / "report.txt"));
    CHECK(std::filesystem::exists(out / "report.csv"));

    // Header-only table for an empty report.
    Report empty;
    std::string empty_table = render_table(empty);
    CHECK(empty_table.find("Model") != std::string::npos);
}

TEST_CASE("eval record json round trip") {
    EvalRecord record;
    record.sample_id = "x-0001-speaking_target";
    record.task = TaskKind::SpeakingTarget;
    record.raw_response = "Player2";
    record.predicted = PlayerId{2};
    record.ground_truth = PlayerId{2};
    record.correct = true;
    record.latency_ms = 12;
    std::string line = eval_record_to_json_line(record);
    EvalRecord back = eval_record_from_json_line(line);
    CHECK(back.sample_id == record.sample_id);
    CHECK(back.predicted == record.predicted);
    CHECK(back.correct);
    CHECK(eval_record_to_json_line(back) == line);

    record.predicted.reset();
    line = eval_record_to_json_line(record);
    CHECK(!eval_record_from_json_line(line).predicted);
}
