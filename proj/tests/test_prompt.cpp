#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mmsi/dataset.hpp"
#include "mmsi/error.hpp"
#include "mmsi/prompt.hpp"
#include "support/synthetic.hpp"

using namespace mmsi;

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t at = haystack.find(needle); at != std::string::npos;
         at = haystack.find(needle, at + needle.size())) {
        ++count;
    }
    return count;
}

std::size_t count_lines(const std::string& text) {
    if (text.empty()) return 0;
    return count_occurrences(text, "\n") + 1;
}

OnlineSample sample_with_window(int turns, TaskKind task = TaskKind::SpeakingTarget) {
    OnlineSample sample;
    sample.sample_id = "s-0000-test";
    sample.task = task;
    for (int i = 0; i < turns; ++i) {
        sample.dialogue_window.push_back(
            {PlayerId{i % 3}, "line " + std::to_string(i), i * 2.0, i * 2.0 + 1.5});
    }
    sample.query_time_t = turns * 2.0;
    sample.ground_truth = PlayerId{1};
    return sample;
}

}  // namespace

TEST_CASE("system prompt renders the exact color-mapping sentence") {
    CHECK(build_system_prompt(assign_colors(6)) ==
          "The red, blue, green, yellow, purple, and orange colors correspond to "
          "Player0, Player1, Player2, Player3, Player4, and Player5, respectively.");
    CHECK(build_system_prompt(assign_colors(2)) ==
          "The red and blue colors correspond to Player0 and Player1, respectively.");
    CHECK(build_system_prompt(assign_colors(1)) ==
          "The red color corresponds to Player0.");
    CHECK(build_system_prompt(assign_colors(3)) ==
          "The red, blue, and green colors correspond to Player0, Player1, and "
          "Player2, respectively.");
}

TEST_CASE("dialogue serialization") {
    std::vector<Turn> window{{PlayerId{0}, "I'm the troublemaker.", 0.0, 1.0}};
    CHECK(serialize_dialogue(window) == "[Player0]: I'm the troublemaker.");

    window.push_back({PlayerId{4}, "No, you are not.", 1.5, 2.5});
    CHECK(serialize_dialogue(window) ==
          "[Player0]: I'm the troublemaker.\n[Player4]: No, you are not.");

    SUBCASE("newlines inside an utterance become spaces") {
        window[1].utterance = "two\nlines";
        std::string text = serialize_dialogue(window);
        CHECK(text == "[Player0]: I'm the troublemaker.\n[Player4]: two lines");
    }
    SUBCASE("empty window is an error") {
        CHECK_THROWS_AS(serialize_dialogue(std::vector<Turn>{}), ValidationError);
    }
}

TEST_CASE("task prompts are the three fixed strings") {
    CHECK(build_task_prompt(TaskKind::SpeakingTarget) ==
          "Identify which player the speaker is talking to?");
    CHECK(build_task_prompt(TaskKind::PronounCoreference) ==
          "Determine which player a pronoun refers to?");
    CHECK(build_task_prompt(TaskKind::MentionedPlayer) ==
          "Predict which player is mentioned by name?");
}

TEST_CASE("forecast prompt is fixed, spelling normalized") {
    const std::string prompt = build_forecast_prompt();
    CHECK(prompt ==
          "Predict the upcoming speakers' turns and then predict the upcoming "
          "utterance of each speaker.");
    CHECK(prompt.find("speakers' turns") != std::string::npos);
    CHECK(prompt.find("utterance") != std::string::npos);
    CHECK(prompt.find("upcomping") == std::string::npos);
    CHECK(build_forecast_prompt() == prompt);  // idempotent
}

TEST_CASE("assemble layout: dialogue lines then the task query") {
    OnlineSample sample = sample_with_window(10);
    ColorMap colors = assign_colors(6);
    RenderedPrompt prompt = assemble(sample, {}, colors);

    // 10 dialogue lines then exactly one task query as the final line.
    CHECK(count_lines(prompt.user_text) == 11);
    const std::string query = build_task_prompt(TaskKind::SpeakingTarget);
    CHECK(count_occurrences(prompt.user_text, query) == 1);
    CHECK(prompt.user_text.substr(prompt.user_text.size() - query.size()) == query);
    CHECK(prompt.system_text.empty());  // no images, no color sentence
    CHECK(prompt.sample_id == sample.sample_id);

    SUBCASE("forecast query appended when requested") {
        AssembleOptions opts;
        opts.include_forecast_query = true;
        RenderedPrompt with_forecast = assemble(sample, {}, colors, opts);
        CHECK(count_lines(with_forecast.user_text) == 12);
        CHECK(count_occurrences(with_forecast.user_text, build_forecast_prompt()) == 1);
    }

    SUBCASE("assembly is deterministic") {
        CHECK(assemble(sample, {}, colors) == prompt);
    }
}

TEST_CASE("assemble with images carries the color sentence exactly once") {
    OnlineSample sample = sample_with_window(4);
    FrameAnnotation frame;
    frame.timestamp = 1.0;
    sample.frame_window.push_back(frame);

    ColorMap colors = assign_colors(6);
    RenderedPrompt prompt = assemble(sample, {"a.png", "b.png"}, colors);
    CHECK(prompt.image_refs == std::vector<std::string>{"a.png", "b.png"});
    CHECK(count_occurrences(prompt.system_text, "colors correspond to") == 1);

    SUBCASE("raw (unannotated) images carry no color sentence") {
        AssembleOptions opts;
        opts.images_annotated = false;
        CHECK(assemble(sample, {"a.png"}, colors, opts).system_text.empty());
    }
    SUBCASE("grid mode is a single image ref") {
        RenderedPrompt grid = assemble(sample, {"grid.png"}, colors);
        CHECK(grid.image_refs.size() == 1);
    }
    SUBCASE("images without frames are a mismatch") {
        OnlineSample frameless = sample_with_window(4);
        CHECK_THROWS_AS(assemble(frameless, {"a.png"}, colors), ValidationError);
    }
}

TEST_CASE("mentioned-player prompts mask the ground truth") {
    Transcript transcript;
    transcript.session_id = "m";
    transcript.player_count = 6;
    for (int i = 0; i < 6; ++i) {
        transcript.turns.push_back(
            {PlayerId{i % 2}, "filler " + std::to_string(i), i * 2.0, i * 2.0 + 1.0});
    }
    transcript.turns[5].utterance = "I suspect Player4 did the swap";
    std::vector<QueryAnchor> anchors{
        {5, TaskKind::MentionedPlayer, PlayerId{4}, Span{10, 17}}};
    AnnotationTrack track;
    track.session_id = "m";
    auto samples = build_online_samples(transcript, track, anchors, {10, 4});
    REQUIRE(samples.size() == 1);

    RenderedPrompt prompt = assemble(samples[0], {}, assign_colors(6));
    CHECK(count_occurrences(prompt.user_text, "<MASK>") == 1);
    CHECK(prompt.user_text.find("Player4") == std::string::npos);
}

TEST_CASE("pronoun highlighting wraps the span in asterisks") {
    Transcript transcript;
    transcript.session_id = "p";
    transcript.player_count = 6;
    transcript.turns.push_back({PlayerId{0}, "filler", 0.0, 1.0});
    transcript.turns.push_back({PlayerId{2}, "did you swap it", 2.0, 3.0});
    std::vector<QueryAnchor> anchors{
        {1, TaskKind::PronounCoreference, PlayerId{0}, Span{4, 7}}};
    AnnotationTrack track;
    track.session_id = "p";
    auto samples = build_online_samples(transcript, track, anchors, {10, 4});

    RenderedPrompt prompt = assemble(samples[0], {}, assign_colors(6));
    CHECK(prompt.user_text.find("did *you* swap it") != std::string::npos);

    AssembleOptions plain;
    plain.highlight_pronoun_span = false;
    RenderedPrompt unhighlighted = assemble(samples[0], {}, assign_colors(6), plain);
    CHECK(unhighlighted.user_text.find("did you swap it") != std::string::npos);
}

TEST_CASE("dialogue lines in user_text equal serialize_dialogue exactly") {
    std::mt19937_64 rng(23);
    testsupport::CorpusOptions opts;
    opts.turn_count = 30;
    Transcript transcript = testsupport::make_transcript(rng, opts);
    AnnotationTrack track;
    track.session_id = transcript.session_id;
    auto anchors = testsupport::make_anchors(rng, transcript, 10);
    auto samples = build_online_samples(transcript, track, anchors, {10, 4});

    for (const OnlineSample& sample : samples) {
        if (sample.task == TaskKind::PronounCoreference) continue;  // highlighting edits
        RenderedPrompt prompt = assemble(sample, {}, assign_colors(6));
        const std::string dialogue = serialize_dialogue(sample.dialogue_window);
        CHECK(prompt.user_text.rfind(dialogue, 0) == 0);
    }
}

TEST_CASE("prompt json round trip") {
    RenderedPrompt prompt;
    prompt.system_text = "sys";
    prompt.user_text = "user\nlines";
    prompt.image_refs = {"x.png"};
    prompt.sample_id = "id-1";
    std::string line = prompt_to_json_line(prompt);
    CHECK(prompt_from_json_line(line) == prompt);
    CHECK(prompt_to_json_line(prompt_from_json_line(line)) == line);
}
