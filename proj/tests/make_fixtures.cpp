// Writes the bundled synthetic corpus fixture (transcript, annotations,
// anchors, frame images). Deterministic under the fixed seed; run manually
// when the corpus format changes and commit the outputs.
// Usage: mmsi_make_fixtures <out_dir>
#include <filesystem>
#include <iostream>
#include <random>

#include "mmsi/image.hpp"
#include "mmsi/json_io.hpp"
#include "support/synthetic.hpp"

using namespace mmsi;

int main(int argc, char** argv) {
    const std::filesystem::path out_dir =
        argc > 1 ? argv[1] : "tests/data/fixture_corpus";
    std::filesystem::create_directories(out_dir / "frames");

    std::mt19937_64 rng(20240);
    testsupport::CorpusOptions opts;
    opts.player_count = 6;
    opts.turn_count = 90;
    opts.mention_probability = 0.3;
    opts.pronoun_probability = 0.3;
    Transcript transcript = testsupport::make_transcript(rng, opts, "demo");
    AnnotationTrack track = testsupport::make_track(rng, transcript, opts);
    auto anchors = testsupport::make_anchors(rng, transcript, 50);
    if (anchors.size() != 50) {
        std::cerr << "expected 50 anchors, got " << anchors.size() << "\n";
        return 1;
    }

    save_transcript_jsonl(out_dir / "transcript.jsonl", transcript);
    save_annotation_track(out_dir / "annotations.json", track);
    write_text_file(out_dir / "anchors.jsonl", anchors_to_jsonl(anchors));

    // One small distinct image per annotated frame.
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
        Image frame = Image::filled(opts.frame_width, opts.frame_height, {20, 24, 28});
        // A moving band makes each frame's bytes unique.
        const int band = int(i % std::size_t(opts.frame_width));
        for (int y = 0; y < frame.height; ++y) {
            frame.set(band, y, {200, 180, 40});
            frame.set((band + 1) % frame.width, y, {120, 60, 160});
        }
        save_png(out_dir / track.frames[i].frame_ref, frame);
    }

    std::cout << "wrote fixture corpus (" << transcript.turns.size() << " turns, "
              << track.frames.size() << " frames, " << anchors.size()
              << " anchors) to " << out_dir << "\n";
    return 0;
}
