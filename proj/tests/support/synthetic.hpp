// Deterministic synthetic corpora for tests: randomized transcripts with
// embedded mentions and pronouns, annotation tracks, anchors, and transcripts
// driven by a known first-order speaker chain.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mmsi/dataset.hpp"
#include "mmsi/types.hpp"

namespace mmsi::testsupport {

struct CorpusOptions {
    int player_count = 6;
    int turn_count = 40;
    double mention_probability = 0.25;  // embed a "PlayerK" mention
    double pronoun_probability = 0.25;  // embed a queried pronoun
    double frame_fps = 1.0;
    int frame_width = 64;
    int frame_height = 36;
};

Transcript make_transcript(std::mt19937_64& rng, const CorpusOptions& opts,
                           const std::string& session_id = "synthetic");

AnnotationTrack make_track(std::mt19937_64& rng, const Transcript& transcript,
                           const CorpusOptions& opts);

// Anchors derived from the transcript: SpeakingTarget anywhere, Mentioned-
// Player on turns containing a "PlayerK" mention (span covers it, ground
// truth K), PronounCoreference on turns containing a marked pronoun.
std::vector<QueryAnchor> make_anchors(std::mt19937_64& rng, const Transcript& transcript,
                                      std::size_t max_count);

// Transcript whose speaker sequence follows a cyclic-dominant first-order
// chain: after player p, player (p+1) % n speaks with probability
// `dominance`, anyone else uniformly otherwise.
Transcript make_markov_transcript(std::mt19937_64& rng, int player_count,
                                  int turn_count, double dominance);

// The fixed two-person scene behind the frozen overlay golden image.
FrameAnnotation golden_two_person_frame();

// Independent index-arithmetic oracle for the dialogue window of anchor i
// with history d: [first, last] turn indices, inclusive.
struct WindowRange {
    std::size_t first = 0;
    std::size_t last = 0;
};
WindowRange window_oracle(std::size_t anchor_index, int d_turns);

// Independent oracle for the forecast slice: turn indices
// anchor+1 .. anchor+min(k, remaining), inclusive; empty when none.
std::vector<std::size_t> forecast_oracle(std::size_t anchor_index, int k,
                                         std::size_t turn_count);

}  // namespace mmsi::testsupport
