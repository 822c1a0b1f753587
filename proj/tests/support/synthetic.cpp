#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace mmsi::testsupport {

namespace {

constexpr std::array<const char*, 10> kPhrases = {
    "I saw the card in the middle.",
    "That vote makes no sense to me.",
    "We should talk about last night.",
    "Someone swapped my card, I am sure.",
    "I was the troublemaker at the start.",
    "The seer looked at two cards.",
    "Nobody claimed the robber yet.",
    "Let us count the votes again.",
    "I did not move at all last night.",
    "That story keeps changing.",
};

constexpr std::array<const char*, 4> kPronouns = {"you", "he", "she", "they"};

}  // namespace

Transcript make_transcript(std::mt19937_64& rng, const CorpusOptions& opts,
                           const std::string& session_id) {
    std::uniform_int_distribution<int> pick_player(0, opts.player_count - 1);
    std::uniform_int_distribution<std::size_t> pick_phrase(0, kPhrases.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_pronoun(0, kPronouns.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> gap(0.1, 0.6);
    std::uniform_real_distribution<double> duration(1.8, 3.8);  // ~2.8 s average

    Transcript transcript;
    transcript.session_id = session_id;
    transcript.player_count = opts.player_count;

    double t = 0.0;
    for (int i = 0; i < opts.turn_count; ++i) {
        Turn turn;
        turn.speaker = PlayerId{pick_player(rng)};
        turn.start = t;
        turn.end = t + duration(rng);
        t = turn.start + gap(rng) + 0.05;  // strictly increasing starts
        if (t < turn.start + 0.05) t = turn.start + 0.05;

        std::string utterance = kPhrases[pick_phrase(rng)];
        const double roll = unit(rng);
        if (roll < opts.mention_probability) {
            int mentioned = pick_player(rng);
            utterance = "I think " + player_label(PlayerId{mentioned}) +
                        " is lying about the swap.";
        } else if (roll < opts.mention_probability + opts.pronoun_probability) {
            utterance = "Honestly, " + std::string(kPronouns[pick_pronoun(rng)]) +
                        " started this argument.";
        }
        turn.utterance = std::move(utterance);
        transcript.turns.push_back(std::move(turn));
    }
    transcript.validate();
    return transcript;
}

AnnotationTrack make_track(std::mt19937_64& rng, const Transcript& transcript,
                           const CorpusOptions& opts) {
    AnnotationTrack track;
    track.session_id = transcript.session_id;
    track.source_width = opts.frame_width;
    track.source_height = opts.frame_height;
    if (transcript.turns.empty()) return track;

    std::uniform_real_distribution<float> jitter(-2.0f, 2.0f);
    const double t_end = transcript.turns.back().end;
    const double step = 1.0 / opts.frame_fps;
    int frame_index = 0;
    for (double t = 0.0; t <= t_end + 1e-9; t += step, ++frame_index) {
        FrameAnnotation frame;
        frame.timestamp = t;
        frame.frame_ref = "frames/f" + std::to_string(frame_index) + ".png";
        const float slot_width =
            static_cast<float>(opts.frame_width) / transcript.player_count;
        for (int p = 0; p < transcript.player_count; ++p) {
            PersonAnnotation person;
            person.player = PlayerId{p};
            const float base_x = slot_width * p + slot_width * 0.15f;
            person.bbox.x = std::max(0.0f, base_x + jitter(rng) * 0.3f);
            person.bbox.y = opts.frame_height * 0.2f;
            person.bbox.width = std::max(2.0f, slot_width * 0.7f);
            person.bbox.height = opts.frame_height * 0.7f;
            const float cx = person.bbox.x + person.bbox.width / 2.0f;
            const float cy = person.bbox.y + person.bbox.height / 2.0f;
            for (std::size_t j = 0; j < kKeypointCount; ++j) {
                person.keypoints[j].x = cx + jitter(rng);
                person.keypoints[j].y = cy + jitter(rng);
                person.keypoints[j].confidence = (j % 5 == 4) ? 0.0f : 0.9f;
            }
            frame.persons.push_back(std::move(person));
        }
        track.frames.push_back(std::move(frame));
    }
    track.validate(transcript.player_count);
    return track;
}

std::vector<QueryAnchor> make_anchors(std::mt19937_64& rng, const Transcript& transcript,
                                      std::size_t max_count) {
    std::vector<QueryAnchor> anchors;
    for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
        const Turn& turn = transcript.turns[i];
        const std::string& text = turn.utterance;

        std::size_t mention_at = text.find("Player");
        if (mention_at != std::string::npos) {
            std::size_t digits = mention_at + 6;
            std::size_t end = digits;
            int value = 0;
            while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) {
                value = value * 10 + (text[end] - '0');
                ++end;
            }
            if (end > digits) {
                QueryAnchor anchor;
                anchor.turn_index = i;
                anchor.task = TaskKind::MentionedPlayer;
                anchor.ground_truth = PlayerId{value};
                anchor.span = Span{mention_at, end};
                anchors.push_back(anchor);
                continue;
            }
        }

        for (const char* pronoun : kPronouns) {
            std::string needle = std::string(" ") + pronoun + " ";
            std::size_t at = text.find(needle);
            if (at != std::string::npos) {
                QueryAnchor anchor;
                anchor.turn_index = i;
                anchor.task = TaskKind::PronounCoreference;
                std::uniform_int_distribution<int> pick(0, transcript.player_count - 1);
                anchor.ground_truth = PlayerId{pick(rng)};
                anchor.span = Span{at + 1, at + 1 + std::string(pronoun).size()};
                anchors.push_back(anchor);
                break;
            }
        }
        if (!anchors.empty() && anchors.back().turn_index == i) continue;

        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < 0.5) {
            QueryAnchor anchor;
            anchor.turn_index = i;
            anchor.task = TaskKind::SpeakingTarget;
            // Plausible target: the next distinct speaker when one exists.
            PlayerId target = turn.speaker;
            for (std::size_t j = i + 1; j < transcript.turns.size(); ++j) {
                if (!(transcript.turns[j].speaker == turn.speaker)) {
                    target = transcript.turns[j].speaker;
                    break;
                }
            }
            std::uniform_int_distribution<int> pick(0, transcript.player_count - 1);
            anchor.ground_truth = target == turn.speaker ? PlayerId{pick(rng)} : target;
            anchors.push_back(anchor);
        }
    }
    if (anchors.size() > max_count) anchors.resize(max_count);
    return anchors;
}

Transcript make_markov_transcript(std::mt19937_64& rng, int player_count,
                                  int turn_count, double dominance) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_player(0, player_count - 1);

    Transcript transcript;
    transcript.session_id = "markov";
    transcript.player_count = player_count;

    int speaker = pick_player(rng);
    double t = 0.0;
    for (int i = 0; i < turn_count; ++i) {
        Turn turn;
        turn.speaker = PlayerId{speaker};
        turn.utterance = "turn " + std::to_string(i);
        turn.start = t;
        turn.end = t + 2.8;
        t += 3.0;
        transcript.turns.push_back(std::move(turn));

        if (unit(rng) < dominance) {
            speaker = (speaker + 1) % player_count;
        } else {
            speaker = pick_player(rng);
        }
    }
    transcript.validate();
    return transcript;
}

FrameAnnotation golden_two_person_frame() {
    FrameAnnotation frame;
    frame.timestamp = 1.0;
    PersonAnnotation a;
    a.player = PlayerId{0};
    a.bbox = {40.0f, 60.0f, 120.0f, 200.0f};
    const float cx = 100.0f, cy = 140.0f;
    const float pose[17][2] = {
        {cx, cy - 60},      {cx - 6, cy - 66},  {cx + 6, cy - 66},  {cx - 14, cy - 62},
        {cx + 14, cy - 62}, {cx - 26, cy - 40}, {cx + 26, cy - 40}, {cx - 34, cy - 10},
        {cx + 34, cy - 10}, {cx - 36, cy + 16}, {cx + 36, cy + 16}, {cx - 16, cy + 10},
        {cx + 16, cy + 10}, {cx - 18, cy + 48}, {cx + 18, cy + 48}, {cx - 18, cy + 84},
        {cx + 18, cy + 84},
    };
    for (int i = 0; i < 17; ++i) {
        a.keypoints[std::size_t(i)] = {pose[i][0], pose[i][1], 0.9f};
    }
    a.keypoints[4].confidence = 0.1f;  // below the default threshold

    PersonAnnotation b = a;
    b.player = PlayerId{3};
    b.bbox = {360.0f, 80.0f, 140.0f, 220.0f};
    for (auto& kp : b.keypoints) kp.x += 280.0f;

    frame.persons = {a, b};
    return frame;
}

WindowRange window_oracle(std::size_t anchor_index, int d_turns) {
    WindowRange range;
    range.last = anchor_index;
    const std::size_t d = static_cast<std::size_t>(d_turns);
    range.first = anchor_index + 1 >= d ? anchor_index + 1 - d : 0;
    return range;
}

std::vector<std::size_t> forecast_oracle(std::size_t anchor_index, int k,
                                         std::size_t turn_count) {
    std::vector<std::size_t> indices;
    if (k <= 0 || anchor_index + 1 >= turn_count) return indices;
    const std::size_t last =
        std::min(turn_count - 1, anchor_index + static_cast<std::size_t>(k));
    for (std::size_t i = anchor_index + 1; i <= last; ++i) indices.push_back(i);
    return indices;
}

}  // namespace mmsi::testsupport
