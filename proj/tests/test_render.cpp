#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "mmsi/error.hpp"
#include "mmsi/overlay.hpp"
#include "support/synthetic.hpp"

using namespace mmsi;

namespace {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("MMSI_TEST_DATA")) return env;
    return std::filesystem::path(TEST_DATA_DIR);
}

FrameAnnotation two_person_frame() { return testsupport::golden_two_person_frame(); }

}  // namespace

TEST_CASE("assign_colors follows the fixed palette") {
    ColorMap six = assign_colors(6);
    CHECK(six.size() == 6);
    CHECK(six.color_for(PlayerId{0}) == Rgb{220, 20, 60});    // red
    CHECK(six.color_for(PlayerId{1}) == Rgb{30, 90, 220});    // blue
    CHECK(six.color_for(PlayerId{2}) == Rgb{30, 160, 70});    // green
    CHECK(six.color_for(PlayerId{3}) == Rgb{240, 200, 0});    // yellow
    CHECK(six.color_for(PlayerId{4}) == Rgb{150, 60, 200});   // purple
    CHECK(six.color_for(PlayerId{5}) == Rgb{250, 140, 20});   // orange

    ColorMap one = assign_colors(1);
    CHECK(one.size() == 1);
    CHECK(one.color_for(PlayerId{0}) == Rgb{220, 20, 60});

    CHECK_THROWS_AS(assign_colors(7), ValidationError);
    CHECK_THROWS_AS(assign_colors(0), ValidationError);

    // Injectivity over the full palette.
    for (int i = 0; i < 6; ++i) {
        for (int j = i + 1; j < 6; ++j) {
            CHECK(!(six.color_for(PlayerId{i}) == six.color_for(PlayerId{j})));
        }
    }
}

TEST_CASE("render_overlay is pure and a no-op without persons") {
    Image frame = Image::filled(640, 360, {50, 70, 90});
    FrameAnnotation empty;
    empty.timestamp = 0.0;
    OverlayOptions opts;

    Image out = render_overlay(frame, empty, assign_colors(6), opts);
    CHECK(out == frame);  // byte-identical to input

    FrameAnnotation persons = two_person_frame();
    Image a = render_overlay(frame, persons, assign_colors(6), opts);
    Image b = render_overlay(frame, persons, assign_colors(6), opts);
    CHECK(a == b);
    CHECK(!(a == frame));
}

TEST_CASE("overlay locality: far pixels equal the input") {
    Image frame = Image::filled(640, 360, {32, 32, 32});
    FrameAnnotation persons = two_person_frame();
    Image out = render_overlay(frame, persons, assign_colors(6), OverlayOptions{});
    // Far corners are well away from both boxes, labels and skeletons.
    CHECK(out.get(639, 359) == frame.get(639, 359));
    CHECK(out.get(0, 359) == frame.get(0, 359));
    CHECK(out.get(620, 0) == frame.get(620, 0));
}

TEST_CASE("flag combinations produce distinct images") {
    Image frame = Image::filled(640, 360, {32, 32, 32});
    FrameAnnotation persons = two_person_frame();
    ColorMap colors = assign_colors(6);

    OverlayOptions text_only{true, false, false, 0.3f};
    OverlayOptions text_rect{true, true, false, 0.3f};
    OverlayOptions all{true, true, true, 0.3f};

    Image i1 = render_overlay(frame, persons, colors, text_only);
    Image i2 = render_overlay(frame, persons, colors, text_rect);
    Image i3 = render_overlay(frame, persons, colors, all);
    CHECK(!(i1 == i2));
    CHECK(!(i2 == i3));
    CHECK(!(i1 == i3));
}

TEST_CASE("render_overlay error paths") {
    Image frame = Image::filled(64, 36, {0, 0, 0});
    FrameAnnotation persons = two_person_frame();
    // Color map too small for Player3.
    CHECK_THROWS_AS(render_overlay(frame, persons, assign_colors(2), OverlayOptions{}),
                    ValidationError);
    Image zero;
    CHECK_THROWS_AS(render_overlay(zero, persons, assign_colors(6), OverlayOptions{}),
                    ValidationError);
}

TEST_CASE("golden overlay image is pixel-exact") {
    Image frame = Image::filled(640, 360, {32, 32, 32});
    Image out = render_overlay(frame, two_person_frame(), assign_colors(6),
                               OverlayOptions{});
    const auto golden_path = data_dir() / "golden" / "overlay_two_person.png";
    REQUIRE(std::filesystem::exists(golden_path));
    Image golden = decode_png(read_binary_file(golden_path));
    CHECK(out == golden);
}

TEST_CASE("grid6 index selection") {
    CHECK(grid6_indices(30) == std::vector<std::size_t>{0, 6, 12, 17, 23, 29});
    CHECK(grid6_indices(6) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    CHECK(grid6_indices(1) == std::vector<std::size_t>{0, 0, 0, 0, 0, 0});
    CHECK(grid6_indices(2) == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});

    // Monotone, covers first and last when n >= 6.
    std::mt19937_64 rng(17);
    for (int iteration = 0; iteration < 50; ++iteration) {
        std::size_t n = 1 + rng() % 200;
        auto indices = grid6_indices(n);
        REQUIRE(indices.size() == 6);
        for (std::size_t i = 1; i < 6; ++i) CHECK(indices[i - 1] <= indices[i]);
        if (n >= 6) {
            CHECK(indices.front() == 0);
            CHECK(indices.back() == n - 1);
        }
        for (std::size_t index : indices) CHECK(index < n);
    }
}

TEST_CASE("sample_frames per-second binning") {
    AnnotationTrack track;
    track.session_id = "s";
    for (int i = 0; i < 40; ++i) {
        FrameAnnotation frame;
        frame.timestamp = i * 0.25;  // 4 fps source
        frame.frame_ref = "f" + std::to_string(i);
        track.frames.push_back(frame);
    }

    SUBCASE("3-second span at 1 fps gives 3 frames") {
        auto sampled = sample_frames(track, 0.0, 3.0, SamplingMode::per_second(1.0));
        CHECK(sampled.size() == 3);
        // Nearest to bin midpoints 0.5, 1.5, 2.5.
        CHECK(sampled[0].timestamp == doctest::Approx(0.5));
        CHECK(sampled[1].timestamp == doctest::Approx(1.5));
        CHECK(sampled[2].timestamp == doctest::Approx(2.5));
    }
    SUBCASE("short span still yields one frame") {
        auto sampled = sample_frames(track, 0.0, 0.4, SamplingMode::per_second(1.0));
        CHECK(sampled.size() == 1);
    }
    SUBCASE("grid6 over the span") {
        auto sampled = sample_frames(track, 0.0, 9.75, SamplingMode::grid6());
        REQUIRE(sampled.size() == 6);
        CHECK(sampled.front().timestamp == doctest::Approx(0.0));
        CHECK(sampled.back().timestamp == doctest::Approx(9.75));
    }
    SUBCASE("empty intersection is an error") {
        CHECK_THROWS_AS(sample_frames(track, 100.0, 101.0, SamplingMode::per_second(1.0)),
                        ValidationError);
        CHECK_THROWS_AS(sample_frames(track, 5.0, 4.0, SamplingMode::per_second(1.0)),
                        ValidationError);
    }
}

TEST_CASE("compose_grid layout and dimensions") {
    std::vector<Image> frames;
    const Rgb colors[6] = {{255, 0, 0}, {0, 255, 0},   {0, 0, 255},
                           {255, 255, 0}, {0, 255, 255}, {255, 0, 255}};
    for (int i = 0; i < 6; ++i) frames.push_back(Image::filled(320, 180, colors[i]));

    Image grid = compose_grid(frames);
    CHECK(grid.width == 960);
    CHECK(grid.height == 360);

    // Cell (r, c) holds frame 3r + c; probe cell centers.
    for (int cell = 0; cell < 6; ++cell) {
        const int row = cell / 3, col = cell % 3;
        CHECK(grid.get(col * 320 + 160, row * 180 + 90) == colors[cell]);
    }
    // Top-left cell is the first frame.
    CHECK(grid.get(4, 4) == colors[0]);
    // Separators are black on internal boundaries.
    CHECK(grid.get(320, 50) == Rgb{0, 0, 0});
    CHECK(grid.get(639, 50) == Rgb{0, 0, 0});
    CHECK(grid.get(100, 180) == Rgb{0, 0, 0});

    SUBCASE("wrong count or mismatched sizes") {
        frames.pop_back();
        CHECK_THROWS_AS(compose_grid(frames), ValidationError);
        frames.push_back(Image::filled(100, 80, {0, 0, 0}));
        CHECK_THROWS_AS(compose_grid(frames), ValidationError);
    }

    SUBCASE("golden grid is pixel-exact") {
        const auto golden_path = data_dir() / "golden" / "grid_solid.png";
        REQUIRE(std::filesystem::exists(golden_path));
        Image golden = decode_png(read_binary_file(golden_path));
        CHECK(grid == golden);
    }

    SUBCASE("byte-identical across two runs") {
        CHECK(encode_png(compose_grid(frames)) == encode_png(compose_grid(frames)));
    }
}
