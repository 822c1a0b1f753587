// Social overlay rendering: per-player colors, boxes, keypoint skeletons and
// identity labels, plus frame sampling and 3x2 grid composition.
#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "mmsi/image.hpp"
#include "mmsi/types.hpp"

namespace mmsi {

struct OverlayOptions {
    bool text = true;   // identity labels
    bool rect = true;   // bounding boxes
    bool point = true;  // keypoints + skeleton
    float keypoint_confidence_threshold = 0.3f;

    bool any() const { return text || rect || point; }
};

// Fixed six-color palette, indices 0-5: red, blue, green, yellow, purple,
// orange. Values chosen for mutual contrast on video footage.
inline constexpr std::array<Rgb, 6> kPlayerPalette = {{
    {220, 20, 60},   // red
    {30, 90, 220},   // blue
    {30, 160, 70},   // green
    {240, 200, 0},   // yellow
    {150, 60, 200},  // purple
    {250, 140, 20},  // orange
}};

inline constexpr std::array<std::string_view, 6> kPlayerColorNames = {
    "red", "blue", "green", "yellow", "purple", "orange"};

class ColorMap {
public:
    ColorMap() = default;
    explicit ColorMap(std::vector<Rgb> colors) : colors_(std::move(colors)) {}

    bool contains(PlayerId player) const {
        return player.index >= 0 && std::size_t(player.index) < colors_.size();
    }
    // Throws ValidationError when the player has no assigned color.
    Rgb color_for(PlayerId player) const;
    std::size_t size() const { return colors_.size(); }

private:
    std::vector<Rgb> colors_;
};

// First player_count palette entries, in order. player_count outside [1, 6]
// is an error: the fixed palette is exhausted and callers must supply an
// extended ColorMap explicitly.
ColorMap assign_colors(int player_count);

struct SamplingMode {
    enum class Kind { PerSecond, Grid6 };
    Kind kind = Kind::PerSecond;
    double fps = 1.0;

    static SamplingMode per_second(double fps = 1.0) {
        return {Kind::PerSecond, fps};
    }
    static SamplingMode grid6() { return {Kind::Grid6, 0.0}; }
};

// COCO-17 skeleton as joint index pairs.
inline constexpr std::array<std::array<int, 2>, 19> kCocoSkeleton = {{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
    {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
    {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6},
}};

// Pure overlay pass: returns a new raster, never touches the input. Pixels
// outside drawn primitives are bit-identical to the input. Stroke width,
// disc radius and label size scale with image height (3 / 4 / 16 px at a
// 360 px reference height).
Image render_overlay(const Image& frame, const FrameAnnotation& annotations,
                     const ColorMap& colors, const OverlayOptions& opts);

// Grid6 sampling indices over n frames: round(i*(n-1)/5), i = 0..5.
std::vector<std::size_t> grid6_indices(std::size_t n);

// PerSecond: one frame per 1/fps bin (at least one bin), nearest the bin
// midpoint. Grid6: exactly six frames, evenly indexed, duplicates allowed
// when fewer than six are in span. Throws when no frame falls in [t0, t1].
std::vector<FrameAnnotation> sample_frames(const AnnotationTrack& track, double t0,
                                           double t1, const SamplingMode& mode);

// Six equal-sized frames -> one (3w x 2h) raster; cell (row r, col c) holds
// frame 3r + c; 2 px black separators on the internal cell boundaries.
Image compose_grid(const std::vector<Image>& frames);

}  // namespace mmsi
