#include "mmsi/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "mmsi/error.hpp"

namespace mmsi {

namespace {

int scaled(int reference_px, int image_height) {
    return std::max(1, static_cast<int>(std::lround(
                           reference_px * image_height / 360.0)));
}

int clamp_int(int value, int lo, int hi) { return std::clamp(value, lo, hi); }

// Text reads in the player color, so the strip behind it flips between
// near-black and near-white for contrast.
Rgb backing_for(Rgb color) {
    const double luma = 0.299 * color.r + 0.587 * color.g + 0.114 * color.b;
    return luma > 140.0 ? Rgb{16, 16, 16} : Rgb{240, 240, 240};
}

}  // namespace

Rgb ColorMap::color_for(PlayerId player) const {
    if (!contains(player)) {
        throw ValidationError("no color assigned for " + player_label(player));
    }
    return colors_[static_cast<std::size_t>(player.index)];
}

ColorMap assign_colors(int player_count) {
    if (player_count < 1 || player_count > static_cast<int>(kPlayerPalette.size())) {
        throw ValidationError("assign_colors: player_count " +
                              std::to_string(player_count) +
                              " outside the fixed 6-color palette");
    }
    std::vector<Rgb> colors(kPlayerPalette.begin(),
                            kPlayerPalette.begin() + player_count);
    return ColorMap(std::move(colors));
}

Image render_overlay(const Image& frame, const FrameAnnotation& annotations,
                     const ColorMap& colors, const OverlayOptions& opts) {
    if (frame.empty()) throw ValidationError("render_overlay: zero-area image");

    Image out = frame;
    if (annotations.persons.empty() || !opts.any()) return out;

    const int stroke = scaled(3, frame.height);
    const int disc_radius = scaled(4, frame.height);
    const int label_scale =
        std::max(1, static_cast<int>(std::lround(frame.height * 16.0 / 360.0 / 8.0)));

    for (const PersonAnnotation& person : annotations.persons) {
        const Rgb color = colors.color_for(person.player);

        // Clamp the box into the frame before drawing.
        int bx = clamp_int(static_cast<int>(std::lround(person.bbox.x)), 0,
                           frame.width - 1);
        int by = clamp_int(static_cast<int>(std::lround(person.bbox.y)), 0,
                           frame.height - 1);
        int bx1 = clamp_int(static_cast<int>(std::lround(person.bbox.x + person.bbox.width)),
                            bx + 1, frame.width);
        int by1 = clamp_int(static_cast<int>(std::lround(person.bbox.y + person.bbox.height)),
                            by + 1, frame.height);

        if (opts.rect) {
            draw_rect_outline(out, bx, by, bx1 - bx, by1 - by, color, stroke);
        }

        if (opts.point) {
            const auto& kps = person.keypoints;
            auto visible = [&](int joint) {
                return kps[std::size_t(joint)].confidence >=
                       opts.keypoint_confidence_threshold;
            };
            for (const auto& bone : kCocoSkeleton) {
                if (!visible(bone[0]) || !visible(bone[1])) continue;
                const Keypoint& a = kps[std::size_t(bone[0])];
                const Keypoint& b = kps[std::size_t(bone[1])];
                draw_line(out,
                          clamp_int(static_cast<int>(std::lround(a.x)), 0, frame.width - 1),
                          clamp_int(static_cast<int>(std::lround(a.y)), 0, frame.height - 1),
                          clamp_int(static_cast<int>(std::lround(b.x)), 0, frame.width - 1),
                          clamp_int(static_cast<int>(std::lround(b.y)), 0, frame.height - 1),
                          color, std::max(1, stroke - 1));
            }
            for (std::size_t joint = 0; joint < kps.size(); ++joint) {
                if (kps[joint].confidence < opts.keypoint_confidence_threshold) continue;
                draw_disc(out,
                          clamp_int(static_cast<int>(std::lround(kps[joint].x)), 0,
                                    frame.width - 1),
                          clamp_int(static_cast<int>(std::lround(kps[joint].y)), 0,
                                    frame.height - 1),
                          disc_radius, color);
            }
        }

        if (opts.text) {
            const std::string label = player_label(person.player);
            const int pad = label_scale;
            const int strip_w = text_width(label, label_scale) + 2 * pad;
            const int strip_h = text_height(label_scale) + 2 * pad;
            // Sit the strip above the box when there is room, inside otherwise.
            int sy = by - strip_h >= 0 ? by - strip_h : by;
            int sx = clamp_int(bx, 0, std::max(0, frame.width - strip_w));
            fill_rect(out, sx, sy, strip_w, strip_h, backing_for(color));
            draw_text(out, sx + pad, sy + pad, label, color, label_scale);
        }
    }
    return out;
}

std::vector<std::size_t> grid6_indices(std::size_t n) {
    if (n == 0) throw ValidationError("grid6_indices: no frames");
    std::vector<std::size_t> indices(6);
    for (std::size_t i = 0; i < 6; ++i) {
        indices[i] = static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(n - 1) / 5.0));
    }
    return indices;
}

std::vector<FrameAnnotation> sample_frames(const AnnotationTrack& track, double t0,
                                           double t1, const SamplingMode& mode) {
    if (t0 > t1) throw ValidationError("sample_frames: t0 > t1");

    std::vector<const FrameAnnotation*> in_span;
    for (const FrameAnnotation& frame : track.frames) {
        if (frame.timestamp < t0) continue;
        if (frame.timestamp > t1) break;
        in_span.push_back(&frame);
    }
    if (in_span.empty()) {
        throw ValidationError("sample_frames: no frames in span");
    }

    std::vector<FrameAnnotation> sampled;
    if (mode.kind == SamplingMode::Kind::Grid6) {
        for (std::size_t index : grid6_indices(in_span.size())) {
            sampled.push_back(*in_span[index]);
        }
        return sampled;
    }

    if (!(mode.fps > 0.0)) throw ValidationError("sample_frames: fps must be > 0");
    const double duration = t1 - t0;
    const auto bins = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(duration * mode.fps + 1e-9)));
    for (std::size_t bin = 0; bin < bins; ++bin) {
        const double midpoint = t0 + (bin + 0.5) / mode.fps;
        const FrameAnnotation* best = in_span.front();
        double best_distance = std::abs(best->timestamp - midpoint);
        for (const FrameAnnotation* frame : in_span) {
            const double distance = std::abs(frame->timestamp - midpoint);
            if (distance < best_distance) {  // ties keep the earlier frame
                best = frame;
                best_distance = distance;
            }
        }
        sampled.push_back(*best);
    }
    return sampled;
}

Image compose_grid(const std::vector<Image>& frames) {
    if (frames.size() != 6) {
        throw ValidationError("compose_grid: expected exactly 6 frames, got " +
                              std::to_string(frames.size()));
    }
    const int w = frames.front().width;
    const int h = frames.front().height;
    if (w <= 0 || h <= 0) throw ValidationError("compose_grid: zero-area frame");
    for (const Image& frame : frames) {
        if (frame.width != w || frame.height != h) {
            throw ValidationError("compose_grid: frame sizes must match");
        }
    }

    Image grid = Image::filled(3 * w, 2 * h, {0, 0, 0});
    for (int cell = 0; cell < 6; ++cell) {
        const int row = cell / 3;
        const int col = cell % 3;
        const Image& frame = frames[std::size_t(cell)];
        for (int y = 0; y < h; ++y) {
            const std::uint8_t* src = frame.pixels.data() + std::size_t(y) * w * 3;
            std::uint8_t* dst = grid.pixels.data() +
                                ((std::size_t(row) * h + y) * grid.width + col * w) * 3;
            std::copy(src, src + std::size_t(w) * 3, dst);
        }
    }

    // 2 px separators centered on internal cell boundaries.
    const Rgb black{0, 0, 0};
    for (int boundary = 1; boundary <= 2; ++boundary) {
        fill_rect(grid, boundary * w - 1, 0, 2, grid.height, black);
    }
    fill_rect(grid, 0, h - 1, grid.width, 2, black);
    return grid;
}

}  // namespace mmsi
