// Clipped raster primitives used by the overlay renderer. Everything here
// is integer-deterministic: no anti-aliasing, no floating-point blending.
#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "mmsi/image.hpp"

namespace mmsi {

namespace {

// 5x7 glyphs, one string per row, 'X' = set. Covers the characters the
// renderer actually draws ("PlayerN" labels); everything else falls back
// to a hollow box.
struct Glyph {
    const char* rows[7];
};

const std::map<char, Glyph>& glyph_table() {
    static const std::map<char, Glyph> table = {
        {'0', {{" XXX ", "X   X", "X  XX", "X X X", "XX  X", "X   X", " XXX "}}},
        {'1', {{"  X  ", " XX  ", "  X  ", "  X  ", "  X  ", "  X  ", " XXX "}}},
        {'2', {{" XXX ", "X   X", "    X", "   X ", "  X  ", " X   ", "XXXXX"}}},
        {'3', {{" XXX ", "X   X", "    X", "  XX ", "    X", "X   X", " XXX "}}},
        {'4', {{"   X ", "  XX ", " X X ", "X  X ", "XXXXX", "   X ", "   X "}}},
        {'5', {{"XXXXX", "X    ", "XXXX ", "    X", "    X", "X   X", " XXX "}}},
        {'6', {{" XXX ", "X    ", "X    ", "XXXX ", "X   X", "X   X", " XXX "}}},
        {'7', {{"XXXXX", "    X", "   X ", "  X  ", " X   ", " X   ", " X   "}}},
        {'8', {{" XXX ", "X   X", "X   X", " XXX ", "X   X", "X   X", " XXX "}}},
        {'9', {{" XXX ", "X   X", "X   X", " XXXX", "    X", "    X", " XXX "}}},
        {'P', {{"XXXX ", "X   X", "X   X", "XXXX ", "X    ", "X    ", "X    "}}},
        {'l', {{" X   ", " X   ", " X   ", " X   ", " X   ", " X   ", "  XX "}}},
        {'a', {{"     ", "     ", " XXX ", "    X", " XXXX", "X   X", " XXXX"}}},
        {'y', {{"     ", "     ", "X   X", "X   X", " XXXX", "    X", " XXX "}}},
        {'e', {{"     ", "     ", " XXX ", "X   X", "XXXXX", "X    ", " XXX "}}},
        {'r', {{"     ", "     ", "X XX ", "XX  X", "X    ", "X    ", "X    "}}},
    };
    return table;
}

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 7;
constexpr int kGlyphAdvance = 6;  // 1px spacing

}  // namespace

void fill_rect(Image& image, int x, int y, int w, int h, Rgb color) {
    int x0 = std::max(0, x);
    int y0 = std::max(0, y);
    int x1 = std::min(image.width, x + w);
    int y1 = std::min(image.height, y + h);
    for (int yy = y0; yy < y1; ++yy) {
        for (int xx = x0; xx < x1; ++xx) {
            image.set(xx, yy, color);
        }
    }
}

void draw_rect_outline(Image& image, int x, int y, int w, int h, Rgb color,
                       int thickness) {
    if (w <= 0 || h <= 0 || thickness <= 0) return;
    int t = std::min({thickness, w, h});
    fill_rect(image, x, y, w, t, color);                  // top
    fill_rect(image, x, y + h - t, w, t, color);          // bottom
    fill_rect(image, x, y + t, t, h - 2 * t, color);      // left
    fill_rect(image, x + w - t, y + t, t, h - 2 * t, color);  // right
}

void draw_disc(Image& image, int cx, int cy, int radius, Rgb color) {
    if (radius <= 0) {
        image.set(cx, cy, color);
        return;
    }
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= r2) {
                image.set(cx + dx, cy + dy, color);
            }
        }
    }
}

void draw_line(Image& image, int x0, int y0, int x1, int y1, Rgb color,
               int thickness) {
    // Bresenham core; thickness > 1 stamps a square brush at each step.
    const int half = std::max(0, thickness / 2);
    auto stamp = [&](int x, int y) {
        if (half == 0) {
            image.set(x, y, color);
            return;
        }
        for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx) {
                image.set(x + dx, y + dy, color);
            }
        }
    };

    int dx = std::abs(x1 - x0);
    int dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1;
    int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    while (true) {
        stamp(x, y);
        if (x == x1 && y == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

int text_width(const std::string& text, int scale) {
    if (text.empty()) return 0;
    return static_cast<int>(text.size()) * kGlyphAdvance * scale;
}

int text_height(int scale) { return kGlyphHeight * scale; }

void draw_text(Image& image, int x, int y, const std::string& text, Rgb color,
               int scale) {
    scale = std::max(1, scale);
    int pen_x = x;
    const auto& table = glyph_table();
    for (char ch : text) {
        auto it = table.find(ch);
        if (it != table.end()) {
            const Glyph& glyph = it->second;
            for (int gy = 0; gy < kGlyphHeight; ++gy) {
                for (int gx = 0; gx < kGlyphWidth; ++gx) {
                    if (glyph.rows[gy][gx] != 'X') continue;
                    fill_rect(image, pen_x + gx * scale, y + gy * scale, scale, scale,
                              color);
                }
            }
        } else if (ch != ' ') {
            draw_rect_outline(image, pen_x, y, kGlyphWidth * scale,
                              kGlyphHeight * scale, color, scale);
        }
        pen_x += kGlyphAdvance * scale;
    }
}

}  // namespace mmsi
