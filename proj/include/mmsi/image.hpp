// RGB8 raster plus the codecs and drawing primitives the renderer needs.
//
// PNG is the output format (lossless, byte-stable for golden tests).
// Inputs may be PNG or baseline JPEG; see decode_jpeg for the supported
// JPEG subset.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmsi {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(Rgb a, Rgb b) = default;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // RGB8, row-major, no padding

    static Image filled(int width, int height, Rgb color);

    bool empty() const { return width <= 0 || height <= 0; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    Rgb get(int x, int y) const {
        const std::size_t offset = (std::size_t(y) * width + x) * 3;
        return {pixels[offset], pixels[offset + 1], pixels[offset + 2]};
    }
    void set(int x, int y, Rgb color) {
        if (!in_bounds(x, y)) return;
        const std::size_t offset = (std::size_t(y) * width + x) * 3;
        pixels[offset] = color.r;
        pixels[offset + 1] = color.g;
        pixels[offset + 2] = color.b;
    }

    friend bool operator==(const Image& a, const Image& b) = default;
};

// --- Codecs ---

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

// Baseline/extended sequential huffman JPEG, 8-bit, grayscale or YCbCr,
// any sampling factors, restart markers. Progressive and arithmetic-coded
// streams are rejected with ParseError.
Image decode_jpeg(std::span<const std::uint8_t> bytes);

// Dispatches on magic bytes (PNG signature or JPEG SOI).
Image load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

// --- Drawing (all clipped against the image, deterministic) ---

// Axis-aligned outline; the stroke grows inward from the given rect.
void draw_rect_outline(Image& image, int x, int y, int w, int h, Rgb color,
                       int thickness);
void fill_rect(Image& image, int x, int y, int w, int h, Rgb color);
void draw_disc(Image& image, int cx, int cy, int radius, Rgb color);
void draw_line(Image& image, int x0, int y0, int x1, int y1, Rgb color,
               int thickness);

// 5x7 bitmap glyphs in a 6px-advance cell, integer-scaled. The built-in set
// covers digits and the letters of "Player"; anything else renders as a
// hollow box.
void draw_text(Image& image, int x, int y, const std::string& text, Rgb color,
               int scale);
int text_width(const std::string& text, int scale);
int text_height(int scale);

}  // namespace mmsi
