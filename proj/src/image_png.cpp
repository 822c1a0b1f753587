// PNG encode/decode over zlib. Writer emits 8-bit RGB, filter 0, fixed
// compression level so identical pixels produce identical bytes. Reader
// handles 8-bit gray / gray+alpha / RGB / RGBA / palette, no interlace.
#include <zlib.h>

#include <array>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "mmsi/error.hpp"
#include "mmsi/image.hpp"

namespace mmsi {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 24));
    out.push_back(static_cast<std::uint8_t>(value >> 16));
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_compress(const std::vector<std::uint8_t>& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    int rc = compress2(compressed.data(), &bound, raw.data(),
                       static_cast<uLong>(raw.size()), 6);
    if (rc != Z_OK) throw Error("png: zlib compression failed");
    compressed.resize(bound);
    return compressed;
}

std::vector<std::uint8_t> zlib_decompress(const std::uint8_t* data, std::size_t size,
                                          std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream stream{};
    if (inflateInit(&stream) != Z_OK) throw Error("png: inflateInit failed");
    stream.next_in = const_cast<Bytef*>(data);
    stream.avail_in = static_cast<uInt>(size);
    stream.next_out = out.data();
    stream.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&stream, Z_FINISH);
    inflateEnd(&stream);
    if (rc != Z_STREAM_END || stream.total_out != expected) {
        throw ParseError("png: corrupt or truncated pixel data");
    }
    return out;
}

int paeth_predictor(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a);
    int pb = std::abs(p - b);
    int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

Image Image::filled(int width, int height, Rgb color) {
    Image image;
    image.width = width;
    image.height = height;
    image.pixels.resize(std::size_t(width) * height * 3);
    for (std::size_t i = 0; i < image.pixels.size(); i += 3) {
        image.pixels[i] = color.r;
        image.pixels[i + 1] = color.g;
        image.pixels[i + 2] = color.b;
    }
    return image;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.empty()) throw ValidationError("png: cannot encode an empty image");
    if (image.pixels.size() != std::size_t(image.width) * image.height * 3) {
        throw ValidationError("png: pixel buffer size mismatch");
    }

    const std::size_t stride = std::size_t(image.width) * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * image.height);
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);  // filter: None
        const std::uint8_t* row = image.pixels.data() + std::size_t(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kPngSignature, kPngSignature + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(image.width));
    put_u32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", zlib_compress(raw));
    append_chunk(out, "IEND", {});
    return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) {
        throw ParseError("png: bad signature");
    }

    std::uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    std::vector<std::array<std::uint8_t, 3>> palette;
    bool saw_ihdr = false, saw_iend = false;

    std::size_t pos = 8;
    while (pos + 8 <= bytes.size() && !saw_iend) {
        std::uint32_t length = read_u32(bytes.data() + pos);
        if (pos + 12 + length > bytes.size()) throw ParseError("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (length != 13) throw ParseError("png: bad IHDR length");
            width = read_u32(payload);
            height = read_u32(payload + 4);
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            if (length % 3 != 0) throw ParseError("png: bad PLTE length");
            for (std::uint32_t i = 0; i < length; i += 3) {
                palette.push_back({payload[i], payload[i + 1], payload[i + 2]});
            }
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + length);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // Ancillary chunks (tEXt, tRNS, ...) are skipped.
        pos += 12 + length;
    }

    if (!saw_ihdr) throw ParseError("png: missing IHDR");
    if (width == 0 || height == 0) throw ParseError("png: zero dimensions");
    if (interlace != 0) throw ParseError("png: interlaced images are not supported");
    if (bit_depth != 8) {
        throw ParseError("png: only 8-bit channels are supported (got depth " +
                         std::to_string(bit_depth) + ")");
    }

    int channels = 0;
    switch (color_type) {
        case 0: channels = 1; break;  // gray
        case 2: channels = 3; break;  // RGB
        case 3: channels = 1; break;  // palette index
        case 4: channels = 2; break;  // gray + alpha
        case 6: channels = 4; break;  // RGBA
        default: throw ParseError("png: unsupported color type");
    }
    if (color_type == 3 && palette.empty()) throw ParseError("png: missing PLTE");

    const std::size_t stride = std::size_t(width) * channels;
    const std::size_t expected = (stride + 1) * height;
    std::vector<std::uint8_t> raw = zlib_decompress(idat.data(), idat.size(), expected);

    // Undo per-row filters in place (output shifted over the filter bytes).
    std::vector<std::uint8_t> data(stride * height);
    const int bpp = channels;
    for (std::uint32_t y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[(stride + 1) * y];
        const std::uint8_t* src = raw.data() + (stride + 1) * y + 1;
        std::uint8_t* dst = data.data() + stride * y;
        const std::uint8_t* prev = y > 0 ? data.data() + stride * (y - 1) : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            int a = x >= std::size_t(bpp) ? dst[x - bpp] : 0;
            int b = prev ? prev[x] : 0;
            int c = (prev && x >= std::size_t(bpp)) ? prev[x - bpp] : 0;
            int value = src[x];
            switch (filter) {
                case 0: break;
                case 1: value += a; break;
                case 2: value += b; break;
                case 3: value += (a + b) / 2; break;
                case 4: value += paeth_predictor(a, b, c); break;
                default: throw ParseError("png: unknown filter type");
            }
            dst[x] = static_cast<std::uint8_t>(value & 0xFF);
        }
    }

    Image image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.pixels.resize(std::size_t(width) * height * 3);
    for (std::size_t i = 0; i < std::size_t(width) * height; ++i) {
        const std::uint8_t* px = data.data() + i * channels;
        std::uint8_t r, g, b;
        switch (color_type) {
            case 0:
            case 4: r = g = b = px[0]; break;
            case 2:
            case 6: r = px[0]; g = px[1]; b = px[2]; break;
            case 3: {
                if (px[0] >= palette.size()) throw ParseError("png: palette index out of range");
                const auto& entry = palette[px[0]];
                r = entry[0]; g = entry[1]; b = entry[2];
                break;
            }
            default: r = g = b = 0; break;
        }
        image.pixels[i * 3] = r;
        image.pixels[i * 3 + 1] = g;
        image.pixels[i * 3 + 2] = b;
    }
    return image;
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path.string());
    return bytes;
}

void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure: " + path.string());
}

Image load_image(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = read_binary_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
        return decode_jpeg(bytes);
    }
    throw ParseError("unrecognized image format: " + path.string());
}

void save_png(const std::filesystem::path& path, const Image& image) {
    write_binary_file(path, encode_png(image));
}

}  // namespace mmsi
