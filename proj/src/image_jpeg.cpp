// Baseline (and extended sequential) huffman JPEG decoder: 8-bit samples,
// grayscale or YCbCr, arbitrary sampling factors, restart markers,
// nearest-neighbor chroma upsampling. Progressive, arithmetic, hierarchical
// and 12-bit streams are rejected.
#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "mmsi/error.hpp"
#include "mmsi/image.hpp"

namespace mmsi {

namespace {

constexpr int kZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct HuffmanTable {
    // Canonical code -> value decoding per length, per ITU T.81 annex C.
    std::array<int, 17> min_code{};
    std::array<int, 17> max_code{};  // -1 when no codes of that length
    std::array<int, 17> value_base{};
    std::vector<std::uint8_t> values;
    bool present = false;
};

struct Component {
    int id = 0;
    int h_sampling = 1;
    int v_sampling = 1;
    int quant_table = 0;
    int dc_table = 0;
    int ac_table = 0;
    int dc_predictor = 0;
    // Full-resolution plane for the component's own sample grid.
    std::vector<std::uint8_t> plane;
    int plane_width = 0;
    int plane_height = 0;
};

class BitReader {
public:
    BitReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    // Returns the next bit, handling 0xFF00 stuffing. Throws on markers
    // other than stuffing (callers must consume RST markers themselves).
    int next_bit() {
        if (bit_count_ == 0) {
            if (pos_ >= size_) throw ParseError("jpeg: truncated entropy data");
            std::uint8_t byte = data_[pos_++];
            if (byte == 0xFF) {
                if (pos_ >= size_) throw ParseError("jpeg: truncated after 0xFF");
                std::uint8_t follow = data_[pos_++];
                if (follow != 0x00) {
                    throw ParseError("jpeg: unexpected marker inside entropy data");
                }
            }
            current_ = byte;
            bit_count_ = 8;
        }
        --bit_count_;
        return (current_ >> bit_count_) & 1;
    }

    int receive(int length) {
        int value = 0;
        for (int i = 0; i < length; ++i) value = (value << 1) | next_bit();
        return value;
    }

    void align_and_expect_rst(int marker_index) {
        bit_count_ = 0;
        if (pos_ + 2 > size_) throw ParseError("jpeg: truncated restart marker");
        if (data_[pos_] != 0xFF || data_[pos_ + 1] != (0xD0 + (marker_index & 7))) {
            throw ParseError("jpeg: missing restart marker");
        }
        pos_ += 2;
    }

    std::size_t position() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::uint8_t current_ = 0;
    int bit_count_ = 0;
};

int decode_huffman(BitReader& bits, const HuffmanTable& table) {
    int code = 0;
    for (int length = 1; length <= 16; ++length) {
        code = (code << 1) | bits.next_bit();
        if (table.max_code[length] >= 0 && code <= table.max_code[length]) {
            int index = table.value_base[length] + code - table.min_code[length];
            return table.values[static_cast<std::size_t>(index)];
        }
    }
    throw ParseError("jpeg: invalid huffman code");
}

// Sign-extends a RECEIVE(t) value per EXTEND in T.81 F.2.2.1.
int extend(int value, int length) {
    if (length == 0) return 0;
    if (value < (1 << (length - 1))) return value - (1 << length) + 1;
    return value;
}

const std::array<std::array<double, 8>, 8>& idct_cos_table() {
    static const std::array<std::array<double, 8>, 8> table = [] {
        std::array<std::array<double, 8>, 8> t{};
        for (int x = 0; x < 8; ++x) {
            for (int u = 0; u < 8; ++u) {
                t[x][u] = std::cos((2 * x + 1) * u * M_PI / 16.0) *
                          (u == 0 ? std::sqrt(0.5) : 1.0);
            }
        }
        return t;
    }();
    return table;
}

void idct_8x8(const int coeffs[64], std::uint8_t out[64]) {
    // Separable float IDCT; accuracy well within test tolerances.
    const auto& kCos = idct_cos_table();

    double rows[64];
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            double sum = 0.0;
            for (int u = 0; u < 8; ++u) sum += kCos[x][u] * coeffs[y * 8 + u];
            rows[y * 8 + x] = sum * 0.5;
        }
    }
    for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
            double sum = 0.0;
            for (int v = 0; v < 8; ++v) sum += kCos[y][v] * rows[v * 8 + x];
            double value = sum * 0.5 + 128.0;
            int clamped = static_cast<int>(std::lround(value));
            if (clamped < 0) clamped = 0;
            if (clamped > 255) clamped = 255;
            out[y * 8 + x] = static_cast<std::uint8_t>(clamped);
        }
    }
}

std::uint8_t clamp_u8(double value) {
    int v = static_cast<int>(std::lround(value));
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    return static_cast<std::uint8_t>(v);
}

}  // namespace

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8) {
        throw ParseError("jpeg: missing SOI");
    }

    std::array<std::array<std::uint16_t, 64>, 4> quant_tables{};
    std::array<HuffmanTable, 4> dc_tables;
    std::array<HuffmanTable, 4> ac_tables;
    std::vector<Component> components;
    int width = 0, height = 0;
    int restart_interval = 0;
    bool saw_sof = false;

    std::size_t pos = 2;
    while (pos + 4 <= bytes.size()) {
        if (bytes[pos] != 0xFF) throw ParseError("jpeg: expected marker");
        std::uint8_t marker = bytes[pos + 1];
        if (marker == 0xFF) {  // fill byte
            ++pos;
            continue;
        }
        pos += 2;
        if (marker == 0xD8) continue;       // stray SOI
        if (marker == 0xD9) break;          // EOI before scan: malformed
        if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) continue;

        if (pos + 2 > bytes.size()) throw ParseError("jpeg: truncated segment");
        std::size_t seg_len = (std::size_t(bytes[pos]) << 8) | bytes[pos + 1];
        if (seg_len < 2 || pos + seg_len > bytes.size()) {
            throw ParseError("jpeg: bad segment length");
        }
        const std::uint8_t* seg = bytes.data() + pos + 2;
        std::size_t seg_size = seg_len - 2;

        switch (marker) {
            case 0xC4: {  // DHT
                std::size_t off = 0;
                while (off < seg_size) {
                    int table_class = seg[off] >> 4;
                    int table_id = seg[off] & 0x0F;
                    if (table_id > 3) throw ParseError("jpeg: huffman table id > 3");
                    ++off;
                    if (off + 16 > seg_size) throw ParseError("jpeg: truncated DHT");
                    HuffmanTable table;
                    table.present = true;
                    int code = 0;
                    int total = 0;
                    for (int length = 1; length <= 16; ++length) {
                        int count = seg[off + length - 1];
                        table.value_base[length] = total;
                        if (count == 0) {
                            table.min_code[length] = 0;
                            table.max_code[length] = -1;
                        } else {
                            table.min_code[length] = code;
                            table.max_code[length] = code + count - 1;
                            code += count;
                            total += count;
                        }
                        code <<= 1;
                    }
                    off += 16;
                    if (off + total > seg_size) throw ParseError("jpeg: truncated DHT values");
                    table.values.assign(seg + off, seg + off + total);
                    off += total;
                    (table_class == 0 ? dc_tables : ac_tables)[table_id] = std::move(table);
                }
                break;
            }
            case 0xDB: {  // DQT
                std::size_t off = 0;
                while (off < seg_size) {
                    int precision = seg[off] >> 4;
                    int table_id = seg[off] & 0x0F;
                    if (table_id > 3) throw ParseError("jpeg: quant table id > 3");
                    ++off;
                    std::size_t entry_size = precision ? 2 : 1;
                    if (off + 64 * entry_size > seg_size) {
                        throw ParseError("jpeg: truncated DQT");
                    }
                    for (int i = 0; i < 64; ++i) {
                        std::uint16_t value = precision
                            ? static_cast<std::uint16_t>((seg[off + i * 2] << 8) |
                                                         seg[off + i * 2 + 1])
                            : seg[off + i];
                        quant_tables[table_id][i] = value;
                    }
                    off += 64 * entry_size;
                }
                break;
            }
            case 0xDD:  // DRI
                if (seg_size < 2) throw ParseError("jpeg: truncated DRI");
                restart_interval = (seg[0] << 8) | seg[1];
                break;
            case 0xC0:
            case 0xC1: {  // SOF0 baseline / SOF1 extended sequential
                if (seg_size < 6) throw ParseError("jpeg: truncated SOF");
                if (seg[0] != 8) throw ParseError("jpeg: only 8-bit precision supported");
                height = (seg[1] << 8) | seg[2];
                width = (seg[3] << 8) | seg[4];
                int component_count = seg[5];
                if (component_count != 1 && component_count != 3) {
                    throw ParseError("jpeg: only 1- or 3-component images supported");
                }
                if (seg_size < 6 + std::size_t(component_count) * 3) {
                    throw ParseError("jpeg: truncated SOF components");
                }
                for (int c = 0; c < component_count; ++c) {
                    Component comp;
                    comp.id = seg[6 + c * 3];
                    comp.h_sampling = seg[7 + c * 3] >> 4;
                    comp.v_sampling = seg[7 + c * 3] & 0x0F;
                    comp.quant_table = seg[8 + c * 3];
                    if (comp.h_sampling < 1 || comp.h_sampling > 4 ||
                        comp.v_sampling < 1 || comp.v_sampling > 4) {
                        throw ParseError("jpeg: bad sampling factors");
                    }
                    components.push_back(comp);
                }
                saw_sof = true;
                break;
            }
            case 0xC2:
                throw ParseError("jpeg: progressive streams are not supported");
            case 0xC3:
            case 0xC5: case 0xC6: case 0xC7:
            case 0xC9: case 0xCA: case 0xCB:
            case 0xCD: case 0xCE: case 0xCF:
                throw ParseError("jpeg: unsupported SOF type");
            case 0xDA: {  // SOS — decode the single scan and finish
                if (!saw_sof) throw ParseError("jpeg: SOS before SOF");
                if (width <= 0 || height <= 0) throw ParseError("jpeg: zero dimensions");
                int scan_components = seg[0];
                if (scan_components != static_cast<int>(components.size())) {
                    throw ParseError("jpeg: partial scans are not supported");
                }
                for (int c = 0; c < scan_components; ++c) {
                    int id = seg[1 + c * 2];
                    int tables = seg[2 + c * 2];
                    bool found = false;
                    for (Component& comp : components) {
                        if (comp.id == id) {
                            comp.dc_table = tables >> 4;
                            comp.ac_table = tables & 0x0F;
                            found = true;
                        }
                    }
                    if (!found) throw ParseError("jpeg: scan references unknown component");
                }

                int h_max = 1, v_max = 1;
                for (const Component& comp : components) {
                    h_max = std::max(h_max, comp.h_sampling);
                    v_max = std::max(v_max, comp.v_sampling);
                }
                const int mcu_width = h_max * 8;
                const int mcu_height = v_max * 8;
                const int mcus_x = (width + mcu_width - 1) / mcu_width;
                const int mcus_y = (height + mcu_height - 1) / mcu_height;

                for (Component& comp : components) {
                    comp.plane_width = mcus_x * comp.h_sampling * 8;
                    comp.plane_height = mcus_y * comp.v_sampling * 8;
                    comp.plane.assign(
                        std::size_t(comp.plane_width) * comp.plane_height, 0);
                }

                BitReader bits(bytes.data() + pos + seg_len,
                               bytes.size() - pos - seg_len);
                int mcu_counter = 0;
                int rst_index = 0;
                for (int my = 0; my < mcus_y; ++my) {
                    for (int mx = 0; mx < mcus_x; ++mx) {
                        if (restart_interval > 0 && mcu_counter == restart_interval) {
                            bits.align_and_expect_rst(rst_index);
                            rst_index = (rst_index + 1) & 7;
                            mcu_counter = 0;
                            for (Component& comp : components) comp.dc_predictor = 0;
                        }
                        ++mcu_counter;

                        for (Component& comp : components) {
                            const HuffmanTable& dc = dc_tables[comp.dc_table];
                            const HuffmanTable& ac = ac_tables[comp.ac_table];
                            if (!dc.present || !ac.present) {
                                throw ParseError("jpeg: missing huffman table");
                            }
                            const auto& quant = quant_tables[comp.quant_table];
                            for (int by = 0; by < comp.v_sampling; ++by) {
                                for (int bx = 0; bx < comp.h_sampling; ++bx) {
                                    int coeffs[64] = {0};
                                    int t = decode_huffman(bits, dc);
                                    int diff = extend(bits.receive(t), t);
                                    comp.dc_predictor += diff;
                                    coeffs[0] = comp.dc_predictor * quant[0];
                                    int k = 1;
                                    while (k < 64) {
                                        int rs = decode_huffman(bits, ac);
                                        int run = rs >> 4;
                                        int size = rs & 0x0F;
                                        if (size == 0) {
                                            if (run == 15) { k += 16; continue; }
                                            break;  // EOB
                                        }
                                        k += run;
                                        if (k > 63) throw ParseError("jpeg: AC run overflow");
                                        int value = extend(bits.receive(size), size);
                                        coeffs[kZigzag[k]] = value * quant[k];
                                        ++k;
                                    }
                                    std::uint8_t block[64];
                                    idct_8x8(coeffs, block);
                                    const int px0 =
                                        (mx * comp.h_sampling + bx) * 8;
                                    const int py0 =
                                        (my * comp.v_sampling + by) * 8;
                                    for (int y = 0; y < 8; ++y) {
                                        std::uint8_t* dst =
                                            comp.plane.data() +
                                            std::size_t(py0 + y) * comp.plane_width + px0;
                                        std::memcpy(dst, block + y * 8, 8);
                                    }
                                }
                            }
                        }
                    }
                }

                // Convert to RGB with nearest-neighbor chroma upsampling.
                Image image;
                image.width = width;
                image.height = height;
                image.pixels.resize(std::size_t(width) * height * 3);
                for (int y = 0; y < height; ++y) {
                    for (int x = 0; x < width; ++x) {
                        double samples[3] = {0, 0, 0};
                        for (std::size_t c = 0; c < components.size(); ++c) {
                            const Component& comp = components[c];
                            int sx = x * comp.h_sampling / h_max;
                            int sy = y * comp.v_sampling / v_max;
                            samples[c] =
                                comp.plane[std::size_t(sy) * comp.plane_width + sx];
                        }
                        std::uint8_t r, g, b;
                        if (components.size() == 1) {
                            r = g = b = static_cast<std::uint8_t>(samples[0]);
                        } else {
                            double Y = samples[0];
                            double cb = samples[1] - 128.0;
                            double cr = samples[2] - 128.0;
                            r = clamp_u8(Y + 1.402 * cr);
                            g = clamp_u8(Y - 0.344136 * cb - 0.714136 * cr);
                            b = clamp_u8(Y + 1.772 * cb);
                        }
                        std::size_t offset = (std::size_t(y) * width + x) * 3;
                        image.pixels[offset] = r;
                        image.pixels[offset + 1] = g;
                        image.pixels[offset + 2] = b;
                    }
                }
                return image;
            }
            default:
                break;  // APPn, COM, and friends: skipped
        }
        pos += seg_len;
    }
    throw ParseError("jpeg: no scan data found");
}

}  // namespace mmsi
