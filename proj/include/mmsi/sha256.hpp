// SHA-256 digests for replay fixture keys and run manifests.
// Hand-rolled so digests stay identical across platforms and toolchains.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mmsi {

class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t size);
    void update(std::string_view text) { update(text.data(), text.size()); }

    // Finalizes and returns the lowercase hex digest. The object must not be
    // updated afterwards.
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_{};
    std::array<std::uint8_t, 64> buffer_{};
    std::uint64_t total_bytes_ = 0;
    std::size_t buffered_ = 0;
    bool finalized_ = false;
};

std::string sha256_hex(std::string_view bytes);

// Digest of a file's contents. Throws IoError when unreadable.
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace mmsi
