// Per-run manifest: config and input digests, seed, tool version. Written
// next to every subcommand's outputs so a run can be reproduced bit-exact.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mmsi {

struct RunManifest {
    std::string tool_version;
    std::string command;
    std::uint64_t seed = 0;
    std::string config_digest;                        // sha256 of resolved options
    std::map<std::string, std::string> input_digests;  // path -> sha256
    std::string created_utc;  // empty under --deterministic

    std::string to_json() const;
};

// Builds the manifest from the resolved option serialization and input
// files. Timestamps are zeroed when deterministic is set.
RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::filesystem::path>& inputs,
                          std::uint64_t seed, bool deterministic);

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

}  // namespace mmsi
