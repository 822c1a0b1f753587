#include "mmsi/manifest.hpp"

#include <ctime>

#include <json.hpp>

#include "mmsi/json_io.hpp"
#include "mmsi/sha256.hpp"
#include "mmsi/version.hpp"

namespace mmsi {

using nlohmann::json;

namespace {

std::string utc_now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

}  // namespace

std::string RunManifest::to_json() const {
    json doc;
    doc["schema"] = 1;
    doc["tool_version"] = tool_version;
    doc["command"] = command;
    doc["seed"] = seed;
    doc["config_digest"] = config_digest;
    doc["input_digests"] = input_digests;
    doc["created_utc"] = created_utc;
    return doc.dump(2) + "\n";
}

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::filesystem::path>& inputs,
                          std::uint64_t seed, bool deterministic) {
    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.command = command;
    manifest.seed = seed;
    manifest.config_digest = sha256_hex(config_text);
    for (const std::filesystem::path& input : inputs) {
        manifest.input_digests[input.generic_string()] = sha256_file_hex(input);
    }
    manifest.created_utc = deterministic ? "" : utc_now_iso8601();
    return manifest;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
    write_text_file(out_dir / "manifest.json", manifest.to_json());
}

}  // namespace mmsi
