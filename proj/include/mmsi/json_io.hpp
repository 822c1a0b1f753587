// Loading and saving of the on-disk corpus formats.
//
// Transcripts are line-oriented JSON, one turn per line:
//   {"speaker": 0, "utterance": "...", "start": 12.4, "end": 15.1}
// Annotations are one JSON document per session:
//   {"session_id", "source_resolution", "frames": [...]}
//
// All fields are mandatory. In strict mode unknown fields are rejected;
// otherwise they are ignored with a warning.
#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "mmsi/types.hpp"

namespace mmsi {

struct ParseOptions {
    bool strict = true;
    // Receives one message per ignored unknown field in non-strict mode.
    // Defaults to writing on stderr when empty.
    std::function<void(const std::string&)> warn;
};

// The turn-line format carries no session metadata, so callers supply it:
// session_id defaults to the file stem, player_count to max speaker + 1.
Transcript load_transcript_jsonl(const std::filesystem::path& path,
                                 const std::string& session_id = "",
                                 int player_count = 0,
                                 const ParseOptions& opts = {});

Transcript parse_transcript_jsonl(std::string_view text,
                                  const std::string& session_id,
                                  int player_count = 0,
                                  const ParseOptions& opts = {});

void save_transcript_jsonl(const std::filesystem::path& path,
                           const Transcript& transcript);
std::string transcript_to_jsonl(const Transcript& transcript);

AnnotationTrack load_annotation_track(const std::filesystem::path& path,
                                      const ParseOptions& opts = {});
AnnotationTrack parse_annotation_track(std::string_view text,
                                       const ParseOptions& opts = {});

void save_annotation_track(const std::filesystem::path& path,
                           const AnnotationTrack& track);
std::string annotation_track_to_json(const AnnotationTrack& track);

// Shared helpers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mmsi
