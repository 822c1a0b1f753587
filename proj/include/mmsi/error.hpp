// Error hierarchy shared by all modules.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mmsi {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Invalid domain data (broken invariants, bad argument combinations).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed external input (JSON, config files, image bytes).
class ParseError : public Error {
public:
    using Error::Error;
};

// Filesystem trouble: missing, unreadable, or unwritable paths.
class IoError : public Error {
public:
    using Error::Error;
};

// Inference backend failure; carries the sample it belongs to when known.
class BackendError : public Error {
public:
    BackendError(const std::string& what_arg, std::string sample_id = {})
        : Error(sample_id.empty() ? what_arg
                                  : what_arg + " [sample " + sample_id + "]"),
          sample_id_(std::move(sample_id)) {}

    const std::string& sample_id() const noexcept { return sample_id_; }

private:
    std::string sample_id_;
};

}  // namespace mmsi
