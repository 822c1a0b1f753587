#pragma once

namespace mmsi {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mmsi
