#pragma once

namespace noisekey {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace noisekey
