#pragma once

namespace spelaeo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spelaeo
