#pragma once

namespace ou2f {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ou2f
