#pragma once

namespace glselect {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace glselect
