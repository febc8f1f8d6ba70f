#pragma once

namespace tsecert {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tsecert
