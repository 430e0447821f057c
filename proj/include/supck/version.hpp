#pragma once

namespace supck {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace supck
