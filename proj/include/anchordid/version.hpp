#pragma once

namespace anchordid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace anchordid
