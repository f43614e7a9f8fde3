#pragma once

namespace spinloop {

inline constexpr const char* kToolName = "spinloop";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace spinloop
