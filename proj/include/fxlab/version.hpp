#pragma once

namespace fxlab {

inline constexpr const char* kToolName = "fxlab";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fxlab
