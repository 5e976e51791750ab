#pragma once

namespace plasmode {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace plasmode
