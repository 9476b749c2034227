#pragma once

namespace moso {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace moso
