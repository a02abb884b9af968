#pragma once

namespace ndbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ndbench
