#pragma once

namespace sptail {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sptail
