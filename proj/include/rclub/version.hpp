#pragma once

namespace rclub {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rclub
