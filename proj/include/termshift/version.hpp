#pragma once

namespace termshift {

inline constexpr const char* VERSION = "0.1.0";

}  // namespace termshift
