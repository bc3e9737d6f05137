#pragma once

namespace eklab {

inline constexpr const char* version = "0.1.0";

}  // namespace eklab
