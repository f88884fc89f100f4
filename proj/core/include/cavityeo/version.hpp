#pragma once

namespace cavityeo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cavityeo
