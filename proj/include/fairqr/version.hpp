#pragma once

namespace fairqr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fairqr
