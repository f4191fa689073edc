#pragma once

namespace csbp {
inline constexpr const char* kVersion = "0.1.0";
}
