#pragma once

namespace nnc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nnc
