#pragma once

namespace ctpe {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace ctpe
