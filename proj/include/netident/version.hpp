#pragma once

namespace netident {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace netident
