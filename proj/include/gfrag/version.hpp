#pragma once

#include <string_view>

namespace gfrag {

inline constexpr std::string_view tool_name = "gfrag";
inline constexpr std::string_view tool_version = "0.1.0";

}  // namespace gfrag
