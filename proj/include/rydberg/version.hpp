#pragma once

#include <string_view>

namespace rydberg {

inline constexpr std::string_view version_string = "1.0.0";
inline constexpr int lattice_schema_version = 1;
inline constexpr int template_format_version = 1;

} // namespace rydberg
