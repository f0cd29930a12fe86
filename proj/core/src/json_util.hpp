#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "sticky/format.hpp"

namespace sticky::detail {

/// Rounds every floating-point leaf to six significant digits; infinities
/// become the strings "inf" / "-inf".
inline void round_floats(nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isinf(v)) {
      j = v > 0 ? "inf" : "-inf";
    } else {
      j = std::stod(format_number(v));
    }
    return;
  }
  if (j.is_structured()) {
    for (auto& child : j) round_floats(child);
  }
}

}  // namespace sticky::detail
