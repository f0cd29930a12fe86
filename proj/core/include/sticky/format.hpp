#pragma once

#include <string>

namespace sticky {

/// Six significant digits, "inf" for +infinity and "-inf" for -infinity.
std::string format_number(double value);

}  // namespace sticky
