#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sticky/infotheory.hpp"

namespace sticky::cli {

/// Integer list such as "1..80", "5", or "1..5,10,20..22". Ranges are inclusive.
std::vector<std::size_t> parse_index_list(std::string_view text);

/// Single inclusive range "a..b" (or a lone "a").
IndexRange parse_window(std::string_view text);

/// Comma-separated reals, e.g. "0.01,0.05,0.1".
std::vector<double> parse_real_list(std::string_view text);

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line;
};

/// Flat key=value file; '#' starts a comment, blank lines are skipped.
/// Keys may carry leading dashes. Throws ParseError on malformed lines.
std::vector<ConfigEntry> read_config_file(const std::string& path);

}  // namespace sticky::cli
