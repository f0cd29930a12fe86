#include "args.hpp"

#include <charconv>
#include <fstream>

#include "sticky/error.hpp"

namespace sticky::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_index(std::string_view s) {
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidInput("expected a non-negative integer, got \"" + std::string(s) + "\"");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<std::size_t> parse_index_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_index(part));
      continue;
    }
    const auto lo = parse_index(part.substr(0, dots));
    const auto hi = parse_index(part.substr(dots + 2));
    if (lo > hi) throw InvalidInput("empty range \"" + std::string(trim(part)) + "\"");
    for (std::size_t i = lo; i <= hi; ++i) out.push_back(i);
  }
  return out;
}

IndexRange parse_window(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto v = parse_index(text);
    return {v, v};
  }
  IndexRange r{parse_index(text.substr(0, dots)), parse_index(text.substr(dots + 2))};
  if (r.first == 0 || r.first > r.last) {
    throw InvalidInput("window \"" + std::string(text) + "\" must be a..b with 1 <= a <= b");
  }
  return r;
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (const auto part : split(text, ',')) {
    const auto s = std::string(trim(part));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) throw InvalidInput("expected a number, got \"" + s + "\"");
    out.push_back(v);
  }
  return out;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::vector<ConfigEntry> entries;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected key=value");
    auto key = trim(s.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.remove_prefix(1);
    if (key.empty()) throw ParseError(line, "empty key");
    entries.push_back({std::string(key), std::string(trim(s.substr(eq + 1))), line});
  }
  return entries;
}

}  // namespace sticky::cli
