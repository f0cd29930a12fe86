#include "sticky/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sticky/error.hpp"
#include "sticky/format.hpp"

namespace sticky {

namespace {

void check_tail_tol(double tail_tol) {
  if (!(tail_tol > 0.0) || tail_tol > 1e-6) {
    throw DomainError("tail tolerance must lie in (0, 1e-6], got " + format_number(tail_tol));
  }
}

void check_k_max(std::size_t k_max) {
  if (k_max == 0) throw DomainError("k_max must be at least 1");
}

// Splits a text line into numeric tokens separated by whitespace or commas.
std::vector<double> parse_numbers(const std::string& line, std::size_t line_no) {
  std::vector<double> values;
  std::string cleaned = line;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream tokens(cleaned);
  std::string token;
  while (tokens >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ParseError(line_no, "not a number: '" + token + "'");
    values.push_back(v);
  }
  return values;
}

struct NumberedLine {
  std::size_t number;
  std::string text;
};

// Non-blank lines with '#' comments stripped.
std::vector<NumberedLine> content_lines(const std::string& text) {
  std::vector<NumberedLine> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    lines.push_back({number, line});
  }
  return lines;
}

bool looks_like_json(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && text[first] == '{';
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::exponential:
      return "exponential";
    case ChannelKind::independent_indel:
      return "independent-indel";
    case ChannelKind::custom:
      return "custom";
  }
  return "unknown";
}

ChannelMatrix::ChannelMatrix(ChannelKind kind, double param,
                             std::vector<std::vector<double>> rows, double tail_tol,
                             std::vector<double> discarded)
    : kind_(kind), param_(param), k_max_(rows.size()), tail_tol_(tail_tol),
      discarded_(std::move(discarded)) {
  check_k_max(k_max_);
  for (const auto& r : rows) l_max_ = std::max(l_max_, r.size());
  if (l_max_ == 0) throw ValidationError("channel matrix has no output lengths");
  if (l_max_ > kMaxOutputLength) {
    throw CapacityError("channel needs " + std::to_string(l_max_) +
                        " output lengths, above the cap of " + std::to_string(kMaxOutputLength));
  }
  discarded_.resize(k_max_, 0.0);
  probs_.assign(k_max_ * l_max_, 0.0);
  cdf_.assign(k_max_ * l_max_, 0.0);
  support_.resize(k_max_);
  for (std::size_t k = 1; k <= k_max_; ++k) {
    const auto& r = rows[k - 1];
    const double sum = std::accumulate(r.begin(), r.end(), 0.0L);
    if (!(sum > 0.0)) {
      throw ValidationError("row " + std::to_string(k) + " has no probability mass");
    }
    double* out = probs_.data() + (k - 1) * l_max_;
    double* cum = cdf_.data() + (k - 1) * l_max_;
    long double running = 0.0L;
    std::size_t first = 0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < l_max_; ++j) {
      const double v = j < r.size() ? static_cast<double>(r[j] / sum) : 0.0;
      out[j] = v;
      running += v;
      cum[j] = static_cast<double>(running);
      if (v > 0.0) {
        if (first == 0) first = j + 1;
        last = j + 1;
      }
    }
    support_[k - 1] = {first, last};
  }
}

std::span<const double> ChannelMatrix::row(std::size_t k) const {
  if (k == 0 || k > k_max_) {
    throw DomainError("input length " + std::to_string(k) + " outside 1.." +
                      std::to_string(k_max_));
  }
  return {probs_.data() + (k - 1) * l_max_, l_max_};
}

std::size_t ChannelMatrix::sample(std::size_t k, RandomStream& stream) const {
  const double u = stream.uniform();
  const double* cum = cdf_.data() + (k - 1) * l_max_;
  const auto it = std::upper_bound(cum, cum + l_max_, u);
  const auto l = static_cast<std::size_t>(it - cum) + 1;
  // Rounding can leave the final cumulative value a hair below 1.
  return std::min(l, support_[k - 1].second);
}

ChannelMatrix build_exponential(double q, std::size_t k_max, double tail_tol) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("exponential parameter q must lie in (0, 1), got " + format_number(q));
  }
  check_k_max(k_max);
  check_tail_tol(tail_tol);

  // Row k beyond l = L keeps mass q^{L-k+1}/(1+q-q^k); find the smallest
  // common L that puts every row's tail under tail_tol.
  std::size_t l_max = 1;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double norm = 1.0 + q - std::pow(q, static_cast<double>(k));
    const double steps = std::ceil(std::log(tail_tol * norm) / std::log(q));
    const double needed = static_cast<double>(k) - 1.0 + std::max(1.0, steps);
    if (needed > static_cast<double>(kMaxOutputLength)) {
      throw CapacityError("exponential q=" + format_number(q) + " needs l_max " +
                          format_number(needed) + " > " + std::to_string(kMaxOutputLength) +
                          "; use a larger tail tolerance or smaller k_max");
    }
    l_max = std::max(l_max, static_cast<std::size_t>(needed));
  }

  std::vector<std::vector<double>> rows(k_max, std::vector<double>(l_max));
  std::vector<double> discarded(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double norm = (1.0 - q) / (1.0 + q - std::pow(q, static_cast<double>(k)));
    for (std::size_t l = 1; l <= l_max; ++l) {
      const auto dist = static_cast<double>(k > l ? k - l : l - k);
      rows[k - 1][l - 1] = std::pow(q, dist) * norm;
    }
    discarded[k - 1] = std::pow(q, static_cast<double>(l_max - k + 1)) /
                       (1.0 + q - std::pow(q, static_cast<double>(k)));
  }
  return ChannelMatrix(ChannelKind::exponential, q, std::move(rows), tail_tol,
                       std::move(discarded));
}

ChannelMatrix build_independent_indel(double eps, std::size_t k_max, double tail_tol) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw DomainError("indel probability eps must lie in (0, 1/2), got " + format_number(eps));
  }
  check_k_max(k_max);
  check_tail_tol(tail_tol);
  if (2 * k_max > kMaxOutputLength) {
    throw CapacityError("independent-indel k_max " + std::to_string(k_max) +
                        " needs more than " + std::to_string(kMaxOutputLength) +
                        " output lengths");
  }

  const long double e = eps;
  const long double keep = 1.0L - 2.0L * e;
  // poly[l] = probability that k bases produce l output bases.
  std::vector<long double> poly{1.0L};
  std::vector<std::vector<double>> rows(k_max);
  long double all_deleted = 1.0L;
  for (std::size_t k = 1; k <= k_max; ++k) {
    std::vector<long double> next(poly.size() + 2, 0.0L);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j] += poly[j] * e;
      next[j + 1] += poly[j] * keep;
      next[j + 2] += poly[j] * e;
    }
    poly = std::move(next);
    all_deleted *= e;
    auto& r = rows[k - 1];
    r.resize(2 * k);
    for (std::size_t l = 1; l <= 2 * k; ++l) {
      r[l - 1] = static_cast<double>(poly[l] / (1.0L - all_deleted));
    }
  }
  return ChannelMatrix(ChannelKind::independent_indel, eps, std::move(rows), tail_tol, {});
}

ChannelMatrix build_custom(std::vector<std::vector<double>> rows) {
  if (rows.empty()) throw ValidationError("custom channel needs at least one row");
  std::string bad;
  for (std::size_t k = 1; k <= rows.size(); ++k) {
    const auto& r = rows[k - 1];
    bool ok = !r.empty();
    long double sum = 0.0L;
    for (const double v : r) {
      if (!(v >= 0.0) || !std::isfinite(v)) ok = false;
      sum += v;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9) ok = false;
    if (!ok) {
      if (!bad.empty()) bad += ", ";
      bad += std::to_string(k) + " (sum " + format_number(static_cast<double>(sum)) + ")";
    }
  }
  if (!bad.empty()) {
    throw ValidationError("rows are not probability distributions: " + bad);
  }
  return ChannelMatrix(ChannelKind::custom, 0.0, std::move(rows), 0.0, {});
}

ChannelMatrix identity_channel(std::size_t k_max) {
  check_k_max(k_max);
  std::vector<std::vector<double>> rows(k_max, std::vector<double>(k_max, 0.0));
  for (std::size_t k = 0; k < k_max; ++k) rows[k][k] = 1.0;
  return build_custom(std::move(rows));
}

ChannelMatrix parse_channel_matrix(std::istream& in) {
  const std::string text = read_all(in);
  std::size_t k_max = 0;
  std::size_t l_max = 0;
  std::vector<std::vector<double>> rows;

  if (looks_like_json(text)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
      k_max = doc.at("k_max").get<std::size_t>();
      l_max = doc.at("l_max").get<std::size_t>();
      rows = doc.at("rows").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(1, std::string("invalid channel JSON: ") + e.what());
    }
    if (rows.size() != k_max) {
      throw ParseError(1, "expected " + std::to_string(k_max) + " rows, found " +
                              std::to_string(rows.size()));
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != l_max) {
        throw ParseError(1, "row " + std::to_string(k + 1) + " has " +
                                std::to_string(rows[k].size()) + " entries, expected " +
                                std::to_string(l_max));
      }
    }
  } else {
    const auto lines = content_lines(text);
    if (lines.empty()) throw ParseError(1, "empty channel matrix file");
    const auto header = parse_numbers(lines[0].text, lines[0].number);
    if (header.size() != 2 || header[0] < 1 || header[1] < 1 ||
        header[0] != std::floor(header[0]) || header[1] != std::floor(header[1])) {
      throw ParseError(lines[0].number, "header must be \"k_max l_max\"");
    }
    k_max = static_cast<std::size_t>(header[0]);
    l_max = static_cast<std::size_t>(header[1]);
    if (lines.size() - 1 != k_max) {
      throw ParseError(lines.back().number, "expected " + std::to_string(k_max) +
                                                " rows, found " +
                                                std::to_string(lines.size() - 1));
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto values = parse_numbers(lines[i].text, lines[i].number);
      if (values.size() != l_max) {
        throw ParseError(lines[i].number, "expected " + std::to_string(l_max) +
                                              " entries, found " +
                                              std::to_string(values.size()));
      }
      rows.push_back(std::move(values));
    }
  }
  return build_custom(std::move(rows));
}

ChannelMatrix load_channel_matrix(const std::string& path) {
  auto in = open_input(path);
  return parse_channel_matrix(in);
}

void write_channel_csv(std::ostream& out, const ChannelMatrix& ch) {
  out << "k,l,q\n";
  for (std::size_t k = 1; k <= ch.k_max(); ++k) {
    for (std::size_t l = 1; l <= ch.l_max(); ++l) {
      out << k << ',' << l << ',' << format_number(ch.at(k, l)) << '\n';
    }
  }
}

double transition_prob(const ChannelMatrix& ch, std::size_t k, std::size_t l) {
  if (k == 0 || k > ch.k_max()) {
    throw DomainError("input length " + std::to_string(k) + " outside 1.." +
                      std::to_string(ch.k_max()));
  }
  return ch.at(k, l);
}

double sequence_likelihood(const ChannelMatrix& ch, const BlockSequence& input,
                           const BlockSequence& output) {
  if (input.size() != output.size()) {
    throw StructuralMismatch("input has " + std::to_string(input.size()) +
                             " blocks but output has " + std::to_string(output.size()));
  }
  double product = 1.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (input[i].symbol != output[i].symbol) {
      throw StructuralMismatch("block " + std::to_string(i) + " symbol changed from '" +
                               input[i].symbol + "' to '" + output[i].symbol + "'");
    }
    product *= transition_prob(ch, input[i].length, output[i].length);
  }
  return product;
}

std::size_t sample_output_length(const ChannelMatrix& ch, std::size_t k, RandomStream& stream) {
  if (k == 0 || k > ch.k_max()) {
    throw DomainError("input length " + std::to_string(k) + " outside 1.." +
                      std::to_string(ch.k_max()));
  }
  return ch.sample(k, stream);
}

SubstitutionChannel::SubstitutionChannel(std::string alphabet,
                                         std::vector<std::vector<double>> rows)
    : alphabet_(std::move(alphabet)), rows_(std::move(rows)) {}

SubstitutionChannel build_substitution(std::string alphabet,
                                       std::vector<std::vector<double>> rows) {
  const auto m = alphabet.size();
  if (m < 2) throw ValidationError("substitution alphabet needs at least two symbols");
  if (rows.size() != m) {
    throw ValidationError("substitution matrix has " + std::to_string(rows.size()) +
                          " rows for a " + std::to_string(m) + "-symbol alphabet");
  }
  std::string bad;
  for (std::size_t s = 0; s < m; ++s) {
    auto& r = rows[s];
    bool ok = r.size() == m;
    long double sum = 0.0L;
    for (const double v : r) {
      if (!(v >= 0.0) || !std::isfinite(v)) ok = false;
      sum += v;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9) ok = false;
    if (!ok) {
      if (!bad.empty()) bad += ", ";
      bad += std::string(1, alphabet[s]) + " (sum " +
             format_number(static_cast<double>(sum)) + ")";
      continue;
    }
    for (double& v : r) v = static_cast<double>(v / sum);
  }
  if (!bad.empty()) throw ValidationError("substitution rows are not distributions: " + bad);
  return SubstitutionChannel(std::move(alphabet), std::move(rows));
}

SubstitutionChannel parse_substitution(std::istream& in) {
  const std::string text = read_all(in);
  std::string alphabet;
  std::vector<std::vector<double>> rows;
  if (looks_like_json(text)) {
    try {
      const auto doc = nlohmann::json::parse(text);
      alphabet = doc.at("alphabet").get<std::string>();
      rows = doc.at("rows").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(1, std::string("invalid substitution JSON: ") + e.what());
    }
  } else {
    const auto lines = content_lines(text);
    if (lines.empty()) throw ParseError(1, "empty substitution matrix file");
    std::istringstream header(lines[0].text);
    header >> alphabet;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      rows.push_back(parse_numbers(lines[i].text, lines[i].number));
    }
  }
  return build_substitution(std::move(alphabet), std::move(rows));
}

SubstitutionChannel load_substitution(const std::string& path) {
  auto in = open_input(path);
  return parse_substitution(in);
}

}  // namespace sticky
