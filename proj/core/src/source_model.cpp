#include "sticky/source_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "sticky/error.hpp"
#include "sticky/infotheory.hpp"

namespace sticky {

SourceModel::SourceModel(std::string alphabet, std::vector<double> probs)
    : alphabet_(std::move(alphabet)), probs_(std::move(probs)) {
  if (alphabet_.size() < 2) {
    throw InvalidInput("alphabet must contain at least two symbols");
  }
  if (probs_.size() != alphabet_.size()) {
    throw InvalidInput("alphabet has " + std::to_string(alphabet_.size()) +
                       " symbols but " + std::to_string(probs_.size()) +
                       " probabilities were given");
  }
  std::string sorted = alphabet_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidInput("alphabet symbols must be unique");
  }
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0) || !std::isfinite(probs_[i])) {
      throw InvalidInput(std::string("probability of '") + alphabet_[i] +
                         "' must be positive");
    }
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidInput("probabilities sum to " + std::to_string(total) +
                       ", expected 1");
  }
}

SourceModel SourceModel::uniform(std::string alphabet) {
  const auto m = alphabet.size();
  if (m == 0) throw InvalidInput("alphabet must contain at least two symbols");
  std::vector<double> probs(m, 1.0 / static_cast<double>(m));
  // Put the rounding residue on the last symbol so the sum is exact.
  probs.back() = 1.0 - std::accumulate(probs.begin(), probs.end() - 1, 0.0);
  return SourceModel(std::move(alphabet), std::move(probs));
}

SourceModel SourceModel::parse(std::string_view alphabet, std::string_view probs) {
  if (probs.empty() || probs == "uniform") {
    return uniform(std::string(alphabet));
  }
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= probs.size()) {
    const auto comma = probs.find(',', pos);
    const auto end = comma == std::string_view::npos ? probs.size() : comma;
    auto token = probs.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      throw InvalidInput("cannot parse probability '" + std::string(token) + "'");
    }
    values.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return SourceModel(std::string(alphabet), std::move(values));
}

bool SourceModel::contains(char symbol) const noexcept {
  return alphabet_.find(symbol) != std::string::npos;
}

std::size_t SourceModel::index_of(char symbol) const {
  const auto i = alphabet_.find(symbol);
  if (i == std::string::npos) {
    throw InvalidInput(std::string("symbol '") + symbol + "' is not in alphabet \"" +
                       alphabet_ + "\"");
  }
  return i;
}

BlockSequence::BlockSequence(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].length == 0) {
      throw InvalidInput("block " + std::to_string(i) + " has zero length");
    }
    if (i > 0 && blocks_[i].symbol == blocks_[i - 1].symbol) {
      throw InvalidInput("blocks " + std::to_string(i - 1) + " and " + std::to_string(i) +
                         " carry the same symbol '" + blocks_[i].symbol + "'");
    }
  }
}

std::size_t BlockSequence::total_length() const noexcept {
  std::size_t total = 0;
  for (const auto& b : blocks_) total += b.length;
  return total;
}

std::string BlockSequence::symbols() const {
  std::string out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.symbol);
  return out;
}

BlockSequence block_encode(const SourceModel& model, std::string_view sequence) {
  if (sequence.empty()) throw InvalidInput("cannot block-encode an empty sequence");
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const char s = sequence[i];
    if (!model.contains(s)) {
      throw InvalidInput(std::string("symbol '") + s + "' at position " + std::to_string(i) +
                         " is not in alphabet \"" + model.alphabet() + "\"");
    }
    if (!blocks.empty() && blocks.back().symbol == s) {
      ++blocks.back().length;
    } else {
      blocks.push_back({s, 1});
    }
  }
  return BlockSequence(std::move(blocks));
}

std::string block_decode(const BlockSequence& blocks) {
  std::string out;
  out.reserve(blocks.total_length());
  for (const auto& b : blocks.blocks()) out.append(b.length, b.symbol);
  return out;
}

double block_length_pmf(double p, std::size_t k) {
  if (k == 0) throw DomainError("block length must be at least 1");
  return std::pow(p, static_cast<double>(k - 1)) * (1.0 - p);
}

double block_length_pmf(const SourceModel& model, char symbol, std::size_t k) {
  return block_length_pmf(model.prob(symbol), k);
}

BlockStatistics expected_block_counts(const SourceModel& model, std::size_t n) {
  if (n == 0) throw DomainError("sequence length must be at least 1");
  BlockStatistics stats;
  const double len = static_cast<double>(n);
  double sum_sq = 0.0;
  for (const double p : model.probs()) {
    stats.per_symbol_block_count.push_back(len * p * (1.0 - p));
    stats.mean_block_length.push_back(1.0 / (1.0 - p));
    sum_sq += p * p;
  }
  stats.total_block_count = len * (1.0 - sum_sq);
  return stats;
}

EntropyDecomposition source_entropy_rate(const SourceModel& model) {
  EntropyDecomposition out;
  for (const double p : model.probs()) out.h_x -= p * std::log(p);
  for (const double p : model.probs()) {
    const double hp = binary_entropy(p);
    out.order.push_back(std::max(0.0, (out.h_x - hp) / (1.0 - p)));
    out.length.push_back(hp / (1.0 - p));
  }
  return out;
}

}  // namespace sticky
