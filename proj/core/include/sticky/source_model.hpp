#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sticky {

/// An i.i.d. symbol source: an ordered alphabet with one probability per symbol.
///
/// Probabilities must be strictly positive and sum to one within 1e-12.
class SourceModel {
 public:
  SourceModel(std::string alphabet, std::vector<double> probs);

  /// Equiprobable source over `alphabet`.
  static SourceModel uniform(std::string alphabet);

  /// Builds a model from an alphabet string and a comma-separated probability
  /// list. An empty list or "uniform" yields the equiprobable source.
  static SourceModel parse(std::string_view alphabet, std::string_view probs);

  const std::string& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return alphabet_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }

  bool contains(char symbol) const noexcept;
  /// Position of `symbol` in the alphabet; throws InvalidInput if absent.
  std::size_t index_of(char symbol) const;
  double prob(char symbol) const { return probs_[index_of(symbol)]; }

 private:
  std::string alphabet_;
  std::vector<double> probs_;
};

struct Block {
  char symbol;
  std::size_t length;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Run-length form s_1^{k_1} ... s_N^{k_N} of a symbol sequence.
///
/// Every length is at least one and neighbouring blocks carry different
/// symbols; the constructor enforces both.
class BlockSequence {
 public:
  BlockSequence() = default;
  explicit BlockSequence(std::vector<Block> blocks);

  std::span<const Block> blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  bool empty() const noexcept { return blocks_.empty(); }
  const Block& operator[](std::size_t i) const { return blocks_[i]; }

  /// Number of symbols in the expanded sequence.
  std::size_t total_length() const noexcept;
  /// The symbol of each block, in order.
  std::string symbols() const;

  friend bool operator==(const BlockSequence&, const BlockSequence&) = default;

 private:
  std::vector<Block> blocks_;
};

BlockSequence block_encode(const SourceModel& model, std::string_view sequence);
std::string block_decode(const BlockSequence& blocks);

/// P_{sk} = p^{k-1}(1-p): probability that a block of a symbol with
/// probability p has length k. Throws DomainError for k == 0.
double block_length_pmf(double p, std::size_t k);
double block_length_pmf(const SourceModel& model, char symbol, std::size_t k);

struct BlockStatistics {
  std::vector<double> per_symbol_block_count;  // N_s
  double total_block_count = 0.0;              // N
  std::vector<double> mean_block_length;       // 1/(1-p_s)
};

BlockStatistics expected_block_counts(const SourceModel& model, std::size_t n);

/// Source entropy split into symbol-order and block-length parts, in nats.
struct EntropyDecomposition {
  double h_x = 0.0;                // -sum p ln p, per symbol
  std::vector<double> order;       // h_s: entropy of the next block's symbol
  std::vector<double> length;      // h^x_s: entropy of the block length
};

EntropyDecomposition source_entropy_rate(const SourceModel& model);

}  // namespace sticky
