#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sticky/channel.hpp"
#include "sticky/source_model.hpp"

namespace sticky {

/// Number of replicas that read a block with a given length.
struct LengthCount {
  std::size_t length;
  std::size_t count;

  friend bool operator==(const LengthCount&, const LengthCount&) = default;
};

/// Empirical length counts, sorted by length, every count positive.
using LengthHistogram = std::vector<LengthCount>;

LengthHistogram make_histogram(std::span<const std::size_t> lengths);

struct MapEstimate {
  std::size_t k = 0;
  /// Maximized (k-1) ln p_s + sum_l count_l ln q_kl, in nats. Unnormalized.
  double log_objective = 0.0;
  /// Another k reached the same objective; the smallest such k was kept.
  bool tie = false;
};

/// Relative tolerance under which two objectives count as a tie.
inline constexpr double kTieTolerance = 1e-12;

/// MAP block-length estimator for a fixed (source, channel) pair.
///
/// Holds its own log tables, so it does not reference the inputs after
/// construction. Search range is k = 1..k_max.
class BlockDecoder {
 public:
  BlockDecoder(const SourceModel& model, const ChannelMatrix& ch);

  std::size_t k_max() const noexcept { return k_max_; }
  std::size_t l_max() const noexcept { return l_max_; }
  const std::string& alphabet() const noexcept { return alphabet_; }
  std::size_t symbol_index(char symbol) const;

  /// ln q_kl, -inf where q_kl is zero or l is out of range.
  double log_q(std::size_t k, std::size_t l) const noexcept {
    return (l == 0 || l > l_max_) ? kNegInf : log_q_[(k - 1) * l_max_ + (l - 1)];
  }
  double log_p(std::size_t symbol_index) const { return log_p_[symbol_index]; }

  double objective(std::size_t symbol_index, std::size_t k,
                   std::span<const LengthCount> hist) const;

  /// Throws ImpossibleObservation when every k gives probability zero.
  MapEstimate decode(std::size_t symbol_index, std::span<const LengthCount> hist) const;
  MapEstimate decode(char symbol, std::span<const LengthCount> hist) const {
    return decode(symbol_index(symbol), hist);
  }
  MapEstimate decode(char symbol, std::size_t l) const;

  /// Argmax over a precomputed objective vector (index k-1); k == 0 when
  /// every entry is -inf.
  static MapEstimate select(std::span<const double> objectives);

 private:
  static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::string alphabet_;
  std::vector<double> log_p_;
  std::size_t k_max_;
  std::size_t l_max_;
  std::vector<double> log_q_;
};

MapEstimate map_block_single(const SourceModel& model, const ChannelMatrix& ch, char symbol,
                             std::size_t l);
MapEstimate map_block_multi(const SourceModel& model, const ChannelMatrix& ch, char symbol,
                            std::span<const LengthCount> hist);

struct DominanceViolation {
  std::size_t l;
  /// Offset l - k of the competing input length. Positive offsets are the
  /// shorter-input condition q_{l-i,l} < p_s^i q_ll; negative offsets are the
  /// longer-input side p_s^{-i} q_{l-i,l} < q_ll.
  long long i;
  char symbol;
};

struct DominanceReport {
  bool pass = true;
  std::size_t checked_up_to = 0;
  std::optional<DominanceViolation> violation;
};

/// Checks that every observed l <= l_range decodes to itself. l_range is
/// clamped to k_max, since the estimator never returns k > k_max.
DominanceReport check_dominance_condition(const SourceModel& model, const ChannelMatrix& ch,
                                          std::size_t l_range);

struct SuccessOptions {
  /// Largest number of length histograms enumerated exactly.
  double enumeration_budget = 2'000'000;
  bool allow_monte_carlo = true;
  bool force_monte_carlo = false;
  std::size_t monte_carlo_draws = 1'000'000;
  std::uint64_t seed = 0x5EEDC0DEULL;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct SuccessEstimate {
  double value = 0.0;
  /// Binomial standard error; zero for exact results.
  double std_error = 0.0;
  bool exact = true;
  /// Histograms enumerated, or draws taken.
  std::size_t work = 0;
};

/// Number of multisets of size c over `support` lengths: C(support + c - 1, c).
/// Returned as double so very large counts saturate instead of overflowing.
double histogram_count(std::size_t support, std::size_t c);

/// m_kc: probability that c reads of a true length-k block decode back to k.
SuccessEstimate block_success_prob(const SourceModel& model, const ChannelMatrix& ch,
                                   char symbol, std::size_t k, std::size_t c,
                                   const SuccessOptions& options = {});

/// m_kc for every k = 1..k_max (entry k-1) from one shared enumeration.
std::vector<SuccessEstimate> block_success_table(const SourceModel& model,
                                                 const ChannelMatrix& ch, char symbol,
                                                 std::size_t c,
                                                 const SuccessOptions& options = {});

/// sum_k P_sk m_kc for one symbol: the chance a random block decodes correctly.
SuccessEstimate per_block_success(const SourceModel& model, const ChannelMatrix& ch,
                                  char symbol, std::size_t c,
                                  const SuccessOptions& options = {});

struct ReconstructionEstimate {
  /// n sum_s p_s(1-p_s) ln(sum_k P_sk m_kc), in nats. At most zero.
  double log_prob = 0.0;
  bool exact = true;
  std::vector<SuccessEstimate> per_symbol;
};

ReconstructionEstimate accurate_reconstruction_prob(const SourceModel& model,
                                                    const ChannelMatrix& ch, std::size_t n,
                                                    std::size_t c,
                                                    const SuccessOptions& options = {});

/// c aligned reads of one sequence. All replicas share block count and symbols.
class ReadBundle {
 public:
  explicit ReadBundle(std::vector<BlockSequence> replicas);

  std::size_t replica_count() const noexcept { return replicas_.size(); }
  std::size_t block_count() const noexcept { return symbols_.size(); }
  const std::string& symbols() const noexcept { return symbols_; }
  std::span<const BlockSequence> replicas() const noexcept { return replicas_; }
  std::span<const LengthCount> histogram(std::size_t block) const { return histograms_[block]; }

 private:
  std::vector<BlockSequence> replicas_;
  std::string symbols_;
  std::vector<LengthHistogram> histograms_;
};

/// One replica per line as "symbol:length" tokens separated by spaces.
/// Blank lines and '#' comments are skipped. Throws ParseError.
ReadBundle parse_read_bundle(std::istream& in);
ReadBundle load_read_bundle(const std::string& path);
void write_read_bundle(std::ostream& out, const ReadBundle& bundle);

struct DecodeResult {
  std::string symbols;
  std::vector<std::size_t> estimated_lengths;
  std::vector<double> log_posterior;
  std::vector<bool> ties;

  BlockSequence blocks() const;
};

/// Decodes each block independently from its replica histogram.
DecodeResult decode_sequence(const SourceModel& model, const ChannelMatrix& ch,
                             const ReadBundle& reads);
DecodeResult decode_sequence(const BlockDecoder& decoder, const ReadBundle& reads);

/// CSV "block,symbol,k_hat,log_posterior,tie" with 1-based block numbers.
void write_decode_csv(std::ostream& out, const DecodeResult& result);

}  // namespace sticky
