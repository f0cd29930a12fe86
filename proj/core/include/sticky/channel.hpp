#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sticky/random.hpp"
#include "sticky/source_model.hpp"

namespace sticky {

enum class ChannelKind { exponential, independent_indel, custom };

std::string to_string(ChannelKind kind);

/// Hard cap on the number of output lengths a matrix may carry.
inline constexpr std::size_t kMaxOutputLength = 4096;
inline constexpr double kDefaultTailTolerance = 1e-12;
inline constexpr std::size_t kDefaultMaxInputLength = 64;

/// Truncated, row-stochastic block-length kernel q_kl of a sticky channel.
///
/// Rows are input lengths k = 1..k_max and columns output lengths
/// l = 1..l_max; q_k0 is zero by construction. Immutable once built.
class ChannelMatrix {
 public:
  /// Takes rows already holding probabilities for l = 1..l_max; each row is
  /// divided by its sum. `discarded` is the per-row mass cut by truncation.
  ChannelMatrix(ChannelKind kind, double param, std::vector<std::vector<double>> rows,
                double tail_tol, std::vector<double> discarded);

  ChannelKind kind() const noexcept { return kind_; }
  /// q for the exponential model, eps for the independent-indel model, 0 otherwise.
  double param() const noexcept { return param_; }
  std::size_t k_max() const noexcept { return k_max_; }
  std::size_t l_max() const noexcept { return l_max_; }
  double tail_tol() const noexcept { return tail_tol_; }

  /// q_kl without range checks on l: zero outside 1..l_max. k must be valid.
  double at(std::size_t k, std::size_t l) const noexcept {
    return (l == 0 || l > l_max_) ? 0.0 : probs_[(k - 1) * l_max_ + (l - 1)];
  }
  /// Row k as a span over l = 1..l_max.
  std::span<const double> row(std::size_t k) const;
  /// Smallest and largest l with q_kl > 0.
  std::size_t support_begin(std::size_t k) const { return support_[k - 1].first; }
  std::size_t support_end(std::size_t k) const { return support_[k - 1].second; }
  /// Probability mass removed from row k before renormalization.
  double discarded_mass(std::size_t k) const { return discarded_[k - 1]; }

  /// Inverse-CDF draw from row k.
  std::size_t sample(std::size_t k, RandomStream& stream) const;

 private:
  ChannelKind kind_;
  double param_;
  std::size_t k_max_ = 0;
  std::size_t l_max_ = 0;
  double tail_tol_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::vector<std::pair<std::size_t, std::size_t>> support_;
  std::vector<double> discarded_;
};

/// q_kl = q^{|k-l|}(1-q)/(1+q-q^k), truncated where the tail drops below tail_tol.
ChannelMatrix build_exponential(double q, std::size_t k_max = kDefaultMaxInputLength,
                                double tail_tol = kDefaultTailTolerance);

/// Each base is deleted or duplicated with probability eps; row k is the
/// k-fold convolution conditioned on a nonempty output (divided by 1-eps^k).
ChannelMatrix build_independent_indel(double eps, std::size_t k_max = kDefaultMaxInputLength,
                                      double tail_tol = kDefaultTailTolerance);

/// User-supplied kernel; row k-1 holds q_kl for l = 1..rows[k-1].size().
/// Rows are zero-padded to a common l_max and must sum to 1 within 1e-9.
ChannelMatrix build_custom(std::vector<std::vector<double>> rows);

/// Noiseless sticky channel q_kl = [k == l].
ChannelMatrix identity_channel(std::size_t k_max = kDefaultMaxInputLength);

/// Parses a custom kernel: either plain text ("k_max l_max" then k_max rows
/// of l_max numbers, whitespace or comma separated) or JSON
/// {"k_max":..,"l_max":..,"rows":[[..],..]}.
ChannelMatrix parse_channel_matrix(std::istream& in);
ChannelMatrix load_channel_matrix(const std::string& path);

/// CSV with header "k,l,q", one line per (k, l), 6 significant digits.
void write_channel_csv(std::ostream& out, const ChannelMatrix& ch);

double transition_prob(const ChannelMatrix& ch, std::size_t k, std::size_t l);

/// Product of q_{k_i l_i} over aligned blocks.
double sequence_likelihood(const ChannelMatrix& ch, const BlockSequence& input,
                           const BlockSequence& output);

std::size_t sample_output_length(const ChannelMatrix& ch, std::size_t k, RandomStream& stream);

/// Per-base confusion matrix q_{s l} over a fixed alphabet.
class SubstitutionChannel {
 public:
  SubstitutionChannel(std::string alphabet, std::vector<std::vector<double>> rows);

  const std::string& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return alphabet_.size(); }
  std::span<const double> row(std::size_t s) const { return rows_[s]; }
  double at(std::size_t s, std::size_t l) const { return rows_[s][l]; }

 private:
  std::string alphabet_;
  std::vector<std::vector<double>> rows_;
};

/// Validates (square, non-negative, rows within 1e-9 of 1) and renormalizes.
SubstitutionChannel build_substitution(std::string alphabet, std::vector<std::vector<double>> rows);

/// Text form: first line the alphabet, then one row per symbol; or JSON
/// {"alphabet":"ACGT","rows":[[..],..]}.
SubstitutionChannel parse_substitution(std::istream& in);
SubstitutionChannel load_substitution(const std::string& path);

}  // namespace sticky
