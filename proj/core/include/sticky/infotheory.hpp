#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sticky/channel.hpp"
#include "sticky/source_model.hpp"

namespace sticky {

/// h(p) = -p ln p - (1-p) ln(1-p) in nats, with 0 ln 0 = 0.
double binary_entropy(double p);

/// D(p || q) in nats over aligned supports: +inf when some p_i > 0 has q_i == 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// d_{kk'} = D({q_kl}_l || {q_k'l}_l). Not symmetric.
double kl_divergence_rows(const ChannelMatrix& ch, std::size_t k, std::size_t k2);

/// Inclusive 1-based index range.
struct IndexRange {
  std::size_t first = 1;
  std::size_t last = 1;

  std::size_t size() const noexcept { return last - first + 1; }
  bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
};

enum class MinimumStatus {
  found,
  /// Every off-diagonal entry is +inf.
  no_finite_entries,
  /// The smallest entry sits on the window's far edge and neighbouring
  /// divergences are still shrinking, so no minimum exists in the limit.
  not_attained,
};

std::string to_string(MinimumStatus status);

struct MinimumEntry {
  double value;
  std::size_t row;
  std::size_t col;
};

/// Pairwise divergences over a (row, column) window; entries lie in [0, +inf].
struct DivergenceTable {
  IndexRange rows;
  IndexRange cols;
  /// Row-major over the window.
  std::vector<double> values;
  /// Symbol labels for substitution tables; empty for length tables.
  std::string labels;
  MinimumStatus status = MinimumStatus::no_finite_entries;
  /// Set only when status == found.
  std::optional<MinimumEntry> d_min;
  /// Smallest finite off-diagonal entry seen in the window, whatever the status.
  std::optional<MinimumEntry> window_minimum;

  double at(std::size_t row, std::size_t col) const {
    return values[(row - rows.first) * cols.size() + (col - cols.first)];
  }
};

DivergenceTable kl_table(const ChannelMatrix& ch, IndexRange rows, IndexRange cols);
inline DivergenceTable kl_table(const ChannelMatrix& ch, IndexRange window) {
  return kl_table(ch, window, window);
}

/// d_{ss'} between confusion rows; indices follow the channel's alphabet.
DivergenceTable substitution_divergences(const SubstitutionChannel& sub);

/// Matrix CSV: header "k,<cols...>" then one line per row, then a
/// "# d_min ..." summary comment. Six significant digits, "inf" for +inf.
void write_divergence_csv(std::ostream& out, const DivergenceTable& table);
std::string divergence_json(const DivergenceTable& table, const ChannelMatrix& ch);
std::string divergence_json(const DivergenceTable& table, const SubstitutionChannel& sub);

struct SymbolEntropy {
  char symbol;
  double order;   // h_s
  double length;  // h^x_s
  double output;  // h^y_s
  double joint;   // h^{xy}_s
};

/// Single-read entropy budget in nats; rates are per input symbol.
struct EntropyReport {
  double h_x = 0.0;
  std::vector<SymbolEntropy> per_symbol;
  /// h^q_k = -sum_l q_kl ln q_kl, entry k-1.
  std::vector<double> h_q;
  double conditional_rate = 0.0;
  double mutual_rate = 0.0;
  /// Largest prior mass p_s^{k_max} lost by truncating block lengths at k_max.
  double prior_tail_mass = 0.0;
};

EntropyReport conditional_entropy_single(const SourceModel& model, const ChannelMatrix& ch);

/// Long-format CSV "quantity,index,value".
void write_entropy_csv(std::ostream& out, const EntropyReport& report);
std::string entropy_json(const EntropyReport& report, const SourceModel& model,
                         const ChannelMatrix& ch);

enum class EntropyApproximation {
  /// n sum_s (1-p_s)^2 sum_k sum_{k'!=k} p_s^{k'} exp(-c d_kk').
  linearized,
  /// Keeps the ln(1 + x) per input length before linearizing.
  log1p,
};

struct MultiExtrusionEntropy {
  std::size_t c = 0;
  std::size_t n = 0;
  /// Approximate H(X^n | Y^{nc}) in nats.
  double con1 = 0.0;
  /// Dominant-term form n exp(-c d_min) sum_s (1-p_s)^2 p_s^{k0'}; absent
  /// when d_min does not exist.
  std::optional<double> con2;
};

struct ReplicaRequirement {
  std::size_t replicas = 0;
  /// Approximate conditional entropy at `replicas`.
  double entropy = 0.0;
  /// ln(n A / threshold) / d_min where it exists.
  std::optional<double> closed_form;
};

inline constexpr std::size_t kMaxReplicas = 10'000;

/// Caches the full k_max x k_max divergence table so replica sweeps reuse it.
class ReplicaAnalyzer {
 public:
  ReplicaAnalyzer(const SourceModel& model, const ChannelMatrix& ch);

  const DivergenceTable& divergences() const noexcept { return table_; }

  MultiExtrusionEntropy entropy(std::size_t c, std::size_t n,
                                EntropyApproximation approx = EntropyApproximation::linearized) const;

  /// Smallest c >= 1 with entropy(c, n) <= threshold; ConvergenceError past kMaxReplicas.
  ReplicaRequirement required(std::size_t n, double threshold = 1.0,
                              EntropyApproximation approx = EntropyApproximation::linearized) const;

  /// sum_s (1-p_s)^2 p_s^{k0'} for the d_min pair; zero when d_min is absent.
  double dominant_weight() const noexcept { return dominant_weight_; }

 private:
  struct Pair {
    std::size_t k;
    std::size_t k2;
    double d;
  };

  std::vector<double> probs_;
  std::size_t k_max_;
  DivergenceTable table_;
  std::vector<Pair> finite_;
  double dominant_weight_ = 0.0;
};

MultiExtrusionEntropy conditional_entropy_multi(
    const SourceModel& model, const ChannelMatrix& ch, std::size_t c, std::size_t n,
    EntropyApproximation approx = EntropyApproximation::linearized);

ReplicaRequirement required_replicas(const SourceModel& model, const ChannelMatrix& ch,
                                     std::size_t n, double threshold = 1.0,
                                     EntropyApproximation approx = EntropyApproximation::linearized);

/// n sum_s p_s sum_{s'!=s} exp(-c d_ss').
double substitution_entropy(const SourceModel& model, const SubstitutionChannel& sub,
                            std::size_t c, std::size_t n);

/// Smallest c with substitution_entropy <= threshold. The closed form uses
/// A' = sum of p_s over the pairs attaining d_min.
ReplicaRequirement required_replicas_substitution(const SourceModel& model,
                                                  const SubstitutionChannel& sub, std::size_t n,
                                                  double threshold = 1.0);

struct SubstitutionBounds {
  double entropy = 0.0;
  DivergenceTable divergences;
  /// Empty when the scan did not converge; `failure` then says why.
  std::optional<ReplicaRequirement> required;
  std::string failure;
};

SubstitutionBounds substitution_bounds(const SourceModel& model, const SubstitutionChannel& sub,
                                       std::size_t c, std::size_t n, double threshold = 1.0);

}  // namespace sticky
