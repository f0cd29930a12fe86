#include "sticky/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "sticky/error.hpp"
#include "json_util.hpp"
#include "sticky/format.hpp"

namespace sticky {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json describe(const ChannelMatrix& ch) {
  nlohmann::json j;
  j["kind"] = to_string(ch.kind());
  if (ch.kind() == ChannelKind::exponential) j["q"] = ch.param();
  if (ch.kind() == ChannelKind::independent_indel) j["eps"] = ch.param();
  j["k_max"] = ch.k_max();
  j["l_max"] = ch.l_max();
  j["tail_tol"] = ch.tail_tol();
  return j;
}

nlohmann::json describe(const SourceModel& model) {
  return {{"alphabet", model.alphabet()},
          {"probs", std::vector<double>(model.probs().begin(), model.probs().end())}};
}

nlohmann::json table_json(const DivergenceTable& table) {
  nlohmann::json j;
  j["rows"] = {table.rows.first, table.rows.last};
  j["cols"] = {table.cols.first, table.cols.last};
  if (!table.labels.empty()) j["labels"] = table.labels;
  auto values = nlohmann::json::array();
  for (std::size_t r = table.rows.first; r <= table.rows.last; ++r) {
    auto line = nlohmann::json::array();
    for (std::size_t c = table.cols.first; c <= table.cols.last; ++c) {
      line.push_back(number_or_inf(table.at(r, c)));
    }
    values.push_back(line);
  }
  j["values"] = values;
  j["d_min_status"] = to_string(table.status);
  if (table.d_min) {
    j["d_min"] = {{"value", table.d_min->value},
                  {"row", table.d_min->row},
                  {"col", table.d_min->col}};
  }
  if (table.window_minimum) {
    j["window_minimum"] = {{"value", table.window_minimum->value},
                           {"row", table.window_minimum->row},
                           {"col", table.window_minimum->col}};
  }
  return j;
}

// Scans the finite off-diagonal entries and fills window_minimum.
void find_window_minimum(DivergenceTable& table) {
  for (std::size_t r = table.rows.first; r <= table.rows.last; ++r) {
    for (std::size_t c = table.cols.first; c <= table.cols.last; ++c) {
      const double d = table.at(r, c);
      if (r == c || std::isinf(d)) continue;
      if (!table.window_minimum || d < table.window_minimum->value) {
        table.window_minimum = MinimumEntry{d, r, c};
      }
    }
  }
}

std::string symbol_label(const DivergenceTable& table, std::size_t i) {
  if (table.labels.empty()) return std::to_string(i);
  return std::string(1, table.labels[i - 1]);
}

}  // namespace

std::string to_string(MinimumStatus status) {
  switch (status) {
    case MinimumStatus::found:
      return "found";
    case MinimumStatus::no_finite_entries:
      return "no-finite-entries";
    case MinimumStatus::not_attained:
      return "not-attained";
  }
  return "unknown";
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw DomainError("probability must lie in [0, 1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double qi = i < q.size() ? q[i] : 0.0;
    if (qi <= 0.0) return kInf;
    sum += static_cast<long double>(p[i]) *
           std::log(static_cast<long double>(p[i]) / static_cast<long double>(qi));
  }
  // Gibbs: anything below zero is rounding.
  return std::max(0.0, static_cast<double>(sum));
}

double kl_divergence_rows(const ChannelMatrix& ch, std::size_t k, std::size_t k2) {
  const auto a = ch.row(k);
  const auto b = ch.row(k2);
  if (k == k2) return 0.0;
  return kl_divergence(a, b);
}

DivergenceTable kl_table(const ChannelMatrix& ch, IndexRange rows, IndexRange cols) {
  if (rows.first == 0 || cols.first == 0 || rows.first > rows.last || cols.first > cols.last ||
      rows.last > ch.k_max() || cols.last > ch.k_max()) {
    throw DomainError("divergence window must lie within 1.." + std::to_string(ch.k_max()));
  }
  DivergenceTable table;
  table.rows = rows;
  table.cols = cols;
  table.values.resize(rows.size() * cols.size());
  for (std::size_t r = rows.first; r <= rows.last; ++r) {
    for (std::size_t c = cols.first; c <= cols.last; ++c) {
      table.values[(r - rows.first) * cols.size() + (c - cols.first)] =
          kl_divergence_rows(ch, r, c);
    }
  }
  find_window_minimum(table);
  if (!table.window_minimum) {
    table.status = MinimumStatus::no_finite_entries;
    return table;
  }

  const auto& m = *table.window_minimum;
  const bool on_edge = m.row == rows.last || m.col == cols.last;
  // Trend of neighbour divergences d_{k,k+1} over the last two rows.
  bool shrinking = false;
  const std::size_t last = rows.last;
  if (last + 1 <= ch.k_max() && last >= 2) {
    shrinking = kl_divergence_rows(ch, last, last + 1) < kl_divergence_rows(ch, last - 1, last);
  } else if (last >= 3) {
    shrinking = kl_divergence_rows(ch, last - 1, last) < kl_divergence_rows(ch, last - 2, last - 1);
  }
  if (on_edge && shrinking) {
    table.status = MinimumStatus::not_attained;
  } else {
    table.status = MinimumStatus::found;
    table.d_min = m;
  }
  return table;
}

DivergenceTable substitution_divergences(const SubstitutionChannel& sub) {
  DivergenceTable table;
  const auto m = sub.size();
  table.rows = {1, m};
  table.cols = {1, m};
  table.labels = sub.alphabet();
  table.values.resize(m * m);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t t = 0; t < m; ++t) {
      table.values[s * m + t] = s == t ? 0.0 : kl_divergence(sub.row(s), sub.row(t));
    }
  }
  find_window_minimum(table);
  if (table.window_minimum) {
    table.status = MinimumStatus::found;
    table.d_min = table.window_minimum;
  }
  return table;
}

void write_divergence_csv(std::ostream& out, const DivergenceTable& table) {
  out << (table.labels.empty() ? "k" : "s");
  for (std::size_t c = table.cols.first; c <= table.cols.last; ++c) {
    out << ',' << symbol_label(table, c);
  }
  out << '\n';
  for (std::size_t r = table.rows.first; r <= table.rows.last; ++r) {
    out << symbol_label(table, r);
    for (std::size_t c = table.cols.first; c <= table.cols.last; ++c) {
      out << ',' << format_number(table.at(r, c));
    }
    out << '\n';
  }
  out << "# d_min ";
  if (table.d_min) {
    out << format_number(table.d_min->value) << " at (" << symbol_label(table, table.d_min->row)
        << ',' << symbol_label(table, table.d_min->col) << ")\n";
  } else {
    out << "absent (" << to_string(table.status) << ")\n";
  }
}

std::string divergence_json(const DivergenceTable& table, const ChannelMatrix& ch) {
  nlohmann::json j = table_json(table);
  j["channel"] = describe(ch);
  detail::round_floats(j);
  return j.dump(2);
}

std::string divergence_json(const DivergenceTable& table, const SubstitutionChannel& sub) {
  nlohmann::json j = table_json(table);
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < sub.size(); ++s) {
    rows.emplace_back(sub.row(s).begin(), sub.row(s).end());
  }
  j["channel"] = {{"kind", "substitution"}, {"alphabet", sub.alphabet()}, {"rows", rows}};
  detail::round_floats(j);
  return j.dump(2);
}

EntropyReport conditional_entropy_single(const SourceModel& model, const ChannelMatrix& ch) {
  const auto source = source_entropy_rate(model);
  EntropyReport report;
  report.h_x = source.h_x;
  const std::size_t k_max = ch.k_max();
  const std::size_t l_max = ch.l_max();

  report.h_q.resize(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    long double h = 0.0L;
    for (const double q : ch.row(k)) {
      if (q > 0.0) h -= static_cast<long double>(q) * std::log(static_cast<long double>(q));
    }
    report.h_q[k - 1] = static_cast<double>(h);
  }

  long double conditional = 0.0L;
  long double mutual = 0.0L;
  std::vector<long double> weights(k_max);
  std::vector<long double> output(l_max);
  for (std::size_t s = 0; s < model.size(); ++s) {
    const double p = model.probs()[s];
    report.prior_tail_mass = std::max(report.prior_tail_mass,
                                      std::pow(p, static_cast<double>(k_max)));
    // Truncated prior over k = 1..k_max, renormalized so the joint (k, l)
    // is a proper distribution and H(K|L) stays a true entropy.
    long double mass = 0.0L;
    for (std::size_t k = 1; k <= k_max; ++k) {
      weights[k - 1] = block_length_pmf(p, k);
      mass += weights[k - 1];
    }
    long double length_entropy = 0.0L;
    long double mean_hq = 0.0L;
    std::fill(output.begin(), output.end(), 0.0L);
    for (std::size_t k = 1; k <= k_max; ++k) {
      const long double w = weights[k - 1] / mass;
      weights[k - 1] = w;
      if (w > 0.0L) length_entropy -= w * std::log(w);
      mean_hq += w * report.h_q[k - 1];
      const auto r = ch.row(k);
      for (std::size_t l = 0; l < l_max; ++l) output[l] += w * r[l];
    }
    long double output_entropy = 0.0L;
    for (const long double y : output) {
      if (y > 0.0L) output_entropy -= y * std::log(y);
    }
    const long double joint = length_entropy + mean_hq;
    const long double blocks = static_cast<long double>(p) * (1.0L - p);

    // The source side uses the exact closed forms, so conditional + mutual
    // reproduces h_x for any truncation.
    const long double cond_s = std::max(0.0L, joint - output_entropy);
    conditional += blocks * cond_s;
    mutual += blocks * (source.order[s] + source.length[s] - cond_s);

    report.per_symbol.push_back({model.alphabet()[s], source.order[s], source.length[s],
                                 static_cast<double>(output_entropy),
                                 static_cast<double>(joint)});
  }
  report.conditional_rate = static_cast<double>(conditional);
  report.mutual_rate = static_cast<double>(mutual);
  return report;
}

void write_entropy_csv(std::ostream& out, const EntropyReport& report) {
  out << "quantity,index,value\n";
  out << "h_x,," << format_number(report.h_x) << '\n';
  for (const auto& s : report.per_symbol) {
    out << "h_s," << s.symbol << ',' << format_number(s.order) << '\n';
    out << "hx_s," << s.symbol << ',' << format_number(s.length) << '\n';
    out << "hy_s," << s.symbol << ',' << format_number(s.output) << '\n';
    out << "hxy_s," << s.symbol << ',' << format_number(s.joint) << '\n';
  }
  for (std::size_t k = 0; k < report.h_q.size(); ++k) {
    out << "hq_k," << (k + 1) << ',' << format_number(report.h_q[k]) << '\n';
  }
  out << "conditional_rate,," << format_number(report.conditional_rate) << '\n';
  out << "mutual_rate,," << format_number(report.mutual_rate) << '\n';
  out << "prior_tail_mass,," << format_number(report.prior_tail_mass) << '\n';
}

std::string entropy_json(const EntropyReport& report, const SourceModel& model,
                         const ChannelMatrix& ch) {
  nlohmann::json j;
  j["model"] = describe(model);
  j["channel"] = describe(ch);
  j["h_x"] = report.h_x;
  auto symbols = nlohmann::json::array();
  for (const auto& s : report.per_symbol) {
    symbols.push_back({{"symbol", std::string(1, s.symbol)},
                       {"h_s", s.order},
                       {"hx_s", s.length},
                       {"hy_s", s.output},
                       {"hxy_s", s.joint}});
  }
  j["per_symbol"] = symbols;
  j["h_q"] = report.h_q;
  j["conditional_rate"] = report.conditional_rate;
  j["mutual_rate"] = report.mutual_rate;
  j["prior_tail_mass"] = report.prior_tail_mass;
  detail::round_floats(j);
  return j.dump(2);
}

ReplicaAnalyzer::ReplicaAnalyzer(const SourceModel& model, const ChannelMatrix& ch)
    : probs_(model.probs().begin(), model.probs().end()),
      k_max_(ch.k_max()),
      table_(kl_table(ch, IndexRange{1, ch.k_max()})) {
  for (std::size_t k = 1; k <= k_max_; ++k) {
    for (std::size_t k2 = 1; k2 <= k_max_; ++k2) {
      const double d = table_.at(k, k2);
      if (k != k2 && std::isfinite(d)) finite_.push_back({k, k2, d});
    }
  }
  if (table_.d_min) {
    for (const double p : probs_) {
      dominant_weight_ += (1.0 - p) * (1.0 - p) * std::pow(p, static_cast<double>(table_.d_min->col));
    }
  }
}

MultiExtrusionEntropy ReplicaAnalyzer::entropy(std::size_t c, std::size_t n,
                                               EntropyApproximation approx) const {
  if (c == 0) throw DomainError("replica count must be at least 1");
  MultiExtrusionEntropy out;
  out.c = c;
  out.n = n;
  const double cc = static_cast<double>(c);
  long double total = 0.0L;
  for (const double p : probs_) {
    if (approx == EntropyApproximation::linearized) {
      long double inner = 0.0L;
      for (const auto& [k, k2, d] : finite_) {
        inner += std::pow(static_cast<long double>(p), static_cast<long double>(k2)) *
                 std::exp(-cc * static_cast<long double>(d));
      }
      total += (1.0L - p) * (1.0L - p) * inner;
    } else {
      // p(1-p) sum_k P_sk ln(1 + sum_{k'} p^{k'-k} e^{-c d_kk'})
      std::vector<long double> ratio_sum(k_max_, 0.0L);
      for (const auto& [k, k2, d] : finite_) {
        ratio_sum[k - 1] += std::pow(static_cast<long double>(p),
                                     static_cast<long double>(k2) - static_cast<long double>(k)) *
                            std::exp(-cc * static_cast<long double>(d));
      }
      long double inner = 0.0L;
      for (std::size_t k = 1; k <= k_max_; ++k) {
        inner += block_length_pmf(p, k) * std::log1p(ratio_sum[k - 1]);
      }
      total += static_cast<long double>(p) * (1.0L - p) * inner;
    }
  }
  out.con1 = static_cast<double>(static_cast<long double>(n) * total);
  if (table_.d_min) {
    out.con2 = static_cast<double>(n) * std::exp(-cc * table_.d_min->value) * dominant_weight_;
  }
  return out;
}

ReplicaRequirement ReplicaAnalyzer::required(std::size_t n, double threshold,
                                             EntropyApproximation approx) const {
  if (n < 2) throw DomainError("sequence length must be at least 2");
  if (!(threshold > 0.0)) throw DomainError("threshold must be positive");
  ReplicaRequirement req;
  for (std::size_t c = 1; c <= kMaxReplicas; ++c) {
    const auto h = entropy(c, n, approx);
    if (h.con1 <= threshold) {
      req.replicas = c;
      req.entropy = h.con1;
      break;
    }
  }
  if (req.replicas == 0) {
    throw ConvergenceError("no replica count up to " + std::to_string(kMaxReplicas) +
                           " brings the conditional entropy below " + format_number(threshold) +
                           " nats");
  }
  if (table_.d_min && table_.d_min->value > 0.0 && dominant_weight_ > 0.0) {
    req.closed_form =
        std::log(static_cast<double>(n) * dominant_weight_ / threshold) / table_.d_min->value;
  }
  return req;
}

MultiExtrusionEntropy conditional_entropy_multi(const SourceModel& model, const ChannelMatrix& ch,
                                                std::size_t c, std::size_t n,
                                                EntropyApproximation approx) {
  return ReplicaAnalyzer(model, ch).entropy(c, n, approx);
}

ReplicaRequirement required_replicas(const SourceModel& model, const ChannelMatrix& ch,
                                     std::size_t n, double threshold,
                                     EntropyApproximation approx) {
  return ReplicaAnalyzer(model, ch).required(n, threshold, approx);
}

namespace {

void check_alphabets(const SourceModel& model, const SubstitutionChannel& sub) {
  if (model.alphabet() != sub.alphabet()) {
    throw ValidationError("source alphabet \"" + model.alphabet() +
                          "\" does not match substitution alphabet \"" + sub.alphabet() + "\"");
  }
}

double substitution_entropy(const SourceModel& model, const DivergenceTable& table,
                            std::size_t c, std::size_t n) {
  const double cc = static_cast<double>(c);
  long double total = 0.0L;
  for (std::size_t s = 1; s <= model.size(); ++s) {
    long double inner = 0.0L;
    for (std::size_t t = 1; t <= model.size(); ++t) {
      if (s == t) continue;
      const double d = table.at(s, t);
      if (std::isfinite(d)) inner += std::exp(-cc * static_cast<long double>(d));
    }
    total += model.probs()[s - 1] * inner;
  }
  return static_cast<double>(static_cast<long double>(n) * total);
}

ReplicaRequirement required_substitution(const SourceModel& model, const DivergenceTable& table,
                                         std::size_t n, double threshold) {
  if (n < 2) throw DomainError("sequence length must be at least 2");
  if (!(threshold > 0.0)) throw DomainError("threshold must be positive");
  ReplicaRequirement req;
  for (std::size_t c = 1; c <= kMaxReplicas; ++c) {
    const double h = substitution_entropy(model, table, c, n);
    if (h <= threshold) {
      req.replicas = c;
      req.entropy = h;
      break;
    }
  }
  if (req.replicas == 0) {
    throw ConvergenceError("no replica count up to " + std::to_string(kMaxReplicas) +
                           " brings the substitution entropy below " +
                           format_number(threshold) + " nats");
  }
  if (table.d_min && table.d_min->value > 0.0) {
    const double dmin = table.d_min->value;
    const double tol = 1e-12 * std::max(1.0, dmin);
    double weight = 0.0;
    for (std::size_t s = 1; s <= model.size(); ++s) {
      for (std::size_t t = 1; t <= model.size(); ++t) {
        if (s != t && std::abs(table.at(s, t) - dmin) <= tol) weight += model.probs()[s - 1];
      }
    }
    req.closed_form = std::log(static_cast<double>(n) * weight / threshold) / dmin;
  }
  return req;
}

}  // namespace

double substitution_entropy(const SourceModel& model, const SubstitutionChannel& sub,
                            std::size_t c, std::size_t n) {
  check_alphabets(model, sub);
  if (c == 0) throw DomainError("replica count must be at least 1");
  return substitution_entropy(model, substitution_divergences(sub), c, n);
}

ReplicaRequirement required_replicas_substitution(const SourceModel& model,
                                                  const SubstitutionChannel& sub, std::size_t n,
                                                  double threshold) {
  check_alphabets(model, sub);
  return required_substitution(model, substitution_divergences(sub), n, threshold);
}

SubstitutionBounds substitution_bounds(const SourceModel& model, const SubstitutionChannel& sub,
                                       std::size_t c, std::size_t n, double threshold) {
  check_alphabets(model, sub);
  if (c == 0) throw DomainError("replica count must be at least 1");
  SubstitutionBounds out;
  out.divergences = substitution_divergences(sub);
  out.entropy = substitution_entropy(model, out.divergences, c, n);
  try {
    out.required = required_substitution(model, out.divergences, n, threshold);
  } catch (const ConvergenceError& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace sticky
