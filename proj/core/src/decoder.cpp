#include "sticky/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "sticky/error.hpp"
#include "sticky/format.hpp"

namespace sticky {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kBatchSize = 4096;

struct Count {
  std::uint64_t hits = 0;
  std::uint64_t draws = 0;
  Count& operator+=(const Count& o) {
    hits += o.hits;
    draws += o.draws;
    return *this;
  }
};

// Visits every multiset of `c` lengths drawn from [lo, hi] as a
// non-decreasing sequence. At each leaf, `leaf(objectives, log_multinomial)`
// receives the decoder objective for every k (index k-1) and the log of the
// multinomial coefficient c!/prod(count!).
class MultisetWalker {
 public:
  MultisetWalker(const BlockDecoder& dec, std::size_t symbol, std::size_t c)
      : dec_(dec), c_(c), k_max_(dec.k_max()), obj_((c + 1) * dec.k_max()), chosen_(c) {
    for (std::size_t k = 1; k <= k_max_; ++k) {
      obj_[k - 1] = static_cast<double>(k - 1) * dec.log_p(symbol);
    }
  }

  template <class Leaf>
  void walk(std::size_t lo, std::size_t hi, Leaf&& leaf) {
    recurse(0, lo, hi, 0, 0.0, leaf);
  }

 private:
  template <class Leaf>
  void recurse(std::size_t depth, std::size_t start, std::size_t hi, std::size_t run,
               double log_coef, Leaf& leaf) {
    const double* cur = obj_.data() + depth * k_max_;
    if (depth == c_) {
      leaf(std::span<const double>(cur, k_max_), log_coef);
      return;
    }
    double* next = obj_.data() + (depth + 1) * k_max_;
    for (std::size_t l = start; l <= hi; ++l) {
      const std::size_t new_run = (depth > 0 && chosen_[depth - 1] == l) ? run + 1 : 1;
      const double coef = log_coef + std::log(static_cast<double>(depth + 1)) -
                          std::log(static_cast<double>(new_run));
      for (std::size_t k = 1; k <= k_max_; ++k) next[k - 1] = cur[k - 1] + dec_.log_q(k, l);
      chosen_[depth] = l;
      recurse(depth + 1, l, hi, new_run, coef, leaf);
    }
  }

  const BlockDecoder& dec_;
  std::size_t c_;
  std::size_t k_max_;
  std::vector<double> obj_;
  std::vector<std::size_t> chosen_;
};

LengthHistogram histogram_of(std::vector<std::size_t>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  LengthHistogram hist;
  for (const auto l : scratch) {
    if (!hist.empty() && hist.back().length == l) {
      ++hist.back().count;
    } else {
      hist.push_back({l, 1});
    }
  }
  return hist;
}

void check_replicas(std::size_t c) {
  if (c == 0) throw DomainError("replica count must be at least 1");
}

void check_length(const ChannelMatrix& ch, std::size_t k) {
  if (k == 0 || k > ch.k_max()) {
    throw DomainError("block length " + std::to_string(k) + " outside 1.." +
                      std::to_string(ch.k_max()));
  }
}

SuccessEstimate binomial_estimate(const Count& count, double scale) {
  SuccessEstimate est;
  const double n = static_cast<double>(count.draws);
  const double rate = static_cast<double>(count.hits) / n;
  est.value = scale * rate;
  est.std_error = scale * std::sqrt(rate * (1.0 - rate) / n);
  est.exact = false;
  est.work = static_cast<std::size_t>(count.draws);
  return est;
}

void require_sampling(const SuccessOptions& options, double histograms) {
  if (!options.allow_monte_carlo) {
    throw ResourceError("exact enumeration needs " + format_number(histograms) +
                        " histograms, above the budget of " +
                        format_number(options.enumeration_budget) +
                        ", and Monte Carlo is disabled");
  }
  if (options.monte_carlo_draws == 0) throw DomainError("Monte Carlo draw count is zero");
}

// Fraction of c-read draws from row k that decode back to k.
SuccessEstimate sample_block_success(const BlockDecoder& dec, const ChannelMatrix& ch,
                                     std::size_t symbol, std::size_t k, std::size_t c,
                                     const SuccessOptions& options) {
  const std::size_t draws = options.monte_carlo_draws;
  const std::size_t batches = (draws + kBatchSize - 1) / kBatchSize;
  const auto master = detail::mix_seed(options.seed, k, c, symbol);
  const auto count = detail::run_batches<Count>(
      batches, options.threads, [&](std::size_t b, Count& tally) {
        RandomStream stream(master, b);
        std::vector<std::size_t> lengths(c);
        std::vector<double> obj(dec.k_max());
        const std::size_t todo = std::min(kBatchSize, draws - b * kBatchSize);
        for (std::size_t i = 0; i < todo; ++i) {
          for (auto& l : lengths) l = ch.sample(k, stream);
          const auto hist = histogram_of(lengths);
          for (std::size_t kk = 1; kk <= dec.k_max(); ++kk) {
            obj[kk - 1] = dec.objective(symbol, kk, hist);
          }
          if (BlockDecoder::select(obj).k == k) ++tally.hits;
          ++tally.draws;
        }
      });
  return binomial_estimate(count, 1.0);
}

}  // namespace

LengthHistogram make_histogram(std::span<const std::size_t> lengths) {
  std::vector<std::size_t> scratch(lengths.begin(), lengths.end());
  return histogram_of(scratch);
}

BlockDecoder::BlockDecoder(const SourceModel& model, const ChannelMatrix& ch)
    : alphabet_(model.alphabet()), k_max_(ch.k_max()), l_max_(ch.l_max()) {
  for (const double p : model.probs()) log_p_.push_back(std::log(p));
  log_q_.resize(k_max_ * l_max_);
  for (std::size_t k = 1; k <= k_max_; ++k) {
    for (std::size_t l = 1; l <= l_max_; ++l) {
      const double q = ch.at(k, l);
      log_q_[(k - 1) * l_max_ + (l - 1)] = q > 0.0 ? std::log(q) : kNegInf;
    }
  }
}

std::size_t BlockDecoder::symbol_index(char symbol) const {
  const auto i = alphabet_.find(symbol);
  if (i == std::string::npos) {
    throw InvalidInput(std::string("symbol '") + symbol + "' is not in alphabet \"" +
                       alphabet_ + "\"");
  }
  return i;
}

double BlockDecoder::objective(std::size_t symbol_index, std::size_t k,
                               std::span<const LengthCount> hist) const {
  double value = static_cast<double>(k - 1) * log_p_[symbol_index];
  for (const auto& [l, count] : hist) {
    const double lq = log_q(k, l);
    if (lq == kNegInf) return kNegInf;
    value += static_cast<double>(count) * lq;
  }
  return value;
}

MapEstimate BlockDecoder::select(std::span<const double> objectives) {
  double best = kNegInf;
  for (const double v : objectives) best = std::max(best, v);
  MapEstimate est;
  if (best == kNegInf) return est;
  const double tol = kTieTolerance * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    if (objectives[i] >= best - tol) {
      if (est.k == 0) {
        est.k = i + 1;
        est.log_objective = objectives[i];
      } else {
        est.tie = true;
        break;
      }
    }
  }
  return est;
}

MapEstimate BlockDecoder::decode(std::size_t symbol_index, std::span<const LengthCount> hist) const {
  if (hist.empty()) throw InvalidInput("cannot decode an empty length histogram");
  std::vector<double> obj(k_max_);
  for (std::size_t k = 1; k <= k_max_; ++k) obj[k - 1] = objective(symbol_index, k, hist);
  auto est = select(obj);
  if (est.k != 0) return est;

  for (const auto& [l, count] : hist) {
    bool possible = false;
    for (std::size_t k = 1; k <= k_max_ && !possible; ++k) possible = log_q(k, l) != kNegInf;
    if (!possible) {
      throw ImpossibleObservation("observed length " + std::to_string(l) +
                                  " has probability zero for every k in 1.." +
                                  std::to_string(k_max_));
    }
  }
  std::string lengths;
  for (const auto& [l, count] : hist) {
    if (!lengths.empty()) lengths += ",";
    lengths += std::to_string(l);
  }
  throw ImpossibleObservation("no single k in 1.." + std::to_string(k_max_) +
                              " explains the observed lengths {" + lengths + "}");
}

MapEstimate BlockDecoder::decode(char symbol, std::size_t l) const {
  if (l == 0) throw DomainError("observed length must be at least 1");
  const LengthCount single{l, 1};
  return decode(symbol_index(symbol), std::span<const LengthCount>(&single, 1));
}

MapEstimate map_block_single(const SourceModel& model, const ChannelMatrix& ch, char symbol,
                             std::size_t l) {
  return BlockDecoder(model, ch).decode(symbol, l);
}

MapEstimate map_block_multi(const SourceModel& model, const ChannelMatrix& ch, char symbol,
                            std::span<const LengthCount> hist) {
  return BlockDecoder(model, ch).decode(symbol, hist);
}

DominanceReport check_dominance_condition(const SourceModel& model, const ChannelMatrix& ch,
                                          std::size_t l_range) {
  const BlockDecoder dec(model, ch);
  DominanceReport report;
  report.checked_up_to = std::min(l_range, ch.k_max());
  const std::size_t top = report.checked_up_to;

  // Single-read objective (k-1) ln p_s + ln q_kl; a violation is any
  // competitor that the estimator would prefer over k = l.
  auto obj = [&](std::size_t s, std::size_t k, std::size_t l) {
    return static_cast<double>(k - 1) * dec.log_p(s) + dec.log_q(k, l);
  };
  for (std::size_t l = 1; l <= top && report.pass; ++l) {
    for (std::size_t s = 0; s < model.size() && report.pass; ++s) {
      const double own = obj(s, l, l);
      const char symbol = model.alphabet()[s];
      if (own == kNegInf) {
        report.pass = false;
        report.violation = DominanceViolation{l, 0, symbol};
        break;
      }
      const double tol = kTieTolerance * std::max(1.0, std::abs(own));
      for (std::size_t i = 1; i < l; ++i) {
        if (obj(s, l - i, l) >= own - tol) {
          report.pass = false;
          report.violation = DominanceViolation{l, static_cast<long long>(i), symbol};
          break;
        }
      }
      for (std::size_t k = l + 1; k <= ch.k_max() && report.pass; ++k) {
        if (obj(s, k, l) > own + tol) {
          report.pass = false;
          report.violation = DominanceViolation{l, -static_cast<long long>(k - l), symbol};
        }
      }
    }
  }
  if (report.pass) {
    for (std::size_t l = 1; l <= top; ++l) {
      for (const char s : model.alphabet()) {
        if (dec.decode(s, l).k != l) {
          throw std::logic_error("dominance check passed but length " + std::to_string(l) +
                                 " does not decode to itself");
        }
      }
    }
  }
  return report;
}

double histogram_count(std::size_t support, std::size_t c) {
  // C(support + c - 1, c) built as a running product of ratios.
  double count = 1.0;
  for (std::size_t j = 1; j <= c; ++j) {
    count *= static_cast<double>(support - 1 + j) / static_cast<double>(j);
  }
  return std::round(count);
}

SuccessEstimate block_success_prob(const SourceModel& model, const ChannelMatrix& ch,
                                   char symbol, std::size_t k, std::size_t c,
                                   const SuccessOptions& options) {
  check_replicas(c);
  check_length(ch, k);
  const BlockDecoder dec(model, ch);
  const std::size_t s = dec.symbol_index(symbol);
  const std::size_t lo = ch.support_begin(k);
  const std::size_t hi = ch.support_end(k);
  const double histograms = histogram_count(hi - lo + 1, c);

  if (options.force_monte_carlo || histograms > options.enumeration_budget) {
    require_sampling(options, histograms);
    return sample_block_success(dec, ch, s, k, c, options);
  }

  const double prior = static_cast<double>(k - 1) * dec.log_p(s);
  long double total = 0.0L;
  std::size_t leaves = 0;
  MultisetWalker walker(dec, s, c);
  walker.walk(lo, hi, [&](std::span<const double> obj, double log_coef) {
    ++leaves;
    if (obj[k - 1] == kNegInf) return;
    if (BlockDecoder::select(obj).k == k) {
      total += std::exp(static_cast<long double>(log_coef + obj[k - 1] - prior));
    }
  });
  SuccessEstimate est;
  est.value = static_cast<double>(std::min(total, 1.0L));
  est.work = leaves;
  return est;
}

std::vector<SuccessEstimate> block_success_table(const SourceModel& model,
                                                 const ChannelMatrix& ch, char symbol,
                                                 std::size_t c, const SuccessOptions& options) {
  check_replicas(c);
  const BlockDecoder dec(model, ch);
  const std::size_t s = dec.symbol_index(symbol);
  std::size_t lo = ch.l_max();
  std::size_t hi = 1;
  for (std::size_t k = 1; k <= ch.k_max(); ++k) {
    lo = std::min(lo, ch.support_begin(k));
    hi = std::max(hi, ch.support_end(k));
  }
  const double histograms = histogram_count(hi - lo + 1, c);

  std::vector<SuccessEstimate> table(ch.k_max());
  if (options.force_monte_carlo || histograms > options.enumeration_budget) {
    require_sampling(options, histograms);
    for (std::size_t k = 1; k <= ch.k_max(); ++k) {
      table[k - 1] = sample_block_success(dec, ch, s, k, c, options);
    }
    return table;
  }

  // Each histogram contributes its probability under k_hat to m_{k_hat, c}.
  std::vector<long double> totals(ch.k_max(), 0.0L);
  std::size_t leaves = 0;
  MultisetWalker walker(dec, s, c);
  walker.walk(lo, hi, [&](std::span<const double> obj, double log_coef) {
    ++leaves;
    const auto est = BlockDecoder::select(obj);
    if (est.k == 0) return;
    const double prior = static_cast<double>(est.k - 1) * dec.log_p(s);
    totals[est.k - 1] += std::exp(static_cast<long double>(log_coef + obj[est.k - 1] - prior));
  });
  for (std::size_t k = 0; k < table.size(); ++k) {
    table[k].value = static_cast<double>(std::min(totals[k], 1.0L));
    table[k].work = leaves;
  }
  return table;
}

SuccessEstimate per_block_success(const SourceModel& model, const ChannelMatrix& ch,
                                  char symbol, std::size_t c, const SuccessOptions& options) {
  check_replicas(c);
  const double p = model.prob(symbol);
  std::size_t lo = ch.l_max();
  std::size_t hi = 1;
  for (std::size_t k = 1; k <= ch.k_max(); ++k) {
    lo = std::min(lo, ch.support_begin(k));
    hi = std::max(hi, ch.support_end(k));
  }
  const double histograms = histogram_count(hi - lo + 1, c);

  if (!options.force_monte_carlo && histograms <= options.enumeration_budget) {
    const auto table = block_success_table(model, ch, symbol, c, options);
    long double total = 0.0L;
    for (std::size_t k = 1; k <= ch.k_max(); ++k) {
      total += block_length_pmf(p, k) * table[k - 1].value;
    }
    SuccessEstimate est;
    est.value = static_cast<double>(total);
    est.work = table.front().work;
    return est;
  }

  // Draw the true length from the truncated prior, then c reads of it.
  require_sampling(options, histograms);
  const BlockDecoder dec(model, ch);
  const std::size_t s = dec.symbol_index(symbol);
  std::vector<double> prior_cdf(ch.k_max());
  double mass = 0.0;
  for (std::size_t k = 1; k <= ch.k_max(); ++k) {
    mass += block_length_pmf(p, k);
    prior_cdf[k - 1] = mass;
  }
  for (auto& v : prior_cdf) v /= mass;

  const std::size_t draws = options.monte_carlo_draws;
  const std::size_t batches = (draws + kBatchSize - 1) / kBatchSize;
  const auto master = detail::mix_seed(options.seed, 0, c, s + 1);
  const auto count = detail::run_batches<Count>(
      batches, options.threads, [&](std::size_t b, Count& tally) {
        RandomStream stream(master, b);
        std::vector<std::size_t> lengths(c);
        std::vector<double> obj(dec.k_max());
        const std::size_t todo = std::min(kBatchSize, draws - b * kBatchSize);
        for (std::size_t i = 0; i < todo; ++i) {
          const auto it = std::upper_bound(prior_cdf.begin(), prior_cdf.end(), stream.uniform());
          const std::size_t k =
              std::min<std::size_t>(static_cast<std::size_t>(it - prior_cdf.begin()) + 1,
                                    ch.k_max());
          for (auto& l : lengths) l = ch.sample(k, stream);
          const auto hist = histogram_of(lengths);
          for (std::size_t kk = 1; kk <= dec.k_max(); ++kk) {
            obj[kk - 1] = dec.objective(s, kk, hist);
          }
          if (BlockDecoder::select(obj).k == k) ++tally.hits;
          ++tally.draws;
        }
      });
  return binomial_estimate(count, mass);
}

ReconstructionEstimate accurate_reconstruction_prob(const SourceModel& model,
                                                    const ChannelMatrix& ch, std::size_t n,
                                                    std::size_t c,
                                                    const SuccessOptions& options) {
  if (n == 0) throw DomainError("sequence length must be at least 1");
  check_replicas(c);
  ReconstructionEstimate out;
  double rate = 0.0;
  for (std::size_t s = 0; s < model.size(); ++s) {
    const char symbol = model.alphabet()[s];
    const double p = model.probs()[s];
    auto est = per_block_success(model, ch, symbol, c, options);
    out.exact = out.exact && est.exact;
    // Clamp: sampled or rounded values can sit a hair above 1.
    rate += p * (1.0 - p) * std::log(std::min(est.value, 1.0));
    out.per_symbol.push_back(est);
  }
  out.log_prob = static_cast<double>(n) * rate;
  return out;
}

ReadBundle::ReadBundle(std::vector<BlockSequence> replicas) : replicas_(std::move(replicas)) {
  if (replicas_.empty()) throw InvalidInput("a read bundle needs at least one replica");
  symbols_ = replicas_.front().symbols();
  if (symbols_.empty()) throw InvalidInput("replicas must contain at least one block");
  for (std::size_t j = 1; j < replicas_.size(); ++j) {
    if (replicas_[j].size() != symbols_.size()) {
      throw StructuralMismatch("replica " + std::to_string(j + 1) + " has " +
                               std::to_string(replicas_[j].size()) + " blocks, expected " +
                               std::to_string(symbols_.size()));
    }
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (replicas_[j][i].symbol != symbols_[i]) {
        throw StructuralMismatch("replica " + std::to_string(j + 1) + " block " +
                                 std::to_string(i + 1) + " reads '" +
                                 replicas_[j][i].symbol + "', expected '" + symbols_[i] +
                                 "'");
      }
    }
  }
  histograms_.resize(symbols_.size());
  std::vector<std::size_t> lengths(replicas_.size());
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    for (std::size_t j = 0; j < replicas_.size(); ++j) lengths[j] = replicas_[j][i].length;
    histograms_[i] = make_histogram(lengths);
  }
}

ReadBundle parse_read_bundle(std::istream& in) {
  std::vector<BlockSequence> replicas;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string token;
    std::vector<Block> blocks;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon != 1 || token.size() < 3) {
        throw ParseError(number, "expected symbol:length, got '" + token + "'");
      }
      const auto digits = token.substr(2);
      if (digits.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError(number, "bad block length in '" + token + "'");
      }
      std::size_t length = 0;
      try {
        length = std::stoul(digits);
      } catch (const std::exception&) {
        throw ParseError(number, "bad block length in '" + token + "'");
      }
      blocks.push_back({token[0], length});
    }
    if (blocks.empty()) continue;
    try {
      replicas.emplace_back(std::move(blocks));
    } catch (const InvalidInput& e) {
      throw ParseError(number, e.what());
    }
    line_of.push_back(number);
  }
  if (replicas.empty()) throw ParseError(number == 0 ? 1 : number, "no replicas found");
  try {
    return ReadBundle(std::move(replicas));
  } catch (const StructuralMismatch& e) {
    // Point at the first replica line that disagrees with the first one.
    const std::string msg = e.what();
    std::size_t bad = line_of.front();
    const auto pos = msg.find("replica ");
    if (pos != std::string::npos) {
      const auto j = std::stoul(msg.substr(pos + 8));
      if (j >= 1 && j <= line_of.size()) bad = line_of[j - 1];
    }
    throw ParseError(bad, msg);
  }
}

ReadBundle load_read_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return parse_read_bundle(in);
}

void write_read_bundle(std::ostream& out, const ReadBundle& bundle) {
  for (const auto& replica : bundle.replicas()) {
    bool first = true;
    for (const auto& b : replica.blocks()) {
      if (!first) out << ' ';
      out << b.symbol << ':' << b.length;
      first = false;
    }
    out << '\n';
  }
}

BlockSequence DecodeResult::blocks() const {
  std::vector<Block> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) out.push_back({symbols[i], estimated_lengths[i]});
  return BlockSequence(std::move(out));
}

DecodeResult decode_sequence(const BlockDecoder& decoder, const ReadBundle& reads) {
  DecodeResult result;
  result.symbols = reads.symbols();
  const std::size_t n = reads.block_count();
  result.estimated_lengths.reserve(n);
  result.log_posterior.reserve(n);
  result.ties.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MapEstimate est;
    try {
      est = decoder.decode(reads.symbols()[i], reads.histogram(i));
    } catch (const ImpossibleObservation& e) {
      throw ImpossibleObservation("block " + std::to_string(i + 1) + ": " + e.what());
    }
    result.estimated_lengths.push_back(est.k);
    result.log_posterior.push_back(est.log_objective);
    result.ties.push_back(est.tie);
  }
  return result;
}

DecodeResult decode_sequence(const SourceModel& model, const ChannelMatrix& ch,
                             const ReadBundle& reads) {
  return decode_sequence(BlockDecoder(model, ch), reads);
}

void write_decode_csv(std::ostream& out, const DecodeResult& result) {
  out << "block,symbol,k_hat,log_posterior,tie\n";
  for (std::size_t i = 0; i < result.symbols.size(); ++i) {
    out << (i + 1) << ',' << result.symbols[i] << ',' << result.estimated_lengths[i] << ','
        << format_number(result.log_posterior[i]) << ',' << (result.ties[i] ? 1 : 0) << '\n';
  }
}

}  // namespace sticky
