#include "sticky/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>

#include <json.hpp>

#include "json_util.hpp"
#include "parallel.hpp"
#include "sticky/error.hpp"
#include "sticky/format.hpp"

namespace sticky {

namespace {

constexpr std::uint64_t kTrialsPerBatch = 4096;

struct Tally {
  std::uint64_t successes = 0;
  std::vector<std::uint64_t> blocks;
  std::vector<std::uint64_t> block_successes;

  void record(std::size_t k, bool ok) {
    if (blocks.size() < k) {
      blocks.resize(k, 0);
      block_successes.resize(k, 0);
    }
    ++blocks[k - 1];
    if (ok) ++block_successes[k - 1];
  }

  Tally& operator+=(const Tally& other) {
    successes += other.successes;
    if (blocks.size() < other.blocks.size()) {
      blocks.resize(other.blocks.size(), 0);
      block_successes.resize(other.blocks.size(), 0);
    }
    for (std::size_t i = 0; i < other.blocks.size(); ++i) {
      blocks[i] += other.blocks[i];
      block_successes[i] += other.block_successes[i];
    }
    return *this;
  }
};

double binomial_stderr(double rate, double trials) {
  return std::sqrt(rate * (1.0 - rate) / trials);
}

}  // namespace

std::string sample_source(const SourceModel& model, std::size_t n, RandomStream& stream) {
  if (n == 0) throw DomainError("sequence length must be at least 1");
  std::vector<double> cdf(model.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < model.size(); ++s) {
    acc += model.probs()[s];
    cdf[s] = acc;
  }
  const auto& alphabet = model.alphabet();
  std::string out(n, alphabet.back());
  for (auto& ch : out) {
    const double u = stream.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ch = alphabet[std::min<std::size_t>(it - cdf.begin(), alphabet.size() - 1)];
  }
  return out;
}

BlockSequence transmit(const ChannelMatrix& ch, const BlockSequence& x, RandomStream& stream) {
  std::vector<Block> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& b = x[i];
    if (b.length > ch.k_max()) {
      throw RangeError("block " + std::to_string(i + 1) + " has length " +
                       std::to_string(b.length) + " beyond k_max = " +
                       std::to_string(ch.k_max()) + "; rebuild the channel with a larger k_max");
    }
    out.push_back({b.symbol, ch.sample(b.length, stream)});
  }
  return BlockSequence(std::move(out));
}

ReadBundle replicate_transmit(const ChannelMatrix& ch, const BlockSequence& x, std::size_t c,
                              RandomStream& stream) {
  if (c == 0) throw DomainError("replica count must be at least 1");
  std::vector<BlockSequence> reads;
  reads.reserve(c);
  for (std::size_t r = 0; r < c; ++r) reads.push_back(transmit(ch, x, stream));
  return ReadBundle(std::move(reads));
}

SimulationOutcome estimate_reconstruction_rate(const SimulationConfig& cfg) {
  if (cfg.model == nullptr || cfg.channel == nullptr) {
    throw InvalidInput("simulation needs both a source model and a channel");
  }
  if (cfg.n == 0) throw DomainError("sequence length must be at least 1");
  if (cfg.c == 0) throw DomainError("replica count must be at least 1");
  if (cfg.trials == 0) throw DomainError("trial count must be at least 1");
  if (cfg.trials > kMaxTrials) {
    throw DomainError("trial count is capped at " + std::to_string(kMaxTrials));
  }

  const auto& model = *cfg.model;
  const auto& ch = *cfg.channel;
  const BlockDecoder decoder(model, ch);
  const std::size_t batches = (cfg.trials + kTrialsPerBatch - 1) / kTrialsPerBatch;
  std::atomic<std::uint64_t> done{0};
  std::mutex progress_mutex;

  const Tally tally = detail::run_batches<Tally>(batches, cfg.threads, [&](std::size_t b,
                                                                          Tally& t) {
    const std::uint64_t first = b * kTrialsPerBatch;
    const std::uint64_t last = std::min<std::uint64_t>(cfg.trials, first + kTrialsPerBatch);
    for (std::uint64_t trial = first; trial < last; ++trial) {
      RandomStream stream(cfg.seed, trial);
      const auto x = block_encode(model, sample_source(model, cfg.n, stream));
      const auto reads = replicate_transmit(ch, x, cfg.c, stream);
      bool all = true;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto est = decoder.decode(x[i].symbol, reads.histogram(i));
        const bool ok = est.k == x[i].length;
        all = all && ok;
        t.record(x[i].length, ok);
      }
      if (all) ++t.successes;
    }
    const auto completed = done.fetch_add(last - first) + (last - first);
    if (cfg.progress) {
      std::lock_guard lock(progress_mutex);
      cfg.progress(completed, cfg.trials);
    }
  });

  SimulationOutcome out;
  out.success_count = tally.successes;
  out.trials = cfg.trials;
  out.rate = static_cast<double>(out.success_count) / static_cast<double>(out.trials);
  out.std_error = binomial_stderr(out.rate, static_cast<double>(out.trials));
  for (std::size_t k = 1; k <= tally.blocks.size(); ++k) {
    if (tally.blocks[k - 1] == 0) continue;
    out.per_k.push_back({k, tally.blocks[k - 1], tally.block_successes[k - 1]});
  }
  return out;
}

std::string outcome_json(const SimulationConfig& cfg, const SimulationOutcome& outcome) {
  nlohmann::json j;
  nlohmann::json config;
  if (cfg.model != nullptr) {
    config["alphabet"] = cfg.model->alphabet();
    config["probs"] =
        std::vector<double>(cfg.model->probs().begin(), cfg.model->probs().end());
  }
  if (cfg.channel != nullptr) {
    config["channel"] = to_string(cfg.channel->kind());
    config["param"] = cfg.channel->param();
    config["k_max"] = cfg.channel->k_max();
    config["tail_tol"] = cfg.channel->tail_tol();
  }
  config["n"] = cfg.n;
  config["c"] = cfg.c;
  config["trials"] = cfg.trials;
  j["config"] = config;
  j["seed"] = cfg.seed;
  j["success_count"] = outcome.success_count;
  j["trials"] = outcome.trials;
  j["rate"] = outcome.rate;
  j["stderr"] = outcome.std_error;
  auto rows = nlohmann::json::array();
  for (const auto& r : outcome.per_k) {
    const double rate = static_cast<double>(r.successes) / static_cast<double>(r.blocks);
    rows.push_back({{"k", r.k},
                    {"blocks", r.blocks},
                    {"successes", r.successes},
                    {"rate", rate},
                    {"stderr", binomial_stderr(rate, static_cast<double>(r.blocks))}});
  }
  j["per_k"] = rows;
  detail::round_floats(j);
  return j.dump(2);
}

void write_outcome_csv(std::ostream& out, const SimulationOutcome& outcome) {
  out << "k,blocks,successes,rate,stderr\n";
  for (const auto& r : outcome.per_k) {
    const double rate = static_cast<double>(r.successes) / static_cast<double>(r.blocks);
    out << r.k << ',' << r.blocks << ',' << r.successes << ',' << format_number(rate) << ','
        << format_number(binomial_stderr(rate, static_cast<double>(r.blocks))) << '\n';
  }
}

}  // namespace sticky
