#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sticky/decoder.hpp"
#include "sticky/error.hpp"
#include "sticky/montecarlo.hpp"
#include "support/oracles.hpp"

using namespace sticky;

namespace {

SimulationConfig config(const SourceModel& m, const ChannelMatrix& ch, std::size_t n,
                        std::size_t c, std::uint64_t trials, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.model = &m;
  cfg.channel = &ch;
  cfg.n = n;
  cfg.c = c;
  cfg.trials = trials;
  cfg.seed = seed;
  return cfg;
}

double exact_rate(const SourceModel& m, const ChannelMatrix& ch, std::size_t n, std::size_t c) {
  std::vector<std::vector<SuccessEstimate>> tables;
  for (const char s : m.alphabet()) tables.push_back(block_success_table(m, ch, s, c));
  const std::vector<double> probs(m.probs().begin(), m.probs().end());
  return oracle::exact_reconstruction(probs, n, [&](std::size_t s, std::size_t k) {
    return k <= ch.k_max() ? tables[s][k - 1].value : 0.0;
  });
}

}  // namespace

TEST_CASE("source sampling") {
  const auto m = SourceModel::uniform("01");
  RandomStream a(3);
  const auto x = sample_source(m, 1'000'000, a);
  const auto ones = std::count(x.begin(), x.end(), '1');
  CHECK(std::abs(ones / 1e6 - 0.5) < 3 * std::sqrt(0.25 / 1e6));

  RandomStream b(3);
  RandomStream c(3);
  CHECK(sample_source(m, 500, b) == sample_source(m, 500, c));
  CHECK_THROWS_AS(sample_source(m, 0, b), DomainError);

  const SourceModel skew("AB", {0.999, 0.001});
  RandomStream d(9);
  const auto blocks = block_encode(skew, sample_source(skew, 2'000'000, d));
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i + 1 < blocks.size(); ++i) {
    if (blocks[i].symbol != 'A') continue;
    total += static_cast<double>(blocks[i].length);
    ++count;
  }
  // Geometric lengths with mean 1000 have standard deviation about 1000.
  const double mean = total / count;
  CHECK(std::abs(mean - 1000.0) < 3 * 1000.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("transmission keeps block structure") {
  const auto id = identity_channel(16);
  const BlockSequence x({{'A', 3}, {'T', 1}, {'A', 16}});
  RandomStream stream(1);
  CHECK(transmit(id, x, stream) == x);

  const auto ch = build_exponential(0.4, 16);
  for (int t = 0; t < 1000; ++t) {
    const auto y = transmit(ch, x, stream);
    REQUIRE(y.size() == x.size());
    REQUIRE(y.symbols() == x.symbols());
  }
  CHECK_THROWS_AS(transmit(ch, BlockSequence({{'A', 17}}), stream), RangeError);
  CHECK_THROWS_AS(replicate_transmit(ch, x, 0, stream), DomainError);
}

TEST_CASE("transmitted lengths follow the kernel row") {
  const auto ch = build_exponential(0.5, 8);
  const BlockSequence x({{'A', 2}});
  RandomStream stream(12);
  const std::size_t trials = 1'000'000;
  std::vector<std::size_t> hist(ch.l_max(), 0);
  for (std::size_t t = 0; t < trials; ++t) ++hist[transmit(ch, x, stream)[0].length - 1];
  const auto row = ch.row(2);
  const auto chi = oracle::chi_square(hist, std::vector<double>(row.begin(), row.end()), trials);
  CHECK(chi.statistic < oracle::chi_square_critical(chi.dof, oracle::kZ001));
}

TEST_CASE("replicated transmission") {
  const auto ch = build_exponential(0.5, 8);
  const BlockSequence x({{'A', 2}, {'C', 1}});
  RandomStream a(5);
  RandomStream b(5);
  const auto one = replicate_transmit(ch, x, 1, a);
  CHECK(one.replica_count() == 1);
  CHECK(one.replicas()[0] == transmit(ch, x, b));

  RandomStream stream(6);
  const std::size_t c = 100;
  const std::size_t rounds = 200;
  std::vector<double> first;
  std::vector<double> second;
  std::vector<std::size_t> hist(ch.l_max(), 0);
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto bundle = replicate_transmit(ch, x, c, stream);
    CHECK(bundle.replica_count() == c);
    std::size_t total = 0;
    for (const auto& [l, n] : bundle.histogram(0)) {
      hist[l - 1] += n;
      total += n;
    }
    CHECK(total == c);
    for (std::size_t j = 0; j + 1 < c; ++j) {
      first.push_back(static_cast<double>(bundle.replicas()[j][0].length));
      second.push_back(static_cast<double>(bundle.replicas()[j + 1][0].length));
    }
  }
  const double draws = static_cast<double>(c * rounds);
  for (std::size_t l = 1; l <= 6; ++l) {
    const double p = ch.at(2, l);
    CHECK(std::abs(hist[l - 1] / draws - p) < 3 * std::sqrt(p * (1 - p) / draws));
  }
  // Lag-1 correlation between neighbouring replicas.
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / v.size();
  };
  const double ma = mean(first);
  const double mb = mean(second);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    cov += (first[i] - ma) * (second[i] - mb);
    va += (first[i] - ma) * (first[i] - ma);
    vb += (second[i] - mb) * (second[i] - mb);
  }
  const double rho = cov / std::sqrt(va * vb);
  CHECK(std::abs(rho) < 3.0 / std::sqrt(static_cast<double>(first.size())));
}

TEST_CASE("identity channel always reconstructs") {
  const auto m = SourceModel::uniform("ACGT");
  const auto id = identity_channel(64);
  const auto out = estimate_reconstruction_rate(config(m, id, 40, 2, 2'000, 1));
  CHECK(out.success_count == 2'000);
  CHECK(out.rate == 1.0);
  CHECK(out.std_error == 0.0);
}

TEST_CASE("simulation is deterministic across thread counts") {
  const auto m = SourceModel::uniform("01");
  const auto ch = build_exponential(0.3, 64);
  auto cfg = config(m, ch, 30, 2, 20'000, 77);
  cfg.threads = 1;
  const auto a = estimate_reconstruction_rate(cfg);
  cfg.threads = 4;
  const auto b = estimate_reconstruction_rate(cfg);
  CHECK(a.success_count == b.success_count);
  REQUIRE(a.per_k.size() == b.per_k.size());
  for (std::size_t i = 0; i < a.per_k.size(); ++i) {
    CHECK(a.per_k[i].blocks == b.per_k[i].blocks);
    CHECK(a.per_k[i].successes == b.per_k[i].successes);
  }
  CHECK(outcome_json(cfg, a) == outcome_json(cfg, b));
  cfg.seed = 78;
  CHECK(estimate_reconstruction_rate(cfg).success_count != a.success_count);
}

TEST_CASE("simulation agrees with the exact finite-length probability") {
  const auto m = SourceModel::uniform("01");
  struct Case {
    ChannelMatrix ch;
    std::size_t n;
    std::size_t c;
  };
  const std::vector<Case> cases{{build_exponential(0.5, 64), 20, 2},
                                {build_exponential(0.2, 64), 20, 1},
                                {build_exponential(0.2, 64), 50, 3},
                                {build_independent_indel(0.06, 64), 50, 1},
                                {build_independent_indel(0.1, 64), 100, 3}};
  for (const auto& c : cases) {
    const double p = exact_rate(m, c.ch, c.n, c.c);
    const std::uint64_t trials = 40'000;
    const auto out = estimate_reconstruction_rate(config(m, c.ch, c.n, c.c, trials, 2024));
    const double se = std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(out.rate - p) <= 3 * se);
    CHECK(out.std_error == doctest::Approx(std::sqrt(out.rate * (1 - out.rate) / trials)));
  }
}

TEST_CASE("per-length success tallies match block success probabilities") {
  const auto m = SourceModel::uniform("01");
  const auto ch = build_exponential(0.3, 64);
  for (std::size_t c = 1; c <= 3; ++c) {
    const auto out = estimate_reconstruction_rate(config(m, ch, 60, c, 20'000, 300 + c));
    const auto table = block_success_table(m, ch, '0', c);
    for (const auto& row : out.per_k) {
      if (row.k > 5) continue;
      const double p = table[row.k - 1].value;
      const double se = std::sqrt(p * (1 - p) / static_cast<double>(row.blocks));
      CHECK(std::abs(static_cast<double>(row.successes) / row.blocks - p) <= 3 * se + 1e-12);
    }
  }
}

TEST_CASE("simulation input checks and export") {
  const auto m = SourceModel::uniform("01");
  const auto ch = build_exponential(0.5, 8);
  CHECK_THROWS_AS(estimate_reconstruction_rate(config(m, ch, 0, 1, 10, 1)), DomainError);
  CHECK_THROWS_AS(estimate_reconstruction_rate(config(m, ch, 10, 0, 10, 1)), DomainError);
  CHECK_THROWS_AS(estimate_reconstruction_rate(config(m, ch, 10, 1, 0, 1)), DomainError);
  CHECK_THROWS_AS(estimate_reconstruction_rate(config(m, ch, 10, 1, kMaxTrials + 1, 1)), DomainError);
  SimulationConfig empty;
  CHECK_THROWS_AS(estimate_reconstruction_rate(empty), InvalidInput);
  // Blocks longer than k_max abort the run.
  const SourceModel sticky_src("AB", {0.99, 0.01});
  CHECK_THROWS_AS(estimate_reconstruction_rate(config(sticky_src, ch, 500, 1, 10, 1)), RangeError);

  std::uint64_t last = 0;
  const auto wide = build_exponential(0.5, 64);
  auto cfg = config(m, wide, 10, 1, 10'000, 3);
  cfg.progress = [&](std::uint64_t done, std::uint64_t total) {
    CHECK(total == 10'000);
    CHECK(done > last);
    last = done;
  };
  const auto out = estimate_reconstruction_rate(cfg);
  CHECK(last == 10'000);

  const auto json = outcome_json(cfg, out);
  CHECK(json.find("\"seed\": 3") != std::string::npos);
  CHECK(json.find("\"per_k\"") != std::string::npos);
  CHECK(json.find("\"stderr\"") != std::string::npos);
  std::ostringstream csv;
  write_outcome_csv(csv, out);
  CHECK(csv.str().rfind("k,blocks,successes,rate,stderr\n1,", 0) == 0);
}
