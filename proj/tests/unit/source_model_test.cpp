#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "sticky/random.hpp"
#include "sticky/error.hpp"
#include "sticky/infotheory.hpp"
#include "sticky/montecarlo.hpp"
#include "sticky/source_model.hpp"
#include "support/oracles.hpp"

using namespace sticky;

TEST_CASE("source model validation") {
  CHECK_NOTHROW(SourceModel("AT", {0.3, 0.7}));
  CHECK_THROWS_AS(SourceModel("A", {1.0}), InvalidInput);
  CHECK_THROWS_AS(SourceModel("AA", {0.5, 0.5}), InvalidInput);
  CHECK_THROWS_AS(SourceModel("AT", {0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(SourceModel("AT", {0.5, 0.6}), InvalidInput);
  CHECK_THROWS_AS(SourceModel("ACG", {0.5, 0.5}), InvalidInput);

  const auto m = SourceModel::parse("ACGT", "0.1,0.2,0.3,0.4");
  CHECK(m.prob('G') == doctest::Approx(0.3));
  CHECK(SourceModel::parse("ACGT", "uniform").prob('A') == doctest::Approx(0.25));
  CHECK(SourceModel::parse("01", "").prob('1') == doctest::Approx(0.5));
  CHECK_THROWS_AS(SourceModel::parse("AT", "0.5,x"), InvalidInput);
  CHECK_THROWS_AS(m.index_of('X'), InvalidInput);
}

TEST_CASE("block encoding") {
  const auto dna = SourceModel::uniform("ACGT");
  const auto b = block_encode(dna, "AATATTAA");
  const std::vector<Block> want{{'A', 2}, {'T', 1}, {'A', 1}, {'T', 2}, {'A', 2}};
  CHECK(b == BlockSequence(want));
  CHECK(block_encode(dna, "G") == BlockSequence({{'G', 1}}));
  CHECK(block_encode(dna, "AAAA") == BlockSequence({{'A', 4}}));
  CHECK(block_decode(BlockSequence({{'A', 4}, {'T', 2}, {'A', 3}})) == "AAAATTAAA");
  CHECK(block_decode(BlockSequence({{'C', 1}})) == "C");
  CHECK(b.total_length() == 8);
  CHECK(b.symbols() == "ATATA");

  CHECK_THROWS_AS(block_encode(dna, ""), InvalidInput);
  try {
    block_encode(dna, "ACXG");
    FAIL("expected an error");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("position 2") != std::string::npos);
  }
  CHECK_THROWS_AS(BlockSequence({{'A', 1}, {'A', 2}}), InvalidInput);
  CHECK_THROWS_AS(BlockSequence({{'A', 0}}), InvalidInput);
}

TEST_CASE("round trip on random sequences") {
  const auto dna = SourceModel::uniform("ACGT");
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::string x(n, 'A');
    for (auto& c : x) c = "ACGT"[rng() % 4];
    const auto b = block_encode(dna, x);
    REQUIRE(block_decode(b) == x);
    REQUIRE(block_encode(dna, block_decode(b)) == b);
    for (std::size_t i = 1; i < b.size(); ++i) REQUIRE(b[i].symbol != b[i - 1].symbol);
  }
}

TEST_CASE("block length pmf") {
  CHECK(block_length_pmf(0.5, 1) == doctest::Approx(0.5));
  CHECK(block_length_pmf(0.5, 3) == doctest::Approx(0.125));
  CHECK_THROWS_AS(block_length_pmf(0.5, 0), DomainError);
  const auto m = SourceModel::uniform("01");
  CHECK(block_length_pmf(m, '1', 2) == doctest::Approx(0.25));

  long double partial = 0.0L;
  long double previous = 0.0L;
  for (std::size_t k = 1; k <= 64; ++k) {
    partial += block_length_pmf(0.5, k);
    CHECK(partial > previous);
    CHECK(partial <= 1.0L);
    previous = partial;
  }
  CHECK(static_cast<double>(1.0L - partial) == doctest::Approx(std::ldexp(1.0, -64)).epsilon(1e-6));
}

TEST_CASE("expected block counts") {
  const auto bin = expected_block_counts(SourceModel::uniform("01"), 100);
  CHECK(bin.per_symbol_block_count[0] == doctest::Approx(25.0));
  CHECK(bin.total_block_count == doctest::Approx(50.0));
  CHECK(bin.mean_block_length[1] == doctest::Approx(2.0));
  const auto quad = expected_block_counts(SourceModel::uniform("ACGT"), 100);
  CHECK(quad.total_block_count == doctest::Approx(75.0));

  const SourceModel skew("ACG", {0.2, 0.3, 0.5});
  const auto st = expected_block_counts(skew, 1000);
  double sum = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double p = skew.probs()[s];
    CHECK(st.per_symbol_block_count[s] == doctest::Approx(1000 * p * (1 - p)).epsilon(1e-12));
    sum += st.per_symbol_block_count[s];
  }
  CHECK(std::abs(st.total_block_count - sum) < 1e-12 * sum);
}

TEST_CASE("empirical block count matches expectation") {
  const auto m = SourceModel::uniform("01");
  const std::size_t n = 1'000'000;
  RandomStream stream(11);
  const auto b = block_encode(m, sample_source(m, n, stream));
  // Block count is 1 + number of symbol changes: variance (n-1)/4 for the binary uniform source.
  const double expected = expected_block_counts(m, n).total_block_count;
  const double sigma = std::sqrt(static_cast<double>(n - 1) * 0.25);
  CHECK(std::abs(static_cast<double>(b.size()) - expected) < 3.0 * sigma + 1.0);
}

TEST_CASE("sampled block lengths follow the geometric law") {
  const SourceModel m("AB", {0.7, 0.3});
  RandomStream stream(5);
  std::vector<std::size_t> hist(64, 0);
  std::size_t blocks = 0;
  while (blocks < 1'000'000) {
    const auto b = block_encode(m, sample_source(m, 100'000, stream));
    // Skip the first and last block: their lengths are censored by the window.
    for (std::size_t i = 1; i + 1 < b.size() && blocks < 1'000'000; ++i) {
      if (b[i].symbol != 'A') continue;
      ++hist[std::min<std::size_t>(b[i].length, 64) - 1];
      ++blocks;
    }
  }
  std::vector<double> probs(64);
  for (std::size_t k = 1; k <= 64; ++k) probs[k - 1] = block_length_pmf(0.7, k);
  const auto chi = oracle::chi_square(hist, probs, blocks);
  CHECK(chi.statistic < oracle::chi_square_critical(chi.dof, oracle::kZ001));
}

TEST_CASE("source entropy decomposition") {
  const auto bin = source_entropy_rate(SourceModel::uniform("01"));
  CHECK(bin.h_x == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bin.length[0] == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
  CHECK(source_entropy_rate(SourceModel::uniform("ACGT")).h_x ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t a = 2 + rng() % 5;
    std::vector<double> p(a);
    double total = 0.0;
    for (auto& v : p) total += (v = 0.05 + std::uniform_real_distribution<>(0, 1)(rng));
    for (auto& v : p) v /= total;
    double fix = 1.0;
    for (std::size_t i = 1; i < a; ++i) fix -= p[i];
    p[0] = fix;
    const SourceModel m(std::string("ACGTXYZ").substr(0, a), p);
    const auto e = source_entropy_rate(m);
    double identity = 0.0;
    for (std::size_t s = 0; s < a; ++s) {
      CHECK(e.order[s] >= 0.0);
      CHECK(e.length[s] == doctest::Approx(binary_entropy(p[s]) / (1 - p[s])).epsilon(1e-13));
      identity += p[s] * (1 - p[s]) * (e.order[s] + e.length[s]);
    }
    CHECK(std::abs(identity - e.h_x) < 1e-12);
  }
}
