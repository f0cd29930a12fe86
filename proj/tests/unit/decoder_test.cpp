#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sticky/decoder.hpp"
#include "sticky/error.hpp"
#include "sticky/montecarlo.hpp"
#include "support/oracles.hpp"

using namespace sticky;

namespace {

std::function<double(std::size_t, std::size_t)> kernel(const ChannelMatrix& ch) {
  return [&ch](std::size_t k, std::size_t l) { return ch.at(k, l); };
}

std::vector<std::size_t> expand(const LengthHistogram& h) {
  std::vector<std::size_t> out;
  for (const auto& [l, n] : h) out.insert(out.end(), n, l);
  return out;
}

}  // namespace

TEST_CASE("single-read MAP examples") {
  const auto m = SourceModel::uniform("AT");
  const auto id = identity_channel(16);
  for (std::size_t l = 1; l <= 16; ++l) CHECK(map_block_single(m, id, 'A', l).k == l);

  const auto half = build_exponential(0.5, 64);
  const auto est = map_block_single(m, half, 'A', 2);
  CHECK(est.k == 1);
  CHECK(est.log_objective == doctest::Approx(std::log(0.25)).epsilon(1e-11));
  const BlockDecoder dec(m, half);
  const LengthHistogram two{{2, 1}};
  CHECK(dec.objective(0, 2, two) == doctest::Approx(std::log(0.2)).epsilon(1e-11));

  CHECK(map_block_single(m, build_exponential(0.1, 64), 'T', 3).k == 3);
}

TEST_CASE("single-read collapse for q = 0.5") {
  // Every observed length decodes to k = 1 when p_s = q = 0.5.
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.5, 64);
  for (std::size_t l = 1; l <= ch.l_max(); ++l) {
    const auto brute = oracle::brute_force_map(0.5, 64, {l}, kernel(ch));
    CHECK(brute.k == 1);
    CHECK(map_block_single(m, ch, 'A', l).k == 1);
  }
}

TEST_CASE("multi-read MAP examples") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.5, 64);
  CHECK(map_block_multi(m, ch, 'A', LengthHistogram{{1, 1}, {2, 1}}).k == 1);
  const auto five = map_block_multi(m, ch, 'A', LengthHistogram{{2, 5}});
  CHECK(five.k == 2);
  CHECK(five.log_objective == doctest::Approx(std::log(0.5) + 5 * std::log(0.4)).epsilon(1e-11));
  CHECK(5 * std::log(0.25) < five.log_objective);

  const auto id = identity_channel(16);
  CHECK(map_block_multi(m, id, 'T', LengthHistogram{{7, 4}}).k == 7);
  for (std::size_t l = 1; l <= 40; ++l) {
    const auto a = map_block_single(m, ch, 'A', l);
    const auto b = map_block_multi(m, ch, 'A', LengthHistogram{{l, 1}});
    CHECK(a.k == b.k);
    CHECK(a.log_objective == b.log_objective);
    CHECK(a.tie == b.tie);
  }
}

TEST_CASE("MAP agrees with a linear-domain brute force") {
  const SourceModel m("AT", {0.35, 0.65});
  std::mt19937_64 rng(17);
  for (const auto& ch : {build_exponential(0.3, 24), build_independent_indel(0.1, 24)}) {
    const BlockDecoder dec(m, ch);
    for (const char s : {'A', 'T'}) {
      const double p = m.prob(s);
      for (std::size_t l = 1; l <= 20; ++l) {
        const auto brute = oracle::brute_force_map(p, 24, {l}, kernel(ch));
        const auto est = dec.decode(s, l);
        CHECK(est.k == brute.k);
      }
    }
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t c = 1 + rng() % 6;
      const std::size_t centre = 1 + rng() % 15;
      std::vector<std::size_t> lengths;
      for (std::size_t r = 0; r < c; ++r) lengths.push_back(centre + rng() % 3);
      const auto hist = make_histogram(lengths);
      const auto brute = oracle::brute_force_map(0.35, 24, expand(hist), kernel(ch));
      if (brute.k == 0) continue;
      CHECK(dec.decode('A', hist).k == brute.k);
    }
  }
}

TEST_CASE("ties resolve to the smallest k") {
  const std::vector<double> obj{-1.0, -0.5, -0.5, -3.0};
  const auto est = BlockDecoder::select(obj);
  CHECK(est.k == 2);
  CHECK(est.tie);
  CHECK_FALSE(BlockDecoder::select(std::vector<double>{-2.0, -1.0}).tie);
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(BlockDecoder::select(std::vector<double>{ninf, ninf}).k == 0);

  // ln q_11 = ln 0.5 = ln p + ln q_21: a genuine tie between k = 1 and 2.
  const auto ch = build_custom({{0.5, 0.5}, {1.0, 0.0}});
  const SourceModel m("AT", {0.5, 0.5});
  const auto r = map_block_single(m, ch, 'A', 1);
  CHECK(r.k == 1);
  CHECK(r.tie);
  CHECK_FALSE(map_block_single(m, ch, 'A', 2).tie);
}

TEST_CASE("impossible observations are reported") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_independent_indel(0.06, 4);
  try {
    map_block_single(m, ch, 'A', 9);
    FAIL("expected ImpossibleObservation");
  } catch (const ImpossibleObservation& e) {
    CHECK(std::string(e.what()).find('9') != std::string::npos);
  }
  CHECK_THROWS_AS(map_block_multi(m, ch, 'A', LengthHistogram{{2, 1}, {12, 1}}),
                  ImpossibleObservation);
}

TEST_CASE("dominance condition") {
  const auto m = SourceModel::uniform("AT");
  CHECK(check_dominance_condition(m, identity_channel(32), 32).pass);

  const auto half = check_dominance_condition(m, build_exponential(0.5, 64), 32);
  REQUIRE_FALSE(half.pass);
  REQUIRE(half.violation);
  CHECK(half.violation->l == 2);
  CHECK(half.violation->i == 1);

  const auto tenth = check_dominance_condition(m, build_exponential(0.1, 64), 32);
  CHECK(tenth.pass);
  CHECK(tenth.checked_up_to == 32);
  const auto ch = build_exponential(0.1, 64);
  for (std::size_t l = 1; l <= 32; ++l) CHECK(map_block_single(m, ch, 'A', l).k == l);

  CHECK(check_dominance_condition(m, build_exponential(0.1, 8), 32).checked_up_to == 8);
}

TEST_CASE("histogram counts") {
  CHECK(histogram_count(3, 1) == 3.0);
  CHECK(histogram_count(3, 2) == 6.0);
  CHECK(histogram_count(52, 3) == doctest::Approx(24804.0));
  const double big = histogram_count(100000, 100000);
  CHECK((std::isinf(big) || big > 1e300));
}

TEST_CASE("block success probabilities against enumeration of ordered tuples") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.5, 12);
  for (std::size_t c = 1; c <= 3; ++c) {
    const auto table = block_success_table(m, ch, 'A', c);
    for (std::size_t k = 1; k <= 6; ++k) {
      const double want = oracle::brute_force_success(0.5, 12, ch.l_max(), k, c, kernel(ch));
      const auto got = block_success_prob(m, ch, 'A', k, c);
      CHECK(got.exact);
      CHECK(got.value == doctest::Approx(want).epsilon(1e-10));
      CHECK(table[k - 1].value == doctest::Approx(want).epsilon(1e-10));
    }
  }

  const auto full = build_exponential(0.5, 64);
  CHECK(block_success_prob(m, full, 'A', 1, 1).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(block_success_prob(m, full, 'A', 2, 1).value == 0.0);
  CHECK(per_block_success(m, full, 'A', 1).value == doctest::Approx(0.5).epsilon(1e-12));

  const auto indel = build_independent_indel(0.2, 10);
  for (std::size_t k = 1; k <= 4; ++k) {
    const double want = oracle::brute_force_success(0.5, 10, indel.l_max(), k, 2, kernel(indel));
    CHECK(block_success_prob(m, indel, 'T', k, 2).value == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("block success bookkeeping") {
  const auto m = SourceModel::uniform("AT");
  const auto id = identity_channel(16);
  for (std::size_t c = 1; c <= 4; ++c) {
    for (std::size_t k = 1; k <= 16; ++k) CHECK(block_success_prob(m, id, 'A', k, c).value == 1.0);
  }
  const auto ch = build_exponential(0.5, 64);
  SuccessOptions no_mc;
  no_mc.enumeration_budget = 10;
  no_mc.allow_monte_carlo = false;
  CHECK_THROWS_AS(block_success_prob(m, ch, 'A', 3, 3, no_mc), ResourceError);
  CHECK_THROWS_AS(block_success_prob(m, ch, 'A', 65, 1), DomainError);
}

TEST_CASE("per-block success grows with the replica count") {
  // Individual m_kc values are not monotone in c (m_1 drops from 1 to 0.75
  // at c = 2), but the prior-weighted success is.
  const auto m = SourceModel::uniform("AT");
  const auto full = build_exponential(0.5, 64);
  CHECK(block_success_prob(m, full, 'A', 1, 2).value == doctest::Approx(0.75).epsilon(1e-12));
  for (const auto& ch : {build_exponential(0.5, 16), build_exponential(0.2, 16),
                         build_independent_indel(0.06, 16), build_independent_indel(0.1, 16)}) {
    double previous = 0.0;
    for (std::size_t c = 1; c <= 4; ++c) {
      const auto table = block_success_table(m, ch, 'A', c);
      double alpha = 0.0;
      for (std::size_t k = 1; k <= 16; ++k) {
        CHECK(table[k - 1].exact);
        CHECK(table[k - 1].value >= 0.0);
        CHECK(table[k - 1].value <= 1.0 + 1e-12);
        alpha += block_length_pmf(0.5, k) * table[k - 1].value;
      }
      CHECK(alpha <= 1.0 + 1e-12);
      CHECK(alpha >= previous - 1e-12);
      previous = alpha;
    }
  }
}

TEST_CASE("Monte Carlo block success agrees with enumeration") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.5, 64);
  SuccessOptions mc;
  mc.force_monte_carlo = true;
  mc.monte_carlo_draws = 200'000;
  for (std::size_t k = 1; k <= 4; ++k) {
    for (std::size_t c = 2; c <= 3; ++c) {
      const auto exact = block_success_prob(m, ch, 'A', k, c);
      const auto est = block_success_prob(m, ch, 'A', k, c, mc);
      CHECK_FALSE(est.exact);
      const double se = std::sqrt(exact.value * (1 - exact.value) / mc.monte_carlo_draws);
      CHECK(std::abs(est.value - exact.value) <= 3 * se + 1e-12);
    }
  }
  const auto a = block_success_prob(m, ch, 'A', 3, 2, mc);
  mc.threads = 1;
  const auto b = block_success_prob(m, ch, 'A', 3, 2, mc);
  CHECK(a.value == b.value);
}

TEST_CASE("accurate reconstruction probability") {
  const auto m = SourceModel::uniform("AT");
  CHECK(accurate_reconstruction_prob(m, identity_channel(64), 100, 3).log_prob == 0.0);
  const auto ch = build_exponential(0.5, 64);
  const auto one = accurate_reconstruction_prob(m, ch, 50, 1);
  CHECK(one.log_prob == doctest::Approx(50 * 0.5 * std::log(0.5)).epsilon(1e-12));
  double previous = 0.0;
  for (std::size_t n : {10, 20, 40, 80}) {
    const auto r = accurate_reconstruction_prob(m, ch, n, 2);
    CHECK(r.log_prob <= 0.0);
    CHECK(r.log_prob < previous);
    CHECK(accurate_reconstruction_prob(m, ch, 2 * n, 2).log_prob ==
          doctest::Approx(2 * r.log_prob).epsilon(1e-13));
    previous = r.log_prob;
  }
}

TEST_CASE("read bundle parsing") {
  std::istringstream in("# two replicas\nA:4 T:2 A:3\n\nA:2 T:3 A:1\n");
  const auto bundle = parse_read_bundle(in);
  CHECK(bundle.replica_count() == 2);
  CHECK(bundle.block_count() == 3);
  CHECK(bundle.symbols() == "ATA");
  CHECK(bundle.histogram(0)[0] == LengthCount{2, 1});
  CHECK(bundle.histogram(0)[1] == LengthCount{4, 1});
  std::size_t total = 0;
  for (const auto& [l, n] : bundle.histogram(2)) total += n;
  CHECK(total == 2);

  std::ostringstream out;
  write_read_bundle(out, bundle);
  std::istringstream again(out.str());
  const auto copy = parse_read_bundle(again);
  CHECK(copy.histogram(1)[0] == bundle.histogram(1)[0]);

  const auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream s(text);
    try {
      parse_read_bundle(s);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("A:1 T:1\nA:x T:1\n") == 2);
  CHECK(line_of("A:1 T:1\n#\nA:1 T:1 A:2\n") == 3);
  CHECK(line_of("A:1 T:1\nA:1 C:1\n") == 2);
  CHECK(line_of("A:0\n") == 1);
  CHECK(line_of("A:1 A:2\n") == 1);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_read_bundle(empty), ParseError);
}

TEST_CASE("sequence decoding") {
  const auto m = SourceModel::uniform("AT");
  const auto id = identity_channel(16);
  const BlockSequence x({{'A', 4}, {'T', 2}, {'A', 3}});
  const ReadBundle copies({x, x, x});
  const auto r = decode_sequence(m, id, copies);
  CHECK(r.estimated_lengths == std::vector<std::size_t>{4, 2, 3});
  CHECK(r.blocks() == x);

  const auto ch = build_exponential(0.5, 64);
  const BlockSequence two({{'A', 2}});
  const ReadBundle five({two, two, two, two, two});
  CHECK(decode_sequence(m, ch, five).estimated_lengths[0] == 2);
  const ReadBundle single({two});
  const auto s = decode_sequence(m, ch, single);
  CHECK(s.estimated_lengths[0] == 1);
  CHECK(s.log_posterior[0] == doctest::Approx(std::log(0.25)).epsilon(1e-11));

  std::ostringstream csv;
  write_decode_csv(csv, s);
  CHECK(csv.str() == "block,symbol,k_hat,log_posterior,tie\n1,A,1,-1.38629,0\n");

  const auto indel = build_independent_indel(0.06, 4);
  const ReadBundle bad({BlockSequence({{'A', 1}, {'T', 20}})});
  try {
    decode_sequence(m, indel, bad);
    FAIL("expected ImpossibleObservation");
  } catch (const ImpossibleObservation& e) {
    CHECK(std::string(e.what()).find("block 2") != std::string::npos);
  }
}

TEST_CASE("decoding ignores replica order") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.3, 32);
  RandomStream stream(8);
  const BlockSequence x({{'A', 5}, {'T', 1}, {'A', 3}, {'T', 7}});
  std::vector<BlockSequence> reads;
  for (int r = 0; r < 6; ++r) reads.push_back(transmit(ch, x, stream));
  const auto base = decode_sequence(m, ch, ReadBundle(reads));
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(reads.begin(), reads.end(), rng);
    const auto again = decode_sequence(m, ch, ReadBundle(reads));
    CHECK(again.estimated_lengths == base.estimated_lengths);
    CHECK(again.log_posterior == base.log_posterior);
  }
}

TEST_CASE("end-to-end single read at q = 0.1") {
  const auto m = SourceModel::uniform("AT");
  const auto ch = build_exponential(0.1, 64);
  const auto x = block_encode(m, "AAAATTAAA");
  RandomStream stream(31337);
  std::size_t hits = 0;
  const std::size_t trials = 20'000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto y = transmit(ch, x, stream);
    const auto r = decode_sequence(m, ch, ReadBundle({y}));
    bool all = true;
    for (std::size_t i = 0; i < x.size(); ++i) all = all && r.estimated_lengths[i] == x[i].length;
    hits += all;
  }
  // Dominance holds at q = 0.1, so success means every block was read exactly.
  const double p = ch.at(4, 4) * ch.at(2, 2) * ch.at(3, 3);
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(static_cast<double>(hits) / trials - p) < 3 * se);
}
