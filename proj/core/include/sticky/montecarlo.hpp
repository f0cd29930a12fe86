#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sticky/channel.hpp"
#include "sticky/decoder.hpp"
#include "sticky/random.hpp"
#include "sticky/source_model.hpp"

namespace sticky {

inline constexpr std::uint64_t kMaxTrials = 100'000'000;

/// n i.i.d. symbols drawn from the model.
std::string sample_source(const SourceModel& model, std::size_t n, RandomStream& stream);

/// Pushes every block through the channel; symbols and block count are kept.
/// Throws RangeError if a block is longer than k_max.
BlockSequence transmit(const ChannelMatrix& ch, const BlockSequence& x, RandomStream& stream);

/// c independent transmissions of the same input.
ReadBundle replicate_transmit(const ChannelMatrix& ch, const BlockSequence& x, std::size_t c,
                              RandomStream& stream);

struct SimulationConfig {
  const SourceModel* model = nullptr;
  const ChannelMatrix* channel = nullptr;
  std::size_t n = 1;
  std::size_t c = 1;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// Called with (completed, total) trials; may run on a worker thread but
  /// never concurrently with itself.
  std::function<void(std::uint64_t, std::uint64_t)> progress;
};

struct BlockTally {
  std::size_t k = 0;
  std::uint64_t blocks = 0;
  std::uint64_t successes = 0;
};

struct SimulationOutcome {
  std::uint64_t success_count = 0;
  std::uint64_t trials = 0;
  double rate = 0.0;
  double std_error = 0.0;
  /// Rows for every true length k that occurred, ascending.
  std::vector<BlockTally> per_k;
};

/// One trial: sample X, block-encode, replicate-transmit c times, decode;
/// success iff every block length is recovered. Trial t uses substream
/// (seed, t), so the outcome is independent of the thread count.
SimulationOutcome estimate_reconstruction_rate(const SimulationConfig& cfg);

std::string outcome_json(const SimulationConfig& cfg, const SimulationOutcome& outcome);
/// CSV "k,blocks,successes,rate,stderr".
void write_outcome_csv(std::ostream& out, const SimulationOutcome& outcome);

}  // namespace sticky
