#pragma once

#include <cstdint>
#include <random>

namespace promissing {

using Rng = std::mt19937_64;

// Every randomized operation draws from its own stream so that adding a
// draw in one stage never shifts another stage's numbers.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kRebalance,
  kXor,
  kMultimodal,
  kCorrupt,
  kInit,
  kShuffle,
  kDropout,
  kTrajectory,
  kRepetition,
};

// Seeds an mt19937_64 from (seed, stream) through std::seed_seq.
Rng make_rng(std::uint64_t seed, Stream stream);
Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t substream);

// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed of repetition `rep` under `master`: mix_seed(master ^ mix_seed(rep + 1)).
// Depends only on (master, rep), so any subset of repetitions can be rerun.
std::uint64_t repetition_seed(std::uint64_t master, std::uint64_t rep);

// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace promissing
