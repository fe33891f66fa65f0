#include "promissing/rng.hpp"

namespace promissing {

Rng make_rng(std::uint64_t seed, Stream stream) { return make_rng(seed, stream, 0); }

Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t substream) {
  const auto tag = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(substream),
                    static_cast<std::uint32_t>(substream >> 32)};
  return Rng(seq);
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t repetition_seed(std::uint64_t master, std::uint64_t rep) {
  return mix_seed(master ^ mix_seed(rep + 1));
}

}  // namespace promissing
