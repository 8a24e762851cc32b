#include "liouville/rng.hpp"

#include <cmath>

namespace liouville {

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_(master_seed), index_(stream_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                    0x6c696f75u};
  eng_.seed(seq);
}

double RngStream::uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

double RngStream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::uint64_t derive_stream(std::uint64_t tag, std::uint64_t index) {
  // splitmix64 finalizer on the packed pair
  std::uint64_t z = (tag << 48) ^ index;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace liouville
