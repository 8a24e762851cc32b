#ifndef LIOUVILLE_RNG_HPP_
#define LIOUVILLE_RNG_HPP_

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace liouville {

// Independent substream keyed by (master_seed, stream_index). The engine is
// seeded through std::seed_seq so nearby indices give unrelated states.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform();
  double normal() { return normal_(eng_); }
  double exponential(double rate);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_index() const { return index_; }

 private:
  std::uint64_t master_, index_;
  std::mt19937_64 eng_;
  boost::random::normal_distribution<double> normal_;
};

// Stream indices are derived, never drawn: tag names the purpose, index the sample.
std::uint64_t derive_stream(std::uint64_t tag, std::uint64_t index);

namespace stream_tag {
inline constexpr std::uint64_t kField = 1;
inline constexpr std::uint64_t kPath = 2;
inline constexpr std::uint64_t kLateral = 3;
inline constexpr std::uint64_t kBootstrap = 4;
inline constexpr std::uint64_t kOracle = 5;
inline constexpr std::uint64_t kSuite = 6;
}  // namespace stream_tag

}  // namespace liouville

#endif  // LIOUVILLE_RNG_HPP_
