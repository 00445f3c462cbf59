#ifndef DSMCSG_RNG_HPP_
#define DSMCSG_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace dsmcsg {

using RandomEngine = std::mt19937_64;

/// Named substreams. Each consumer draws from its own engine so the draw
/// sequence of one stream never depends on how much another stream consumed
/// (in particular, never on the gPC degree M).
enum class Stream : std::uint64_t {
  Sampling = 1,
  Sround = 2,
  Pairing = 3,
  Angles = 4,
  Rejection = 5,
};

inline std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Sampling: return "sampling";
    case Stream::Sround: return "sround";
    case Stream::Pairing: return "pairing";
    case Stream::Angles: return "angles";
    case Stream::Rejection: return "rejection";
  }
  return "unknown";
}

/// Spawns independent, explicitly seeded engines per (seed, stream, index).
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RandomEngine spawn(Stream stream, std::uint64_t index = 0) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_),
                      static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return RandomEngine(seq);
  }

 private:
  std::uint64_t seed_;
};

/// Uniform draw in the open interval (0, 1) from the top 53 bits.
inline double uniform_open01(RandomEngine &engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dsmcsg

#endif  // DSMCSG_RNG_HPP_
