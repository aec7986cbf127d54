#pragma once

#include <array>
#include <cstdint>

namespace entrobound {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key);

/// Counter-based stream of uniforms for one Monte Carlo chunk.
///
/// The key is the user seed; the counter holds (block, stream, chunk). Two
/// streams with the same (seed, stream, chunk) produce the same numbers no
/// matter which thread runs them.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t chunk);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform();
  /// Standard normal by inversion.
  double normal();
  /// Exponential with the given rate by inversion.
  double exponential(double rate);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Stream ids used by the estimators, so independent parts never overlap.
namespace streams {
inline constexpr std::uint32_t main = 0;
inline constexpr std::uint32_t curve = 1;
inline constexpr std::uint32_t outer = 2;
}  // namespace streams

}  // namespace entrobound
