#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace photocount {

/// Philox4x32-10 counter-based generator.
///
/// Stream-splitting rule: the 64-bit seed is the Philox key; the 128-bit
/// counter is (block index, substream index), each 64 bits. Trajectory k of a
/// batch uses substream k, so every trajectory owns an independent,
/// reproducible sequence regardless of scheduling. Substreams with the top bit
/// set are reserved for detector thinning.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint64_t kThinningStreamBit = std::uint64_t{1} << 63;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  /// Raw bijection: ten Philox rounds of counter under key.
  static Block encrypt(Block counter, Key key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double uniform();

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 2;  // number of 64-bit words consumed from buffer_
};

}  // namespace photocount
