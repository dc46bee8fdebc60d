#pragma once

#include <cmath>
#include <cstdint>

namespace testroll {

// Counter-based stream RNG (Philox4x32-10). A stream is fully determined by
// (seed, stream_index): draws depend only on the stream's own counter, never
// on other streams or on which thread runs it, so replicate-scoped substreams
// are reproducible under any parallel schedule. Distinct stream indices select
// disjoint counter blocks of the same keyed permutation.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index)
      : stream_(stream_index) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
  }

  std::uint64_t next_u64() {
    if (pos_ >= 4) refill();
    std::uint64_t lo = out_[pos_], hi = out_[pos_ + 1];
    pos_ += 2;
    return lo | (hi << 32);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two 64-bit words.
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;          // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in {0, ..., k-1}.
  std::uint64_t uniform_below(std::uint64_t k) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * k) >> 64);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  void refill() {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(counter_),
                          static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(stream_),
                          static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ULL * c[0];
      std::uint64_t p1 = 0xCD9E8D57ULL * c[2];
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c[0] = hi1 ^ c[1] ^ k0;
      c[1] = lo1;
      c[2] = hi0 ^ c[3] ^ k1;
      c[3] = lo0;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c[0];
    out_[1] = c[1];
    out_[2] = c[2];
    out_[3] = c[3];
    ++counter_;
    pos_ = 0;
  }

  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint32_t key_[2];
  std::uint64_t out_[4] = {0, 0, 0, 0};
  int pos_ = 4;
};

}  // namespace testroll
