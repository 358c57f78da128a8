#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace msmc::probkit {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is a pure function of (seed, stream_id, draw index): two streams
/// with the same pair produce the same sequence, and substreams derived with
/// `split` never share counters with their parent. Streams are cheap values;
/// give every replicate, step and particle its own instead of sharing one
/// across threads.
class SeededStream {
 public:
  using result_type = std::uint64_t;

  SeededStream() = default;
  SeededStream(std::uint64_t seed, std::uint64_t stream_id) : seed_{seed}, stream_id_{stream_id} {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream keyed by `child`. Distinct children of one parent, and
  /// children of distinct parents, get distinct stream ids with overwhelming
  /// probability (64-bit mixing).
  [[nodiscard]] SeededStream split(std::uint64_t child) const {
    return SeededStream{seed_, mix(stream_id_ ^ mix(child + 0x9E3779B97F4A7C15ULL))};
  }
  [[nodiscard]] SeededStream split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }
  [[nodiscard]] SeededStream split(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return split(a).split(b).split(c);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) {
      block_ = philox(counter_++);
      buffered_ = 2;
    }
    const int word = 2 - buffered_;
    --buffered_;
    const auto lo = block_[2 * word];
    const auto hi = block_[2 * word + 1];
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; stateless apart from the counter.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Exponential(1).
  double exponential() { return -std::log(uniform()); }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  [[nodiscard]] std::array<std::uint32_t, 4> philox(std::uint64_t counter) const {
    constexpr std::uint32_t kM0 = 0xD2511F53U;
    constexpr std::uint32_t kM1 = 0xCD9E8D57U;
    constexpr std::uint32_t kW0 = 0x9E3779B9U;
    constexpr std::uint32_t kW1 = 0xBB67AE85U;
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                                   static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int buffered_ = 0;
};

}  // namespace msmc::probkit
