#pragma once

// Counter-based random streams. Every Monte Carlo trial owns an independent
// Philox4x32-10 stream keyed by the run seed and addressed by
// (trial_index, stream_tag), so results do not depend on how trials are
// distributed across threads. Philox4x32-10 (Salmon et al., SC'11) passes
// the TestU01 BigCrush battery.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace fmhom {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;

/// Philox4x32 with 10 rounds applied to one counter block.
inline PhiloxBlock philox4x32(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
    detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive child seeds from (seed, tag).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

/// Random stream for one trial. Satisfies UniformRandomBitGenerator.
class TrialRng {
 public:
  using result_type = std::uint64_t;

  TrialRng(std::uint64_t seed, std::uint64_t trial_index, std::uint32_t stream_tag = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, stream_tag, static_cast<std::uint32_t>(trial_index),
                 static_cast<std::uint32_t>(trial_index >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (cursor_ == 2) refill();
    const std::uint64_t out = (static_cast<std::uint64_t>(block_[2 * cursor_]) << 32) |
                              block_[2 * cursor_ + 1];
    ++cursor_;
    return out;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill() {
    block_ = philox4x32(counter_, key_);
    ++counter_[0];
    cursor_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  PhiloxBlock counter_;
  PhiloxBlock block_{};
  int cursor_ = 2;
};

/// Poisson variate by CDF inversion; means above 30 are split into equal
/// parts (a sum of independent Poissons is Poisson) to keep exp(-mean)
/// representable.
inline std::uint64_t sample_poisson(TrialRng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  const auto parts = static_cast<std::uint64_t>(std::ceil(mean / 30.0));
  const double part_mean = mean / static_cast<double>(parts);
  const double p0 = std::exp(-part_mean);
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < parts; ++i) {
    const double u = rng.uniform();
    double p = p0;
    double cdf = p0;
    std::uint64_t k = 0;
    while (u >= cdf && k < 1000) {
      ++k;
      p *= part_mean / static_cast<double>(k);
      cdf += p;
    }
    total += k;
  }
  return total;
}

/// Standard normal variate (Box-Muller, one output per call).
inline double sample_normal(TrialRng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace fmhom
