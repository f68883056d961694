#pragma once
// Counter-based random streams. A (master seed, trial index) pair maps to an
// independent deterministic stream, so Monte Carlo output is identical for
// any worker count or scheduling order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ifmimo {

struct TrialSeed {
  std::uint64_t master = 0;
  std::uint64_t index = 0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

class TrialRng {
 public:
  explicit TrialRng(TrialSeed seed) {
    // Two mixing rounds keep nearby (master, index) pairs decorrelated.
    key_ = detail::mix64(seed.master + 0x9e3779b97f4a7c15ULL);
    key_ = detail::mix64(key_ ^ detail::mix64(seed.index + 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(key_ ^ counter_);
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the paired sample is cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace ifmimo
