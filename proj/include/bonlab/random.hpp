#ifndef BONLAB_RANDOM_HPP_
#define BONLAB_RANDOM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace bonlab {

// Bit-reproducible random stream (splitmix64). Variates are derived here
// rather than through std:: distributions, whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t uniform_index(std::size_t lo, std::size_t hi_inclusive) {
    const std::uint64_t span = hi_inclusive - lo + 1;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::size_t>(x % span);
  }

  double exponential() { return -std::log(uniform_open_low()); }

  // Box-Muller, one variate per call.
  double normal() {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// FNV-1a accumulator used for seed derivation.
class SeedHasher {
 public:
  SeedHasher& add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    }
    return *this;
  }
  SeedHasher& add(std::string_view s) {
    add(static_cast<std::uint64_t>(s.size()));
    for (char c : s) mix_byte(static_cast<unsigned char>(c));
    return *this;
  }
  std::uint64_t value() const {
    std::uint64_t z = h_;
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    return z ^ (z >> 33);
  }

 private:
  void mix_byte(unsigned char b) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

// Inverse-CDF sampler over a fixed finite distribution.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs)
      : cumulative_(probs.size()) {
    if (probs.empty()) {
      throw std::invalid_argument("CategoricalSampler: empty distribution");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      cumulative_[k] = acc;
    }
    total_ = acc;
    if (!(total_ > 0.0)) {
      throw std::invalid_argument("CategoricalSampler: zero total mass");
    }
    // last index with positive mass absorbs rounding at the top end
    last_positive_ = probs.size() - 1;
    while (last_positive_ > 0 && probs[last_positive_] <= 0.0) --last_positive_;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto k = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(k, last_positive_);
  }

  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
  std::size_t last_positive_ = 0;
};

}  // namespace bonlab

#endif  // BONLAB_RANDOM_HPP_
