#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// Seeded random source with explicit value derivations, so streams are
/// reproducible across standard libraries (std::normal_distribution is
/// implementation-defined; Box-Muller on raw 53-bit uniforms is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [lo, hi] by rejection-free scaling (bias < 2^-53).
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }

  Tensor3d gaussian_tensor(Eigen::Index n1, Eigen::Index n2, Eigen::Index n3, double stddev = 1.0) {
    Tensor3d t(n1, n2, n3);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = stddev * normal();
    return t;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform() * static_cast<double>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tubalsr
