#pragma once

// Seedable, platform-independent random numbers. The engine is
// std::mt19937_64 (bit-exact output mandated by the standard); the
// double mapping below avoids std::uniform_real_distribution, whose
// output is implementation-defined.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace gradflow {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = uniform(lo[i], hi[i]);
    return x;
  }

  // Uniform in [lo,hi)^n.
  Eigen::VectorXd uniform_box(int n, double lo, double hi) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = uniform(lo, hi);
    return x;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gradflow
