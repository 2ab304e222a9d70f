#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flexclf/model.hpp"

namespace flexclf {

/// Seeded generator whose output sequence does not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Rejection-samples `count` states uniformly from {x : x'Px <= radius}
/// using the ellipsoid's bounding box. Throws InvalidParameter.
std::vector<Vector> sample_sublevel_set(const Matrix& P, double radius,
                                        int count, Rng& rng);

}  // namespace flexclf
