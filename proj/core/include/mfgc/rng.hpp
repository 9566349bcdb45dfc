#pragma once

#include "mfgc/types.hpp"

#include <cmath>
#include <cstdint>

namespace mfgc {

// Counter-free splitmix64 generator. Every consumer derives its own stream
// from the single experiment seed, so results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent child stream; mixing the id through splitmix keeps streams
  // decorrelated even for consecutive ids.
  Rng stream(std::uint64_t id) const {
    Rng base(state_ + 0x9e3779b97f4a7c15ULL * (id + 1));
    base.next_u64();
    return base;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in (0,1); never returns 0, so logs are safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform();
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
  }

  Vec normal_vec(int d, double scale = 1.0) {
    Vec out(d);
    for (int i = 0; i < d; ++i) out(i) = scale * normal();
    return out;
  }

  PlayerVector normal_matrix(int rows, int cols, double scale = 1.0) {
    PlayerVector out(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out(i, j) = scale * normal();
    return out;
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mfgc
