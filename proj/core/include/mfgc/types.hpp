#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <initializer_list>

namespace mfgc {

// State/control dimension is small (d <= 3 across the bundled model
// families), so per-player vectors and matrices live on the stack.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

// Joint profile over players: row i holds player i's d-vector.
// Houses positions, costates, actions and perturbation directions alike.
using PlayerVector = Eigen::MatrixXd;

// N^{1 - #distinct(indices)}: the predicted magnitude of a mixed player
// derivative. Two distinct indices give 1/N, three give 1/N^2, ...
inline double omega_weight(int n_players, std::initializer_list<int> indices) {
  std::array<int, 4> seen{};
  int distinct = 0;
  for (int idx : indices) {
    bool fresh = true;
    for (int s = 0; s < distinct; ++s) {
      if (seen[static_cast<std::size_t>(s)] == idx) fresh = false;
    }
    if (fresh) seen[static_cast<std::size_t>(distinct++)] = idx;
  }
  return std::pow(static_cast<double>(n_players), 1 - distinct);
}

struct OmegaWeight {
  std::array<int, 4> indices{-1, -1, -1, -1};
  int arity = 0;
  double value = 0.0;
};

inline OmegaWeight make_omega(int n_players, std::initializer_list<int> idx) {
  OmegaWeight w;
  for (int i : idx) w.indices[static_cast<std::size_t>(w.arity++)] = i;
  w.value = omega_weight(n_players, idx);
  return w;
}

}  // namespace mfgc
