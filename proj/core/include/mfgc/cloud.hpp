#pragma once

#include "mfgc/rng.hpp"
#include "mfgc/types.hpp"

namespace mfgc {

// Empirical measure on R^d given as a uniform-weight particle list.
struct StateCloud {
  Eigen::MatrixXd x;  // n x d

  StateCloud() = default;
  explicit StateCloud(Eigen::MatrixXd positions) : x(std::move(positions)) {}

  int size() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  Vec particle(int j) const { return x.row(j).transpose(); }
  Vec mean() const { return x.colwise().mean().transpose(); }
};

// Empirical measure on R^d x R^d: joint particle list of (state, action).
struct StateActionCloud {
  Eigen::MatrixXd x;  // n x d
  Eigen::MatrixXd a;  // n x d

  StateActionCloud() = default;
  StateActionCloud(Eigen::MatrixXd positions, Eigen::MatrixXd actions)
      : x(std::move(positions)), a(std::move(actions)) {}
  StateActionCloud(int n, int d) : x(n, d), a(n, d) {}

  int size() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
  Vec mean_x() const { return x.colwise().mean().transpose(); }
  Vec mean_a() const { return a.colwise().mean().transpose(); }
  StateCloud states() const { return StateCloud(x); }
};

// M_1 (mean particle norm) or M_2 (mean squared norm). State-action clouds
// use the joint (x,a) norm.
double moment(const StateCloud& cloud, int order);
double moment(const StateActionCloud& cloud, int order);

void check_cloud(const StateCloud& cloud);
void check_cloud(const StateActionCloud& cloud);

// Drops particle i; used for the leave-one-out coupling measures.
StateActionCloud cloud_without(const PlayerVector& x, const PlayerVector& a, int skip);
// Same, writing into a preallocated cloud of size N-1 (hot path).
void cloud_without_into(const PlayerVector& x, const PlayerVector& a, int skip,
                        StateActionCloud& out);
StateCloud state_cloud_without(const PlayerVector& x, int skip);

StateCloud gaussian_state_cloud(Rng& rng, int n, int d, double scale);
StateActionCloud gaussian_cloud(Rng& rng, int n, int d, double scale);

}  // namespace mfgc
