#pragma once

#include "mfgc/fixed_point.hpp"
#include "mfgc/grid.hpp"
#include "mfgc/lq.hpp"
#include "mfgc/model.hpp"

#include <cstdint>
#include <vector>

namespace mfgc {

struct NashSolveOptions {
  int workers = 0;
  int max_stored_slices = 129;  // time-slice storage stride target
  double fixed_point_tol = 1e-11;
};

// Backward explicit solve of the coupled value system on the tensor grid,
// d = 1, N <= 4. Per node and slice the joint best-response profile is
// re-solved (Newton, warm-started from the previous slice); the update is
// evaluated only on tail-sorted nodes and mirrored to their permutations,
// so player exchangeability holds bit-exactly.
ValueField solve_nash_grid(const Model& model, int n_players, const Grid& grid,
                           const NashSolveOptions& opts = {});

// Quadratic-ansatz coefficients P(t), q(t), r(t) of the representative
// player's value for the plain lq family: the substitution closes into a
// matrix Riccati ODE, integrated backward with RK4. Exchangeability of
// players 2..N is preserved along the flow; the terminal coefficients
// reproduce the terminal cost exactly.
struct RiccatiSolution {
  int players = 0;
  int dim = 1;
  double horizon = 0.0;
  double dt = 1e-4;
  LqSpec spec;
  double sigma0 = 0.0;
  std::vector<Eigen::MatrixXd> P;  // index k at time k*dt
  std::vector<Eigen::VectorXd> q;
  std::vector<double> r;

  void coeffs_at(double t, Eigen::MatrixXd& Pt, Eigen::VectorXd& qt, double& rt) const;
  // u^{N,1}(t, x); x rows are players.
  double value(double t, const PlayerVector& x) const;
  // D_j u^{N,1}(t, x)
  Vec gradient_block(double t, const PlayerVector& x, int j) const;
  // D_{jk} u^{N,1}(t)
  Mat hessian_block(double t, int j, int k) const;
  // d/dt u^{N,1}(t, x), from the ODE right-hand side.
  double time_derivative(double t, const PlayerVector& x) const;
};

RiccatiSolution solve_nash_riccati(const Model& model, int n_players, double dt = 1e-4);

// Scaled-norm rows for the value-derivative decay tables: grid finite
// differences of D_j u^{N,i} and D_{kj} u^{N,i} (via the symmetry
// reduction) at probed interior nodes, with the omega weight per row.
struct ValueDecayProbe {
  int i = 0, j = 0;
  int k = -1;  // -1: first derivative only
};

std::vector<DecayRow> derivative_decay_report(const ValueField& field,
                                              const std::vector<ValueDecayProbe>& probes);

// Closed-loop equilibrium trajectories by Euler-Maruyama: idiosyncratic
// noise sqrt(2) dW^i plus common sqrt(2 sigma0) dW^0, drift re-solved from
// the interpolated diagonal gradient field. Paths that leave the grid get
// clamped gradient lookups; the count is reported, not an error.
struct TrajectoryBatch {
  double t0 = 0.0;
  PlayerVector x0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> paths;  // path p: (n_steps+1) x (N*d)
  long clamped_lookups = 0;
};

TrajectoryBatch simulate_closed_loop(const Model& model, const ValueField& field,
                                     double t0, const PlayerVector& x0, int n_paths,
                                     int n_steps, std::uint64_t seed, int workers = 0);

// Time-integrated average of sum_{j != i} |D_j u^{N,i}|^2 along the batch
// (the closed-loop L^2 norm estimator), maximized over i.
double offdiagonal_gradient_norm(const ValueField& field, const TrajectoryBatch& batch);

}  // namespace mfgc
