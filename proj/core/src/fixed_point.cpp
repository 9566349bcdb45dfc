#include "mfgc/fixed_point.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace mfgc {

namespace {

struct Workspace {
  explicit Workspace(int n, int d) : loo(n - 1, d) {}
  StateActionCloud loo;  // leave-one-out cloud buffer
};

// Residual map F_i = a^i + D_p H(x^i, p^i, m^{N,-i}_{x,a}); per-player max
// norm is the reported residual.
double residual_into(const Model& model, const PlayerVector& x, const PlayerVector& p,
                     const PlayerVector& a, Workspace& ws, PlayerVector& f) {
  const int n = static_cast<int>(x.rows());
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    cloud_without_into(x, a, i, ws.loo);
    Vec dp = model.d_p_hamiltonian(x.row(i).transpose(), p.row(i).transpose(), ws.loo);
    f.row(i) = a.row(i) + dp.transpose();
    worst = std::max(worst, f.row(i).norm());
  }
  return worst;
}

// Newton step on F(a) = 0. The Jacobian block (i,j) is
// 1_{i=j} I + D^a_mu D_p H(x^i,p^i,m^{N,-i},x^j,a^j)/(N-1), the
// diagonal-inverse-normalized monotone matrix, positive definite whenever
// the discrete monotonicity margin holds.
void newton_step(const Model& model, const PlayerVector& x, const PlayerVector& p,
                 PlayerVector& a, Workspace& ws, const PlayerVector& f) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(n * d, n * d);
  for (int i = 0; i < n; ++i) {
    cloud_without_into(x, a, i, ws.loo);
    Vec xi = x.row(i).transpose();
    Vec pi = p.row(i).transpose();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      Mat blockij = model.dmu_a_d_p_hamiltonian(xi, pi, ws.loo, x.row(j).transpose(),
                                                a.row(j).transpose());
      jac.block(i * d, j * d, d, d) = blockij / (n - 1);
    }
  }
  Eigen::VectorXd rhs(n * d);
  for (int i = 0; i < n; ++i) rhs.segment(i * d, d) = f.row(i).transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  Eigen::VectorXd step = lu.solve(rhs);
  for (int i = 0; i < n; ++i) a.row(i) -= step.segment(i * d, d).transpose();
}

}  // namespace

FixedPointResult solve_action_profile(const Model& model, const PlayerVector& x,
                                      const PlayerVector& p,
                                      const FixedPointOptions& opts) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 2) throw Error("solve_action_profile: need at least two players");
  if (opts.tol <= 0) throw Error("solve_action_profile: tol must be positive");

  Workspace ws(n, d);
  PlayerVector a(n, d);
  if (opts.warm_start != nullptr) {
    a = *opts.warm_start;
  } else {
    // Start from the best response against costates-as-actions.
    for (int i = 0; i < n; ++i) {
      cloud_without_into(x, p, i, ws.loo);
      Vec dp = model.d_p_hamiltonian(x.row(i).transpose(), p.row(i).transpose(), ws.loo);
      a.row(i) = -dp.transpose();
    }
  }

  PlayerVector f(n, d);
  double res = residual_into(model, x, p, a, ws, f);
  SolveMethod mode =
      opts.method == SolveMethod::kAuto ? SolveMethod::kPicard : opts.method;
  SolveMethod finished = mode;
  double window_start_res = res;
  int iters = 0;

  while (res > opts.tol) {
    if (iters >= opts.max_iter)
      throw NoConvergence("solve_action_profile: iteration budget exhausted", res);
    ++iters;
    if (mode == SolveMethod::kPicard) {
      // a <- (1-theta) a + theta (-D_p H(...)) = a - theta F(a)
      a -= opts.damping * f;
      res = residual_into(model, x, p, a, ws, f);
      finished = SolveMethod::kPicard;
      if (opts.method == SolveMethod::kAuto && iters % 20 == 0) {
        if (res > 0.1 * window_start_res) mode = SolveMethod::kNewton;  // stalled
        window_start_res = res;
      }
    } else {
      newton_step(model, x, p, a, ws, f);
      res = residual_into(model, x, p, a, ws, f);
      finished = SolveMethod::kNewton;
    }
  }

  FixedPointResult out;
  out.actions = std::move(a);
  out.residual = res;
  out.iterations = iters;
  out.method = finished;
  return out;
}

StateActionCloud solve_consistent_cloud(const Model& model, const StateActionCloud& nu,
                                        double tol) {
  check_cloud(nu);
  const int n = nu.size();
  const int d = nu.dim();
  StateActionCloud mu(n, d);
  mu.x = nu.x;
  // Start from the best response against the input cloud itself.
  for (int j = 0; j < n; ++j)
    mu.a.row(j) =
        -model.d_p_hamiltonian(nu.x.row(j).transpose(), nu.a.row(j).transpose(), nu)
             .transpose();

  Eigen::MatrixXd f(n, d);
  auto eval_residual = [&]() {
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      Vec dp =
          model.d_p_hamiltonian(nu.x.row(j).transpose(), nu.a.row(j).transpose(), mu);
      f.row(j) = mu.a.row(j) + dp.transpose();
      worst = std::max(worst, f.row(j).norm());
    }
    return worst;
  };

  double res = eval_residual();
  int iters = 0;
  double window_start = res;
  bool newton = false;
  while (res > tol) {
    if (iters >= 10000)
      throw NoConvergence("solve_consistent_cloud: iteration budget exhausted", res);
    ++iters;
    if (!newton) {
      mu.a -= 0.5 * f;
      res = eval_residual();
      if (iters % 20 == 0) {
        if (res > 0.1 * window_start) newton = true;
        window_start = res;
      }
    } else {
      // Full-cloud Newton: jacobian blocks 1_{jk} I + D^a_mu D_p H / n.
      Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(n * d, n * d);
      for (int j = 0; j < n; ++j) {
        Vec xj = nu.x.row(j).transpose();
        Vec pj = nu.a.row(j).transpose();
        for (int k = 0; k < n; ++k) {
          Mat blockjk = model.dmu_a_d_p_hamiltonian(xj, pj, mu, nu.x.row(k).transpose(),
                                                    mu.a.row(k).transpose());
          jac.block(j * d, k * d, d, d) += blockjk / n;
        }
      }
      Eigen::VectorXd rhs(n * d);
      for (int j = 0; j < n; ++j) rhs.segment(j * d, d) = f.row(j).transpose();
      Eigen::VectorXd step = Eigen::PartialPivLU<Eigen::MatrixXd>(jac).solve(rhs);
      for (int j = 0; j < n; ++j) mu.a.row(j) -= step.segment(j * d, d).transpose();
      res = eval_residual();
    }
  }
  return mu;
}

double BlockMatrix::min_symmetric_eigenvalue() const {
  Eigen::MatrixXd sym = 0.5 * (data_ + data_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

BlockMatrix assemble_blocks(const Model& model, const PlayerVector& x,
                            const PlayerVector& a, BlockFlavor flavor) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 2) throw Error("assemble_blocks: need at least two players");
  BlockMatrix out(n, d, flavor);
  Workspace ws(n, d);
  const bool tilde = flavor == BlockFlavor::kDiagTilde ||
                     flavor == BlockFlavor::kOffdiagTilde ||
                     flavor == BlockFlavor::kFullTilde;
  const bool want_diag = flavor == BlockFlavor::kDiag || flavor == BlockFlavor::kFull ||
                         flavor == BlockFlavor::kDiagTilde ||
                         flavor == BlockFlavor::kFullTilde;
  const bool want_off = flavor == BlockFlavor::kOffdiag || flavor == BlockFlavor::kFull ||
                        flavor == BlockFlavor::kOffdiagTilde ||
                        flavor == BlockFlavor::kFullTilde;
  for (int i = 0; i < n; ++i) {
    cloud_without_into(x, a, i, ws.loo);
    Vec xi = x.row(i).transpose();
    Vec ai = a.row(i).transpose();
    if (want_diag)
      out.block(i, i) = tilde ? model.d_xa_lagrangian(xi, ai, ws.loo)
                              : model.d_aa_lagrangian(xi, ai, ws.loo);
    if (want_off) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        Vec xj = x.row(j).transpose();
        Vec aj = a.row(j).transpose();
        Mat blockij = tilde ? model.dmu_x_d_a_lagrangian(xi, ai, ws.loo, xj, aj)
                            : model.dmu_a_d_a_lagrangian(xi, ai, ws.loo, xj, aj);
        out.block(i, j) = blockij / (n - 1);
      }
    }
  }
  return out;
}

namespace {

Eigen::PartialPivLU<Eigen::MatrixXd> factor_monotone(const BlockMatrix& m) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.dense());
  // Partial-pivot LU of a singular matrix leaves a (near-)zero pivot; check
  // via the reciprocal condition estimate on the residual of a probe solve.
  double pivot_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  double scale = m.dense().norm();
  if (!(pivot_min > 1e-13 * std::max(1.0, scale))) {
    throw SingularM("action-profile block system is singular",
                    m.min_symmetric_eigenvalue());
  }
  return lu;
}

}  // namespace

BlockMatrix action_jacobian_p(const Model& model, const PlayerVector& x,
                              const PlayerVector& a) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  BlockMatrix m = assemble_blocks(model, x, a, BlockFlavor::kFull);
  auto lu = factor_monotone(m);
  BlockMatrix out(n, d, BlockFlavor::kFull);
  out.dense() = -lu.solve(Eigen::MatrixXd::Identity(n * d, n * d));
  return out;
}

BlockMatrix action_jacobian_x(const Model& model, const PlayerVector& x,
                              const PlayerVector& a) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  BlockMatrix m = assemble_blocks(model, x, a, BlockFlavor::kFull);
  BlockMatrix mt = assemble_blocks(model, x, a, BlockFlavor::kFullTilde);
  auto lu = factor_monotone(m);
  BlockMatrix out(n, d, BlockFlavor::kFull);
  out.dense() = -lu.solve(mt.dense());
  return out;
}

namespace {

// D_p a blocks at costate p shifted in coordinate (k, c).
Eigen::MatrixXd jacobian_at_shift(const Model& model, const PlayerVector& x,
                                  PlayerVector p, int k, int c, double h, double tol) {
  p(k, c) += h;
  FixedPointOptions opts;
  opts.tol = tol;
  FixedPointResult fp = solve_action_profile(model, x, p, opts);
  return action_jacobian_p(model, x, fp.actions).dense();
}

}  // namespace

std::vector<DecayRow> higher_derivatives(const Model& model, const PlayerVector& x,
                                         const PlayerVector& p,
                                         const std::vector<DerivativeProbe>& probes,
                                         double h, double tol, int workers) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  std::vector<DecayRow> rows(probes.size());
  parallel_for(probes.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const DerivativeProbe& probe = probes[idx];
      DecayRow row;
      row.n_players = n;
      row.i = probe.i + 1;
      row.j = probe.j + 1;
      row.k = probe.k + 1;
      double norm = 0.0;
      if (probe.l < 0) {
        // D_{p^k p^j} a^i: central difference of the Jacobian in each p^k
        // coordinate; take the Frobenius norm over the (c, block) tensor.
        row.omega = omega_weight(n, {probe.i, probe.j, probe.k});
        for (int c = 0; c < d; ++c) {
          Eigen::MatrixXd plus = jacobian_at_shift(model, x, p, probe.k, c, h, tol);
          Eigen::MatrixXd minus = jacobian_at_shift(model, x, p, probe.k, c, -h, tol);
          Eigen::MatrixXd diff =
              (plus - minus).block(probe.i * d, probe.j * d, d, d) / (2 * h);
          norm += diff.squaredNorm();
        }
      } else {
        row.l = probe.l + 1;
        row.omega = omega_weight(n, {probe.i, probe.j, probe.k, probe.l});
        for (int cl = 0; cl < d; ++cl) {
          for (int ck = 0; ck < d; ++ck) {
            PlayerVector pp = p;
            pp(probe.l, cl) += h;
            Eigen::MatrixXd dpp = jacobian_at_shift(model, x, pp, probe.k, ck, h, tol) -
                                  jacobian_at_shift(model, x, pp, probe.k, ck, -h, tol);
            PlayerVector pm = p;
            pm(probe.l, cl) -= h;
            Eigen::MatrixXd dpm = jacobian_at_shift(model, x, pm, probe.k, ck, h, tol) -
                                  jacobian_at_shift(model, x, pm, probe.k, ck, -h, tol);
            Eigen::MatrixXd diff =
                (dpp - dpm).block(probe.i * d, probe.j * d, d, d) / (4 * h * h);
            norm += diff.squaredNorm();
          }
        }
      }
      row.norm = std::sqrt(norm);
      rows[idx] = row;
    }
  });
  return rows;
}

double hat_hamiltonian(const Model& model, const PlayerVector& x, const PlayerVector& p,
                       int i, double tol) {
  FixedPointOptions opts;
  opts.tol = tol;
  FixedPointResult fp = solve_action_profile(model, x, p, opts);
  StateActionCloud loo = cloud_without(x, fp.actions, i);
  return model.hamiltonian(x.row(i).transpose(), p.row(i).transpose(), loo);
}

Vec hat_hamiltonian_coupling(const Model& model, const PlayerVector& x,
                             const PlayerVector& p, int i, int k, double tol) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  FixedPointOptions opts;
  opts.tol = tol;
  FixedPointResult fp = solve_action_profile(model, x, p, opts);
  BlockMatrix jac = action_jacobian_p(model, x, fp.actions);
  StateActionCloud loo = cloud_without(x, fp.actions, i);
  Vec xi = x.row(i).transpose();
  Vec pi = p.row(i).transpose();
  Vec acc = Vec::Zero(d);
  for (int l = 0; l < n; ++l) {
    if (l == i) continue;
    Vec dmu = model.dmu_a_hamiltonian(xi, pi, loo, x.row(l).transpose(),
                                      fp.actions.row(l).transpose());
    acc += (dmu.transpose() * jac.block(l, k)).transpose();
  }
  return acc / (n - 1);
}

}  // namespace mfgc
