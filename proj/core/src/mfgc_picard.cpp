#include "mfgc/master.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/fixed_point.hpp"
#include "mfgc/wasserstein.hpp"

#include <algorithm>
#include <cmath>

namespace mfgc {

namespace {

// Equal-weight particles at the quantiles of the piecewise-linear CDF built
// from the nodal density (exact inversion of the discrete representation).
StateCloud density_quadrature(const Grid& grid, const Eigen::VectorXd& m, int n_q) {
  const int n = grid.points;
  const double h = grid.h();
  std::vector<double> cdf(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i < n; ++i)
    cdf[static_cast<std::size_t>(i)] =
        cdf[static_cast<std::size_t>(i - 1)] + 0.5 * h * (m[i - 1] + m[i]);
  double total = cdf[static_cast<std::size_t>(n - 1)];
  if (total <= 0) throw Error("density quadrature: zero total mass");

  Eigen::MatrixXd atoms(n_q, 1);
  int cell = 0;
  for (int j = 0; j < n_q; ++j) {
    double target = total * (j + 0.5) / n_q;
    while (cell < n - 2 && cdf[static_cast<std::size_t>(cell + 1)] < target) ++cell;
    double lo = cdf[static_cast<std::size_t>(cell)];
    double hi = cdf[static_cast<std::size_t>(cell + 1)];
    double frac = hi > lo ? (target - lo) / (hi - lo) : 0.5;
    atoms(j, 0) = grid.coord(cell) + frac * h;
  }
  return StateCloud(atoms);
}

double dxx(const Eigen::VectorXd& u, int i, double h) {
  const int n = static_cast<int>(u.size());
  auto val = [&](int k) {
    if (k == -1) return 3.0 * u[0] - 3.0 * u[1] + u[2];
    if (k == n) return 3.0 * u[n - 1] - 3.0 * u[n - 2] + u[n - 3];
    return u[k];
  };
  return (val(i + 1) - 2.0 * u[i] + val(i - 1)) / (h * h);
}

double dx(const Eigen::VectorXd& u, int i, double h) {
  const int n = static_cast<int>(u.size());
  auto val = [&](int k) {
    if (k == -1) return 3.0 * u[0] - 3.0 * u[1] + u[2];
    if (k == n) return 3.0 * u[n - 1] - 3.0 * u[n - 2] + u[n - 3];
    return u[k];
  };
  return (val(i + 1) - val(i - 1)) / (2.0 * h);
}

}  // namespace

MfgcSolution solve_mfgc_picard(const Model& model, const Grid& grid1d,
                               const MfgcOptions& opts) {
  if (model.dim() != 1) throw Error("solve_mfgc_picard: d = 1 only");
  if (model.sigma0() != 0.0)
    throw Error("solve_mfgc_picard: common noise is out of scope here");

  const Grid& grid = grid1d;
  const int n = grid.points;
  const double h = grid.h();
  const int steps = grid.t_steps;
  const double dt = grid.dt;
  const std::size_t n_slices = static_cast<std::size_t>(steps) + 1;

  // Initial density: truncated Gaussian, unit trapezoid mass.
  Eigen::VectorXd m0(n);
  for (int i = 0; i < n; ++i) {
    double z = (grid.coord(i) - opts.m0_mean) / opts.m0_std;
    m0[i] = std::exp(-0.5 * z * z);
  }
  double mass = 0.0;
  for (int i = 1; i < n; ++i) mass += 0.5 * h * (m0[i - 1] + m0[i]);
  m0 /= mass;

  MfgcSolution sol;
  sol.grid = grid;
  sol.value.assign(n_slices, Eigen::VectorXd::Zero(n));
  sol.density.assign(n_slices, m0);
  sol.action_flow.assign(n_slices, StateActionCloud(opts.quad_particles, 1));

  // Starting flow guess: zero-drift density transport with a constant
  // action coordinate.
  {
    Eigen::VectorXd m = m0;
    for (int k = 0; k <= steps; ++k) {
      sol.density[static_cast<std::size_t>(k)] = m;
      StateCloud quad = density_quadrature(grid, m, opts.quad_particles);
      StateActionCloud& mu = sol.action_flow[static_cast<std::size_t>(k)];
      mu.x = quad.x;
      mu.a.setConstant(opts.initial_action);
      if (k == steps) break;
      // heat step in conservative form keeps zero flux at the walls
      Eigen::VectorXd next = m;
      next[0] = m[0] + dt * (m[1] - m[0]) / (h * h);
      next[n - 1] = m[n - 1] + dt * (m[n - 2] - m[n - 1]) / (h * h);
      for (int i = 1; i < n - 1; ++i)
        next[i] = m[i] + dt * (m[i + 1] - 2 * m[i] + m[i - 1]) / (h * h);
      m = next;
    }
  }

  std::vector<StateActionCloud> flow = sol.action_flow;
  std::vector<Eigen::VectorXd> u(n_slices, Eigen::VectorXd::Zero(n));
  std::vector<Eigen::VectorXd> density(n_slices, m0);

  double change = 0.0;
  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    // (i) backward value solve against the current flow
    StateCloud terminal_states(flow[n_slices - 1].x);
    for (int i = 0; i < n; ++i) {
      Vec xi(1);
      xi(0) = grid.coord(i);
      u[n_slices - 1][i] = model.terminal(xi, terminal_states);
    }
    for (int k = steps; k > 0; --k) {
      const Eigen::VectorXd& uk = u[static_cast<std::size_t>(k)];
      Eigen::VectorXd& prev = u[static_cast<std::size_t>(k - 1)];
      const StateActionCloud& mu = flow[static_cast<std::size_t>(k)];
      for (int i = 0; i < n; ++i) {
        Vec xi(1), pi(1);
        xi(0) = grid.coord(i);
        pi(0) = dx(uk, i, h);
        prev[i] = uk[i] + dt * dxx(uk, i, h) - dt * model.hamiltonian(xi, pi, mu);
      }
    }

    // (ii) forward density transport with the fresh feedback drift
    density[0] = m0;
    for (int k = 0; k < steps; ++k) {
      const Eigen::VectorXd& mk = density[static_cast<std::size_t>(k)];
      Eigen::VectorXd& next = density[static_cast<std::size_t>(k + 1)];
      const StateActionCloud& mu = flow[static_cast<std::size_t>(k)];
      const Eigen::VectorXd& uk = u[static_cast<std::size_t>(k)];
      Eigen::VectorXd drift(n);
      for (int i = 0; i < n; ++i) {
        Vec xi(1), pi(1);
        xi(0) = grid.coord(i);
        pi(0) = dx(uk, i, h);
        drift[i] = -model.d_p_hamiltonian(xi, pi, mu)(0);
      }
      double courant = drift.cwiseAbs().maxCoeff() * dt / h;
      if (courant > 0.9)
        throw StabilityViolation("mfgc transport step violates the Courant bound");
      // conservative flux F = b m - m_x with zero flux at the walls
      Eigen::VectorXd flux(n + 1);
      flux[0] = 0.0;
      flux[n] = 0.0;
      for (int i = 1; i < n; ++i) {
        double b_half = 0.5 * (drift[i - 1] + drift[i]);
        double m_half = 0.5 * (mk[i - 1] + mk[i]);
        flux[i] = b_half * m_half - (mk[i] - mk[i - 1]) / h;
      }
      for (int i = 0; i < n; ++i) next[i] = mk[i] - (dt / h) * (flux[i + 1] - flux[i]);
    }

    // (iii) measure update through the consistency map, then (iv) damping
    double step_change = 0.0;
    std::vector<StateActionCloud> updated(n_slices);
    for (std::size_t k = 0; k < n_slices; ++k) {
      StateCloud quad =
          density_quadrature(grid, density[k], opts.quad_particles);
      StateActionCloud push(opts.quad_particles, 1);
      push.x = quad.x;
      const Eigen::VectorXd& uk = u[k];
      for (int j = 0; j < opts.quad_particles; ++j) {
        double xq = push.x(j, 0);
        double rel = (xq + grid.radius) / h;
        int cell = std::clamp(static_cast<int>(rel), 0, n - 2);
        double w = rel - cell;
        push.a(j, 0) = (1.0 - w) * dx(uk, cell, h) + w * dx(uk, cell + 1, h);
      }
      StateActionCloud target = solve_consistent_cloud(model, push, 1e-12);
      // damp the action coordinate along the sorted-position coupling
      StateActionCloud& old = flow[k];
      StateActionCloud blended = target;
      if (outer > 0) {
        std::vector<int> perm_old(static_cast<std::size_t>(opts.quad_particles));
        std::vector<int> perm_new(static_cast<std::size_t>(opts.quad_particles));
        for (int j = 0; j < opts.quad_particles; ++j) {
          perm_old[static_cast<std::size_t>(j)] = j;
          perm_new[static_cast<std::size_t>(j)] = j;
        }
        std::sort(perm_old.begin(), perm_old.end(),
                  [&](int a, int b) { return old.x(a, 0) < old.x(b, 0); });
        std::sort(perm_new.begin(), perm_new.end(),
                  [&](int a, int b) { return target.x(a, 0) < target.x(b, 0); });
        for (int j = 0; j < opts.quad_particles; ++j) {
          int io = perm_old[static_cast<std::size_t>(j)];
          int in = perm_new[static_cast<std::size_t>(j)];
          blended.a(in, 0) = (1.0 - opts.damping) * old.a(io, 0) +
                             opts.damping * target.a(in, 0);
        }
      }
      updated[k] = std::move(blended);
    }
    for (std::size_t k = 0; k < n_slices; k += static_cast<std::size_t>(opts.stop_stride)) {
      step_change = std::max(step_change, wasserstein(flow[k], updated[k], 1));
    }
    step_change = std::max(step_change,
                           wasserstein(flow[n_slices - 1], updated[n_slices - 1], 1));
    flow = std::move(updated);
    change = step_change;
    if (outer > 0 && change < opts.tol) break;
  }
  if (change >= opts.tol)
    throw PicardStalled("solve_mfgc_picard: no fixed point within the outer budget");

  sol.value = std::move(u);
  sol.density = std::move(density);
  sol.action_flow = std::move(flow);
  sol.iterations = outer + 1;
  sol.final_change = change;
  return sol;
}

}  // namespace mfgc
