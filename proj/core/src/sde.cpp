#include "mfgc/nash.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/parallel.hpp"
#include "mfgc/rng.hpp"

#include <atomic>
#include <cmath>

namespace mfgc {

TrajectoryBatch simulate_closed_loop(const Model& model, const ValueField& field,
                                     double t0, const PlayerVector& x0, int n_paths,
                                     int n_steps, std::uint64_t seed, int workers) {
  const int N = field.players;
  if (static_cast<int>(x0.rows()) != N)
    throw Error("simulate_closed_loop: x0 player count mismatch");
  const double horizon = field.slice_time(field.slice_count() - 1);
  if (t0 < 0.0 || t0 >= horizon)
    throw OutOfDomain("simulate_closed_loop: t0 outside the solved horizon");
  for (int i = 0; i < N; ++i)
    if (std::abs(x0(i, 0)) > field.grid.radius)
      throw OutOfDomain("simulate_closed_loop: x0 outside the grid");

  TrajectoryBatch batch;
  batch.t0 = t0;
  batch.x0 = x0;
  batch.seed = seed;
  const double dtau = (horizon - t0) / n_steps;
  batch.times.resize(static_cast<std::size_t>(n_steps) + 1);
  for (int k = 0; k <= n_steps; ++k) batch.times[static_cast<std::size_t>(k)] = t0 + k * dtau;
  batch.paths.assign(static_cast<std::size_t>(n_paths),
                     Eigen::MatrixXd(n_steps + 1, N));

  const double sig_idio = std::sqrt(2.0 * dtau);
  const double sig_com = std::sqrt(2.0 * model.sigma0() * dtau);
  Rng master(seed);
  std::vector<long> clamp_counts(static_cast<std::size_t>(n_paths), 0);

  parallel_for(static_cast<std::size_t>(n_paths), workers,
               [&](std::size_t begin, std::size_t end) {
                 PlayerVector x(N, 1), p(N, 1), warm(N, 1);
                 double coords[8];
                 for (std::size_t path = begin; path < end; ++path) {
                   Rng rng = master.stream(path);
                   Eigen::MatrixXd& out = batch.paths[path];
                   x.col(0) = x0.col(0);
                   out.row(0) = x.col(0).transpose();
                   int clamped = 0;
                   bool have_warm = false;
                   for (int k = 0; k < n_steps; ++k) {
                     double t = batch.times[static_cast<std::size_t>(k)];
                     int s = field.slice_index_near(t);
                     // Diagonal gradient profile at the current state.
                     for (int i = 0; i < N; ++i) {
                       coords[0] = x(i, 0);
                       int pos = 1;
                       for (int j = 0; j < N; ++j) {
                         if (j == i) continue;
                         coords[pos++] = x(j, 0);
                       }
                       p(i, 0) = field.interp_d1(s, coords, &clamped);
                     }
                     FixedPointOptions fp_opts;
                     fp_opts.tol = 1e-10;
                     fp_opts.method = SolveMethod::kNewton;
                     fp_opts.warm_start = have_warm ? &warm : nullptr;
                     FixedPointResult fp = solve_action_profile(model, x, p, fp_opts);
                     warm = fp.actions;
                     have_warm = true;
                     double w0 = sig_com != 0.0 ? rng.normal() : 0.0;
                     for (int i = 0; i < N; ++i)
                       x(i, 0) += fp.actions(i, 0) * dtau + sig_idio * rng.normal() +
                                  sig_com * w0;
                     out.row(k + 1) = x.col(0).transpose();
                   }
                   clamp_counts[path] = clamped;
                 }
               });

  long total = 0;
  for (long c : clamp_counts) total += c;
  batch.clamped_lookups = total;
  return batch;
}

double offdiagonal_gradient_norm(const ValueField& field, const TrajectoryBatch& batch) {
  const int N = field.players;
  const std::size_t n_paths = batch.paths.size();
  const int n_steps = static_cast<int>(batch.times.size()) - 1;
  const double dtau = batch.times[1] - batch.times[0];
  double worst = 0.0;
  double coords[8];
  int clamped = 0;
  for (int i = 0; i < N; ++i) {
    double acc = 0.0;
    for (std::size_t path = 0; path < n_paths; ++path) {
      const Eigen::MatrixXd& xs = batch.paths[path];
      double integral = 0.0;
      for (int k = 0; k < n_steps; ++k) {
        int s = field.slice_index_near(batch.times[static_cast<std::size_t>(k)]);
        // u^{N,i} is u^{N,1} with players 1 and i exchanged; coords below
        // list player i first, so axis a > 0 matches the a-th other player.
        coords[0] = xs(k, i);
        int pos = 1;
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          coords[pos++] = xs(k, j);
        }
        double sq = 0.0;
        for (int axis = 1; axis < N; ++axis) {
          double g = field.interp_d(s, coords, axis, &clamped);
          sq += g * g;
        }
        integral += sq * dtau;
      }
      acc += integral;
    }
    worst = std::max(worst, acc / static_cast<double>(n_paths));
  }
  return worst;
}

}  // namespace mfgc
