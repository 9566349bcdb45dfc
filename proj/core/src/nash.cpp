#include "mfgc/nash.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace mfgc {

namespace {

constexpr std::size_t kNodeBudget = 10'000'000;

// Sort-and-sum: makes per-node accumulations invariant under permutations
// of the tail players, so the stored field is exchangeable bit-for-bit.
double stable_sum(double* vals, int count) {
  std::sort(vals, vals + count);
  double acc = 0.0;
  for (int c = 0; c < count; ++c) acc += vals[c];
  return acc;
}

struct NodeContext {
  explicit NodeContext(int n) : others(n - 1, 1), x(n, 1), p(n, 1), warm(n, 1) {}
  StateActionCloud others;
  PlayerVector x, p, warm;
};

// Distinct permutations of the sorted tail, mirroring the canonical value.
void mirror_orbit(Eigen::VectorXd& slice, const ValueField& proto, const int* idx,
                  int players, double value) {
  int tail[8];
  for (int j = 1; j < players; ++j) tail[j - 1] = idx[j];
  int full[8];
  full[0] = idx[0];
  do {
    for (int j = 1; j < players; ++j) full[j] = tail[j - 1];
    slice[proto.flat_index(full)] = value;
  } while (std::next_permutation(tail, tail + players - 1));
}

}  // namespace

ValueField solve_nash_grid(const Model& model, int n_players, const Grid& grid_in,
                           const NashSolveOptions& opts) {
  if (model.dim() != 1)
    throw Error("solve_nash_grid: tensor-grid solver supports d = 1 only");
  if (n_players < 2 || n_players > 4)
    throw Error("solve_nash_grid: N must be between 2 and 4");

  ValueField field;
  field.model = nullptr;
  field.players = n_players;
  field.dim = 1;
  field.grid = grid_in;

  if (static_cast<double>(n_players) * std::pow(grid_in.points, n_players) >
      static_cast<double>(kNodeBudget))
    throw Error("solve_nash_grid: grid exceeds the node memory budget");

  // Align the step count with the storage stride, refining dt if needed so
  // that t_steps * dt = horizon stays exact.
  double horizon = grid_in.horizon();
  int stride = std::max(1, (grid_in.t_steps + opts.max_stored_slices - 2) /
                               (opts.max_stored_slices - 1));
  int t_steps = ((grid_in.t_steps + stride - 1) / stride) * stride;
  field.grid.t_steps = t_steps;
  field.grid.dt = horizon / t_steps;
  field.stride = stride;
  field.slices.assign(static_cast<std::size_t>(t_steps / stride) + 1,
                      Eigen::VectorXd());

  const Grid& grid = field.grid;
  const int n = grid.points;
  const int N = n_players;
  const double dt = grid.dt;
  const double sigma0 = model.sigma0();
  const std::size_t node_total = field.node_count();

  // Canonical nodes: tail indices nondecreasing. Their orbits partition the
  // grid, so parallel mirror-writes never collide.
  std::vector<std::size_t> canonical;
  {
    int idx[8];
    for (std::size_t flat = 0; flat < node_total; ++flat) {
      field.unflatten(flat, idx);
      bool sorted = true;
      for (int j = 2; j < N; ++j)
        if (idx[j] < idx[j - 1]) sorted = false;
      if (sorted) canonical.push_back(flat);
    }
  }

  // Warm-start actions per canonical node.
  Eigen::MatrixXd actions(canonical.size(), N);
  actions.setZero();

  Eigen::VectorXd current(node_total);
  Eigen::VectorXd next(node_total);

  // Terminal slice: u(T, x) = G(x^1, m^{N,-1}_x).
  {
    int idx[8];
    PlayerVector xs(N, 1);
    for (std::size_t c = 0; c < canonical.size(); ++c) {
      field.unflatten(canonical[c], idx);
      for (int j = 0; j < N; ++j) xs(j, 0) = grid.coord(idx[j]);
      StateCloud others = state_cloud_without(xs, 0);
      double g = model.terminal(xs.row(0).transpose(), others);
      mirror_orbit(current, field, idx, N, g);
    }
  }
  field.slices[static_cast<std::size_t>(t_steps / stride)] = current;

  ValueField scratch = field;  // node calculus against the current slice
  scratch.slices.assign(1, Eigen::VectorXd());

  const int workers = resolve_workers(opts.workers);
  double prev_max = current.cwiseAbs().maxCoeff();

  for (int step = t_steps; step > 0; --step) {
    scratch.slices[0] = current;

    parallel_for(canonical.size(), workers, [&](std::size_t begin, std::size_t end) {
      NodeContext ctx(N);
      int idx[8];
      int swapped[8];
      double terms[16];
      for (std::size_t c = begin; c < end; ++c) {
        field.unflatten(canonical[c], idx);
        for (int j = 0; j < N; ++j) ctx.x(j, 0) = grid.coord(idx[j]);

        // Diagonal costate profile via symmetry: D_j u^{N,j} is D_1 u^{N,1}
        // at the argument with players 1 and j exchanged.
        for (int j = 0; j < N; ++j) {
          std::copy(idx, idx + N, swapped);
          std::swap(swapped[0], swapped[j]);
          ctx.p(j, 0) = scratch.d_j(0, swapped, 0);
        }

        ctx.warm.col(0) = actions.row(c).transpose();
        FixedPointOptions fp_opts;
        fp_opts.tol = opts.fixed_point_tol;
        fp_opts.method = SolveMethod::kNewton;
        fp_opts.warm_start = step == t_steps ? nullptr : &ctx.warm;
        FixedPointResult fp;
        try {
          fp = solve_action_profile(model, ctx.x, ctx.p, fp_opts);
        } catch (const NoConvergence& err) {
          std::ostringstream msg;
          msg << "fixed point failed at node (";
          for (int j = 0; j < N; ++j) msg << (j ? "," : "") << ctx.x(j, 0);
          msg << "), t-step " << step << ": residual " << err.residual;
          throw FixedPointFailure(msg.str());
        }
        actions.row(c) = fp.actions.col(0).transpose();

        for (int j = 0; j < N; ++j) terms[j] = scratch.d_jk(0, idx, j, j);
        double laplacian = stable_sum(terms, N);

        double common = 0.0;
        if (sigma0 != 0.0) {
          int count = 0;
          for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
              terms[count++] = j == k ? 0.0 : scratch.d_jk(0, idx, j, k);
          common = stable_sum(terms, count) + laplacian;
        }

        cloud_without_into(ctx.x, fp.actions, 0, ctx.others);
        double hat_h = model.hamiltonian(ctx.x.row(0).transpose(),
                                         ctx.p.row(0).transpose(), ctx.others);

        for (int j = 1; j < N; ++j)
          terms[j - 1] = fp.actions(j, 0) * scratch.d_j(0, idx, j);
        double transport = N > 1 ? stable_sum(terms, N - 1) : 0.0;

        double dtu = -laplacian - sigma0 * common + hat_h - transport;
        mirror_orbit(next, field, idx, N, current[canonical[c]] - dt * dtu);
      }
    });

    double next_max = next.cwiseAbs().maxCoeff();
    if (next_max > 10.0 * prev_max && next_max > 1.0) {
      std::ostringstream msg;
      msg << "slice max grew from " << prev_max << " to " << next_max << " at t-step "
          << step;
      throw StabilityViolation(msg.str());
    }
    prev_max = next_max;
    std::swap(current, next);
    if ((step - 1) % stride == 0)
      field.slices[static_cast<std::size_t>((step - 1) / stride)] = current;
  }

  return field;
}

std::vector<DecayRow> derivative_decay_report(const ValueField& field,
                                              const std::vector<ValueDecayProbe>& probes) {
  const int N = field.players;
  const int n = field.grid.points;
  // Interior window: middle half of each axis, away from boundary pollution.
  const int lo = n / 4;
  const int hi = n - 1 - n / 4;

  std::vector<DecayRow> rows;
  rows.reserve(probes.size());
  for (const ValueDecayProbe& probe : probes) {
    DecayRow row;
    row.n_players = N;
    row.i = probe.i + 1;
    row.j = probe.j + 1;
    if (probe.k >= 0) row.k = probe.k + 1;
    double worst = 0.0;
    int idx[8];
    int swapped[8];
    for (int s = 0; s < field.slice_count(); ++s) {
      for (std::size_t flat = 0; flat < field.node_count(); ++flat) {
        field.unflatten(flat, idx);
        bool interior = true;
        for (int j = 0; j < N; ++j)
          if (idx[j] < lo || idx[j] > hi) interior = false;
        if (!interior) continue;
        // u^{N,i} = u^{N,1} with players 1 and i exchanged.
        std::copy(idx, idx + N, swapped);
        std::swap(swapped[0], swapped[probe.i]);
        auto axis_of = [&](int player) {
          if (player == probe.i) return 0;
          if (player == 0) return probe.i;
          return player;
        };
        double val;
        if (probe.k < 0) {
          val = std::abs(field.d_j(s, swapped, axis_of(probe.j)));
        } else {
          val = std::abs(field.d_jk(s, swapped, axis_of(probe.j), axis_of(probe.k)));
        }
        worst = std::max(worst, val);
      }
    }
    row.omega = probe.k < 0 ? omega_weight(N, {probe.i, probe.j})
                            : omega_weight(N, {probe.i, probe.j, probe.k});
    row.norm = worst;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mfgc
