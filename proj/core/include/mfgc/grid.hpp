#pragma once

#include "mfgc/model.hpp"
#include "mfgc/types.hpp"

#include <string>
#include <vector>

namespace mfgc {

// Tensor grid over [-R, R] per player coordinate with an explicit-scheme
// time step. points_per_axis must be odd (the grid contains 0) and >= 8 is
// the practical floor for the stencils; dt always satisfies
//   dt <= h^2 / (2 d N (1 + sigma0) * safety),        safety = 1.1,
// and is additionally capped at time_refine * h so that refinement studies
// in h see a first-order-in-h time error envelope.
struct Grid {
  double radius = 4.0;
  int points = 33;
  double dt = 0.0;
  int t_steps = 0;

  double h() const { return 2.0 * radius / (points - 1); }
  double coord(int idx) const { return -radius + idx * h(); }
  int snap_index(double x) const;
  double horizon() const { return dt * t_steps; }

  static double stability_bound(double h, int n_players, int dim, double sigma0,
                                double safety = 1.1);
  static Grid make(double radius, int points, double horizon, int n_players, int dim,
                   double sigma0, double time_refine = 0.01);
};

// Time-indexed tensor field of the representative player's value function.
// Only u^{N,1} is stored; the other players' values follow by argument
// permutation. Slices are kept every `stride` solver steps (memory stays
// bounded at fine dt); slice s sits at time s * stride * dt.
struct ValueField {
  ModelPtr model;
  Grid grid;
  int players = 0;
  int dim = 1;
  int stride = 1;
  std::vector<Eigen::VectorXd> slices;

  int slice_count() const { return static_cast<int>(slices.size()); }
  double slice_time(int s) const { return s * stride * grid.dt; }
  double slice_dt() const { return stride * grid.dt; }
  int slice_index_near(double t) const;

  std::size_t node_count() const;
  std::size_t flat_index(const int* idx) const;
  void unflatten(std::size_t flat, int* idx) const;

  // Node value with one ghost layer per axis: indices at -1 or n are filled
  // by quadratic extrapolation (exact on quadratics, second-order else).
  double value_ext(int s, const int* idx) const;
  double value(int s, const int* idx) const { return slices[s][flat_index(idx)]; }

  // Grid derivatives of u^{N,1} at a node (player coordinate j, k in 0..N-1,
  // d = 1). Central stencils with the ghost extension at the boundary.
  double d_j(int s, const int* idx, int j) const;
  double d_jk(int s, const int* idx, int j, int k) const;
  // Time derivative at a stored slice (central inside, one-sided 2nd order
  // at the ends).
  double d_t(int s, const int* idx) const;

  // Multilinear interpolation of D_axis u^{N,1} at an off-grid joint state;
  // out-of-range coordinates are clamped and counted in *clamped.
  double interp_d(int s, const double* coords, int axis, int* clamped) const;
  double interp_d1(int s, const double* coords, int* clamped) const {
    return interp_d(s, coords, 0, clamped);
  }
  double interp_value(int s, const double* coords, int* clamped) const;
};

// Flat binary snapshot: header of six little-endian 64-bit values
// (N, d, n, R, dt, t_steps; R and dt as IEEE doubles) followed by the
// stored slices row-major, plus a JSON sidecar <path>.json describing the
// stride and the model.
void write_field(const ValueField& field, const std::string& path);
ValueField read_field(const std::string& path, ModelPtr model);

}  // namespace mfgc
