#include "mfgc/grid.hpp"

#include "mfgc/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mfgc {

int Grid::snap_index(double x) const {
  int idx = static_cast<int>(std::lround((x + radius) / h()));
  if (idx < 0 || idx >= points) throw OutOfDomain("coordinate outside the grid");
  return idx;
}

double Grid::stability_bound(double h, int n_players, int dim, double sigma0,
                             double safety) {
  return h * h / (2.0 * dim * n_players * (1.0 + sigma0) * safety);
}

Grid Grid::make(double radius, int points, double horizon, int n_players, int dim,
                double sigma0, double time_refine) {
  if (points < 8 || points % 2 == 0)
    throw Error("grid: points_per_axis must be odd and >= 8");
  if (radius <= 0 || horizon <= 0) throw Error("grid: radius and horizon must be positive");
  Grid g;
  g.radius = radius;
  g.points = points;
  double h = g.h();
  double bound = stability_bound(h, n_players, dim, sigma0);
  double dt = std::min(bound, time_refine * h);
  g.t_steps = static_cast<int>(std::ceil(horizon / dt));
  g.dt = horizon / g.t_steps;
  return g;
}

int ValueField::slice_index_near(double t) const {
  if (t < -1e-12 || t > slice_time(slice_count() - 1) + 1e-12)
    throw OutOfDomain("time outside the solved horizon");
  int s = static_cast<int>(std::lround(t / slice_dt()));
  return std::clamp(s, 0, slice_count() - 1);
}

std::size_t ValueField::node_count() const {
  std::size_t count = 1;
  for (int j = 0; j < players; ++j) count *= static_cast<std::size_t>(grid.points);
  return count;
}

std::size_t ValueField::flat_index(const int* idx) const {
  std::size_t flat = 0;
  for (int j = 0; j < players; ++j)
    flat = flat * static_cast<std::size_t>(grid.points) + static_cast<std::size_t>(idx[j]);
  return flat;
}

void ValueField::unflatten(std::size_t flat, int* idx) const {
  for (int j = players - 1; j >= 0; --j) {
    idx[j] = static_cast<int>(flat % static_cast<std::size_t>(grid.points));
    flat /= static_cast<std::size_t>(grid.points);
  }
}

double ValueField::value_ext(int s, const int* idx) const {
  int tmp[8];
  bool ghost = false;
  for (int j = 0; j < players; ++j) {
    tmp[j] = idx[j];
    if (idx[j] < 0 || idx[j] >= grid.points) ghost = true;
  }
  if (!ghost) return slices[s][flat_index(tmp)];
  // Extrapolate one axis at a time; at most one axis is outside for the
  // stencils used here.
  for (int j = 0; j < players; ++j) {
    if (tmp[j] == -1) {
      tmp[j] = 0;
      double u0 = value_ext(s, tmp);
      tmp[j] = 1;
      double u1 = value_ext(s, tmp);
      tmp[j] = 2;
      double u2 = value_ext(s, tmp);
      tmp[j] = -1;
      return 3.0 * u0 - 3.0 * u1 + u2;
    }
    if (tmp[j] == grid.points) {
      tmp[j] = grid.points - 1;
      double u0 = value_ext(s, tmp);
      tmp[j] = grid.points - 2;
      double u1 = value_ext(s, tmp);
      tmp[j] = grid.points - 3;
      double u2 = value_ext(s, tmp);
      tmp[j] = grid.points;
      return 3.0 * u0 - 3.0 * u1 + u2;
    }
  }
  throw OutOfDomain("grid index more than one layer outside");
}

double ValueField::d_j(int s, const int* idx, int j) const {
  int tmp[8];
  std::copy(idx, idx + players, tmp);
  tmp[j] = idx[j] + 1;
  double plus = value_ext(s, tmp);
  tmp[j] = idx[j] - 1;
  double minus = value_ext(s, tmp);
  return (plus - minus) / (2.0 * grid.h());
}

double ValueField::d_jk(int s, const int* idx, int j, int k) const {
  int tmp[8];
  std::copy(idx, idx + players, tmp);
  double h = grid.h();
  if (j == k) {
    double mid = value_ext(s, tmp);
    tmp[j] = idx[j] + 1;
    double plus = value_ext(s, tmp);
    tmp[j] = idx[j] - 1;
    double minus = value_ext(s, tmp);
    return (plus - 2.0 * mid + minus) / (h * h);
  }
  tmp[j] = idx[j] + 1;
  tmp[k] = idx[k] + 1;
  double pp = value_ext(s, tmp);
  tmp[k] = idx[k] - 1;
  double pm = value_ext(s, tmp);
  tmp[j] = idx[j] - 1;
  double mm = value_ext(s, tmp);
  tmp[k] = idx[k] + 1;
  double mp = value_ext(s, tmp);
  return (pp - pm - mp + mm) / (4.0 * h * h);
}

double ValueField::d_t(int s, const int* idx) const {
  std::size_t flat = flat_index(idx);
  double dtau = slice_dt();
  int last = slice_count() - 1;
  if (s > 0 && s < last)
    return (slices[s + 1][flat] - slices[s - 1][flat]) / (2.0 * dtau);
  if (s == 0)
    return (-3.0 * slices[0][flat] + 4.0 * slices[1][flat] - slices[2][flat]) /
           (2.0 * dtau);
  return (3.0 * slices[last][flat] - 4.0 * slices[last - 1][flat] +
          slices[last - 2][flat]) /
         (2.0 * dtau);
}

namespace {

struct CellLocator {
  int base[8];
  double w[8];  // weight of the +1 corner per axis
};

CellLocator locate(const Grid& grid, int players, const double* coords, int* clamped) {
  CellLocator loc;
  double h = grid.h();
  for (int j = 0; j < players; ++j) {
    double c = coords[j];
    if (c < -grid.radius) {
      c = -grid.radius;
      if (clamped != nullptr) ++(*clamped);
    } else if (c > grid.radius) {
      c = grid.radius;
      if (clamped != nullptr) ++(*clamped);
    }
    double rel = (c + grid.radius) / h;
    int idx = std::min(static_cast<int>(rel), grid.points - 2);
    loc.base[j] = idx;
    loc.w[j] = rel - idx;
  }
  return loc;
}

}  // namespace

double ValueField::interp_d(int s, const double* coords, int axis, int* clamped) const {
  CellLocator loc = locate(grid, players, coords, clamped);
  double acc = 0.0;
  int corners = 1 << players;
  int idx[8];
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    for (int j = 0; j < players; ++j) {
      int bit = (c >> j) & 1;
      idx[j] = loc.base[j] + bit;
      weight *= bit == 1 ? loc.w[j] : 1.0 - loc.w[j];
    }
    if (weight == 0.0) continue;
    acc += weight * d_j(s, idx, axis);
  }
  return acc;
}

double ValueField::interp_value(int s, const double* coords, int* clamped) const {
  CellLocator loc = locate(grid, players, coords, clamped);
  double acc = 0.0;
  int corners = 1 << players;
  int idx[8];
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    for (int j = 0; j < players; ++j) {
      int bit = (c >> j) & 1;
      idx[j] = loc.base[j] + bit;
      weight *= bit == 1 ? loc.w[j] : 1.0 - loc.w[j];
    }
    if (weight == 0.0) continue;
    acc += weight * value(s, idx);
  }
  return acc;
}

namespace {

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

void put_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& in) {
  std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_field(const ValueField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_field: cannot open " + path);
  put_u64(out, static_cast<std::uint64_t>(field.players));
  put_u64(out, static_cast<std::uint64_t>(field.dim));
  put_u64(out, static_cast<std::uint64_t>(field.grid.points));
  put_f64(out, field.grid.radius);
  put_f64(out, field.grid.dt);
  put_u64(out, static_cast<std::uint64_t>(field.grid.t_steps));
  for (const auto& slice : field.slices) {
    for (Eigen::Index i = 0; i < slice.size(); ++i) put_f64(out, slice[i]);
  }
  nlohmann::json sidecar{{"players", field.players},
                         {"dim", field.dim},
                         {"points", field.grid.points},
                         {"radius", field.grid.radius},
                         {"dt", field.grid.dt},
                         {"t_steps", field.grid.t_steps},
                         {"stride", field.stride},
                         {"stored_slices", field.slice_count()},
                         {"model", field.model ? field.model->family() : "unknown"}};
  std::ofstream side(path + ".json");
  side << sidecar.dump(2) << "\n";
}

ValueField read_field(const std::string& path, ModelPtr model) {
  std::ifstream side_in(path + ".json");
  if (!side_in) throw Error("read_field: missing sidecar for " + path);
  nlohmann::json sidecar = nlohmann::json::parse(side_in);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_field: cannot open " + path);
  ValueField field;
  field.model = std::move(model);
  field.players = static_cast<int>(get_u64(in));
  field.dim = static_cast<int>(get_u64(in));
  field.grid.points = static_cast<int>(get_u64(in));
  field.grid.radius = get_f64(in);
  field.grid.dt = get_f64(in);
  field.grid.t_steps = static_cast<int>(get_u64(in));
  field.stride = sidecar.at("stride").get<int>();
  int stored = sidecar.at("stored_slices").get<int>();
  field.slices.assign(stored, Eigen::VectorXd(field.node_count()));
  for (auto& slice : field.slices)
    for (Eigen::Index i = 0; i < slice.size(); ++i) slice[i] = get_f64(in);
  if (!in) throw Error("read_field: truncated payload in " + path);
  return field;
}

}  // namespace mfgc
