#include "mfgc/master.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/fixed_point.hpp"
#include "mfgc/lq.hpp"
#include "mfgc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mfgc {

void MasterLift::check_args(const StateCloud& m, int atom_y, int atom_z) const {
  if (m.size() != players() - 1)
    throw WrongCloudSize("master lift: cloud must carry exactly N-1 atoms");
  if (atom_y < 0 || atom_y >= m.size())
    throw OutOfDomain("master lift: atom index out of range");
  if (atom_z >= 0 && atom_z == atom_y)
    throw OutOfDomain("master lift: coincident atoms are outside the lift domain");
  if (atom_z >= m.size())
    throw OutOfDomain("master lift: atom index out of range");
}

namespace {

class GridLift final : public MasterLift {
 public:
  explicit GridLift(std::shared_ptr<const ValueField> field) : field_(std::move(field)) {
    if (field_->dim != 1) throw Error("grid lift: d = 1 fields only");
  }

  int players() const override { return field_->players; }
  int dim() const override { return 1; }
  int slice_count() const override { return field_->slice_count(); }
  double slice_time(int s) const override { return field_->slice_time(s); }
  double radius() const override { return field_->grid.radius; }

  Vec snap(const Vec& x) const override {
    Vec out(1);
    out(0) = field_->grid.coord(field_->grid.snap_index(x(0)));
    return out;
  }

  double value(int s, const Vec& x, const StateCloud& m) const override {
    int idx[8];
    assemble(x, m, idx);
    return field_->value(s, idx);
  }
  double u_t(int s, const Vec& x, const StateCloud& m) const override {
    int idx[8];
    assemble(x, m, idx);
    return field_->d_t(s, idx);
  }
  Vec u_x(int s, const Vec& x, const StateCloud& m) const override {
    int idx[8];
    assemble(x, m, idx);
    Vec out(1);
    out(0) = field_->d_j(s, idx, 0);
    return out;
  }
  Mat u_xx(int s, const Vec& x, const StateCloud& m) const override {
    int idx[8];
    assemble(x, m, idx);
    Mat out(1, 1);
    out(0, 0) = field_->d_jk(s, idx, 0, 0);
    return out;
  }
  Vec u_m(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    int idx[8];
    assemble(x, m, idx);
    Vec out(1);
    out(0) = (players() - 1) * field_->d_j(s, idx, atom + 1);
    return out;
  }
  Mat u_xm(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    int idx[8];
    assemble(x, m, idx);
    Mat out(1, 1);
    out(0, 0) = (players() - 1) * field_->d_jk(s, idx, 0, atom + 1);
    return out;
  }
  Mat u_ym(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    int idx[8];
    assemble(x, m, idx);
    Mat out(1, 1);
    out(0, 0) = (players() - 1) * field_->d_jk(s, idx, atom + 1, atom + 1);
    return out;
  }
  Mat u_mm(int s, const Vec& x, const StateCloud& m, int atom_y, int atom_z) const override {
    check_args(m, atom_y, atom_z);
    int idx[8];
    assemble(x, m, idx);
    double scale = static_cast<double>(players() - 1) * (players() - 1);
    Mat out(1, 1);
    out(0, 0) = scale * field_->d_jk(s, idx, atom_y + 1, atom_z + 1);
    return out;
  }

 private:
  void assemble(const Vec& x, const StateCloud& m, int* idx) const {
    if (m.size() != players() - 1)
      throw WrongCloudSize("master lift: cloud must carry exactly N-1 atoms");
    idx[0] = field_->grid.snap_index(x(0));
    for (int j = 0; j < m.size(); ++j)
      idx[j + 1] = field_->grid.snap_index(m.x(j, 0));
  }

  std::shared_ptr<const ValueField> field_;
};

class RiccatiLift final : public MasterLift {
 public:
  RiccatiLift(std::shared_ptr<const RiccatiSolution> sol, int slices)
      : sol_(std::move(sol)), slices_(slices) {}

  int players() const override { return sol_->players; }
  int dim() const override { return sol_->dim; }
  int slice_count() const override { return slices_; }
  double slice_time(int s) const override {
    return sol_->horizon * s / (slices_ - 1);
  }
  double radius() const override { return 1e18; }
  Vec snap(const Vec& x) const override { return x; }

  double value(int s, const Vec& x, const StateCloud& m) const override {
    return sol_->value(slice_time(s), joint(x, m));
  }
  double u_t(int s, const Vec& x, const StateCloud& m) const override {
    return sol_->time_derivative(slice_time(s), joint(x, m));
  }
  Vec u_x(int s, const Vec& x, const StateCloud& m) const override {
    return sol_->gradient_block(slice_time(s), joint(x, m), 0);
  }
  Mat u_xx(int s, const Vec& x, const StateCloud& m) const override {
    joint(x, m);  // size check
    return sol_->hessian_block(slice_time(s), 0, 0);
  }
  Vec u_m(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    double scale = players() - 1;
    return scale * sol_->gradient_block(slice_time(s), joint(x, m), atom + 1);
  }
  Mat u_xm(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    joint(x, m);
    double scale = players() - 1;
    return scale * sol_->hessian_block(slice_time(s), 0, atom + 1);
  }
  Mat u_ym(int s, const Vec& x, const StateCloud& m, int atom) const override {
    check_args(m, atom);
    joint(x, m);
    double scale = players() - 1;
    return scale * sol_->hessian_block(slice_time(s), atom + 1, atom + 1);
  }
  Mat u_mm(int s, const Vec& x, const StateCloud& m, int atom_y, int atom_z) const override {
    check_args(m, atom_y, atom_z);
    joint(x, m);
    double scale = static_cast<double>(players() - 1) * (players() - 1);
    return scale * sol_->hessian_block(slice_time(s), atom_y + 1, atom_z + 1);
  }

 private:
  PlayerVector joint(const Vec& x, const StateCloud& m) const {
    if (m.size() != players() - 1)
      throw WrongCloudSize("master lift: cloud must carry exactly N-1 atoms");
    PlayerVector out(players(), dim());
    out.row(0) = x.transpose();
    for (int j = 0; j < m.size(); ++j) out.row(j + 1) = m.x.row(j);
    return out;
  }

  std::shared_ptr<const RiccatiSolution> sol_;
  int slices_;
};

}  // namespace

std::shared_ptr<const MasterLift> lift_field(std::shared_ptr<const ValueField> field) {
  return std::make_shared<GridLift>(std::move(field));
}

std::shared_ptr<const MasterLift> lift_riccati(std::shared_ptr<const RiccatiSolution> sol,
                                               int time_slices) {
  return std::make_shared<RiccatiLift>(std::move(sol), time_slices);
}

std::vector<ResidualRow> master_residual(const MasterLift& lift, const Model& model,
                                         const std::vector<ResidualProbe>& probes,
                                         std::optional<double> sigma0_override) {
  const int N = lift.players();
  const int n_atoms = N - 1;
  const double sigma0 = sigma0_override.value_or(model.sigma0());
  std::vector<ResidualRow> rows;
  rows.reserve(probes.size());

  int probe_id = 0;
  for (const ResidualProbe& probe : probes) {
    const StateCloud& m = probe.cloud;
    ResidualRow row;
    row.players = N;
    row.t = lift.slice_time(probe.slice);
    row.probe_id = probe_id++;

    row.term_ut = lift.u_t(probe.slice, probe.x, m);

    double trace_xx = lift.u_xx(probe.slice, probe.x, m).trace();
    double mean_ym = 0.0;
    double mean_xm = 0.0;
    for (int j = 0; j < n_atoms; ++j) {
      mean_ym += lift.u_ym(probe.slice, probe.x, m, j).trace();
      mean_xm += lift.u_xm(probe.slice, probe.x, m, j).trace();
    }
    mean_ym /= n_atoms;
    mean_xm /= n_atoms;
    double mean_mm = 0.0;
    if (n_atoms > 1) {
      for (int j = 0; j < n_atoms; ++j)
        for (int k = 0; k < n_atoms; ++k)
          if (j != k) mean_mm += lift.u_mm(probe.slice, probe.x, m, j, k).trace();
      mean_mm /= static_cast<double>(n_atoms) * n_atoms;
    }
    row.term_idio = trace_xx + mean_ym;
    row.term_common = row.term_idio + mean_mm + 2.0 * mean_xm;

    // Gradient pushforward cloud and its measure fixed point.
    StateActionCloud nu(n_atoms, lift.dim());
    nu.x = m.x;
    for (int j = 0; j < n_atoms; ++j)
      nu.a.row(j) = lift.u_x(probe.slice, m.particle(j), m).transpose();
    StateActionCloud mu = solve_consistent_cloud(model, nu);

    Vec px = lift.u_x(probe.slice, probe.x, m);
    row.term_hamiltonian = model.hamiltonian(probe.x, px, mu);

    double transport = 0.0;
    for (int j = 0; j < n_atoms; ++j) {
      Vec dp = model.d_p_hamiltonian(m.particle(j), nu.a.row(j).transpose(), mu);
      transport += dp.dot(lift.u_m(probe.slice, probe.x, m, j));
    }
    row.term_transport = transport / n_atoms;

    row.residual = -row.term_ut - (1.0 + sigma0) * row.term_idio -
                   sigma0 * (mean_mm + 2.0 * mean_xm) + row.term_hamiltonian +
                   row.term_transport;
    row.envelope = (probe.x.norm() + std::sqrt(moment(m, 2))) / std::sqrt(N);
    row.ratio = row.envelope > 0 ? row.residual / row.envelope : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ResidualProbe> make_residual_probes(const MasterLift& lift, int count,
                                                std::uint64_t seed, double scale) {
  Rng rng(seed);
  const int n_atoms = lift.players() - 1;
  const double reach = std::min(0.75 * lift.radius(), 6.0 * scale);
  std::vector<ResidualProbe> probes;
  probes.reserve(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    ResidualProbe probe;
    int last = lift.slice_count() - 1;
    // interior stored slices only
    probe.slice = 1 + static_cast<int>(rng.uniform() * std::max(1, last - 1));
    probe.slice = std::min(probe.slice, last - 1);
    auto draw = [&]() {
      double v = scale * rng.normal();
      return std::clamp(v, -reach, reach);
    };
    Vec x(lift.dim());
    for (int c = 0; c < lift.dim(); ++c) x(c) = draw();
    probe.x = lift.snap(x);
    Eigen::MatrixXd atoms(n_atoms, lift.dim());
    for (int j = 0; j < n_atoms; ++j) {
      Vec y(lift.dim());
      for (int c = 0; c < lift.dim(); ++c) y(c) = draw();
      atoms.row(j) = lift.snap(y).transpose();
    }
    probe.cloud = StateCloud(atoms);
    probes.push_back(std::move(probe));
  }
  return probes;
}

// --- MasterLq ---------------------------------------------------------------

void MasterLq::coeff_rates(double a, double b, double g, double& da, double& db,
                           double& dg, double& dk) const {
  const double lambda = spec.lambda;
  const double theta = (a + b) / (1.0 + lambda);
  const double rho = a + b - lambda * theta;
  da = a * a - spec.c_x;
  db = a * (b - lambda * theta) + spec.c_x * spec.q_x + rho * b;
  dg = (b - lambda * theta) * (b - lambda * theta) - spec.c_x * spec.q_x * spec.q_x +
       2.0 * rho * g;
  dk = -dim * ((1.0 + sigma0) * a + sigma0 * (g + 2.0 * b));
}

namespace {

void master_rk4(const MasterLq& mq, double& a, double& b, double& g, double& k,
                double step) {
  auto f = [&mq](double a0, double b0, double g0, double* out) {
    double dk;
    mq.coeff_rates(a0, b0, g0, out[0], out[1], out[2], dk);
    out[3] = dk;
  };
  double k1[4], k2[4], k3[4], k4[4];
  f(a, b, g, k1);
  f(a + 0.5 * step * k1[0], b + 0.5 * step * k1[1], g + 0.5 * step * k1[2], k2);
  f(a + 0.5 * step * k2[0], b + 0.5 * step * k2[1], g + 0.5 * step * k2[2], k3);
  f(a + step * k3[0], b + step * k3[1], g + step * k3[2], k4);
  a += (step / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
  b += (step / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  g += (step / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
  k += (step / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
}

}  // namespace

void MasterLq::coeffs_at(double t, double& a, double& b, double& g, double& k) const {
  if (t < -1e-12 || t > horizon + 1e-12)
    throw OutOfDomain("master-lq: time outside the horizon");
  int idx = std::min(static_cast<int>(t / dt), static_cast<int>(alpha.size()) - 1);
  a = alpha[static_cast<std::size_t>(idx)];
  b = beta[static_cast<std::size_t>(idx)];
  g = gamma[static_cast<std::size_t>(idx)];
  k = kappa[static_cast<std::size_t>(idx)];
  double delta = t - idx * dt;
  if (std::abs(delta) < 1e-14) return;
  master_rk4(*this, a, b, g, k, delta);
}

double MasterLq::value(double t, const Vec& x, const StateCloud& m) const {
  double a, b, g, k;
  coeffs_at(t, a, b, g, k);
  Vec xbar = m.mean();
  return 0.5 * a * x.squaredNorm() + b * x.dot(xbar) + 0.5 * g * xbar.squaredNorm() + k;
}

Vec MasterLq::d_x(double t, const Vec& x, const StateCloud& m) const {
  double a, b, g, k;
  coeffs_at(t, a, b, g, k);
  return a * x + b * m.mean();
}

Vec MasterLq::d_m(double t, const Vec& x, const StateCloud& m) const {
  double a, b, g, k;
  coeffs_at(t, a, b, g, k);
  return b * x + g * m.mean();
}

double MasterLq::u_t(double t, const Vec& x, const StateCloud& m) const {
  double a, b, g, k;
  coeffs_at(t, a, b, g, k);
  double da, db, dg, dk;
  coeff_rates(a, b, g, da, db, dg, dk);
  Vec xbar = m.mean();
  return 0.5 * da * x.squaredNorm() + db * x.dot(xbar) + 0.5 * dg * xbar.squaredNorm() +
         dk;
}

MasterLq solve_master_lq(const Model& model, double dt) {
  const LqSpec* spec = lq_spec_of(model);
  if (spec == nullptr) throw NonLqModel("solve_master_lq: lq family only");

  MasterLq mq;
  mq.spec = *spec;
  mq.sigma0 = model.sigma0();
  mq.dim = model.dim();
  mq.horizon = model.horizon();
  int steps = std::max(1, static_cast<int>(std::ceil(mq.horizon / dt)));
  mq.dt = mq.horizon / steps;
  mq.alpha.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  mq.beta.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  mq.gamma.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  mq.kappa.assign(static_cast<std::size_t>(steps) + 1, 0.0);

  double a = spec->c_g;
  double b = -spec->c_g * spec->q_g;
  double g = spec->c_g * spec->q_g * spec->q_g;
  double k = 0.0;
  mq.alpha[static_cast<std::size_t>(steps)] = a;
  mq.beta[static_cast<std::size_t>(steps)] = b;
  mq.gamma[static_cast<std::size_t>(steps)] = g;
  mq.kappa[static_cast<std::size_t>(steps)] = k;
  for (int s = steps; s > 0; --s) {
    master_rk4(mq, a, b, g, k, -mq.dt);
    mq.alpha[static_cast<std::size_t>(s - 1)] = a;
    mq.beta[static_cast<std::size_t>(s - 1)] = b;
    mq.gamma[static_cast<std::size_t>(s - 1)] = g;
    mq.kappa[static_cast<std::size_t>(s - 1)] = k;
  }
  return mq;
}

std::vector<ConvergenceRow> convergence_report(
    const std::vector<std::shared_ptr<const MasterLift>>& lifts, const MasterLq& master,
    int n_probes, std::uint64_t seed, double scale) {
  if (lifts.empty()) return {};
  int max_atoms = 0;
  for (const auto& lift : lifts) max_atoms = std::max(max_atoms, lift->players() - 1);

  // Nested probe pool so probes match across N: each probe fixes
  // (time fraction, x, atom pool); lift N consumes the first N-1 atoms.
  Rng rng(seed);
  struct Pool {
    double tfrac;
    double x;
    std::vector<double> atoms;
  };
  std::vector<Pool> pool(static_cast<std::size_t>(n_probes));
  for (auto& p : pool) {
    p.tfrac = 0.1 + 0.8 * rng.uniform();
    p.x = scale * rng.normal();
    p.atoms.resize(static_cast<std::size_t>(max_atoms));
    for (double& y : p.atoms) y = scale * rng.normal();
  }

  std::vector<ConvergenceRow> rows;
  rows.reserve(lifts.size());
  for (const auto& lift : lifts) {
    const int n_atoms = lift->players() - 1;
    double worst = 0.0;
    for (const Pool& p : pool) {
      int s = static_cast<int>(std::lround(p.tfrac * (lift->slice_count() - 1)));
      s = std::clamp(s, 0, lift->slice_count() - 1);
      Vec x(1);
      x(0) = p.x;
      x = lift->snap(x);
      Eigen::MatrixXd atoms(n_atoms, 1);
      for (int j = 0; j < n_atoms; ++j) {
        Vec y(1);
        y(0) = p.atoms[static_cast<std::size_t>(j)];
        atoms.row(j) = lift->snap(y).transpose();
      }
      StateCloud m(atoms);
      double un = lift->value(s, x, m);
      double u = master.value(lift->slice_time(s), x, m);
      worst = std::max(worst, std::abs(un - u));
    }
    rows.push_back({lift->players(), worst});
  }
  return rows;
}

LqMomentFlow lq_moment_flow(const MasterLq& master, double mean0, double var0,
                            int steps) {
  LqMomentFlow flow;
  flow.t.resize(static_cast<std::size_t>(steps) + 1);
  flow.mean.resize(static_cast<std::size_t>(steps) + 1);
  flow.var.resize(static_cast<std::size_t>(steps) + 1);
  double dt = master.horizon / steps;
  double mean = mean0;
  double var = var0;
  const double lambda = master.spec.lambda;
  auto rates = [&](double t, double m_in, double v_in, double& dm, double& dv) {
    double a, b, g, k;
    master.coeffs_at(t, a, b, g, k);
    double theta = (a + b) / (1.0 + lambda);
    double rho = a + b - lambda * theta;
    // Feedback drift -(a x + (b - lambda theta) xbar): mean decays at rho,
    // fluctuations at a; idiosyncratic noise feeds variance at rate 2.
    dm = -rho * m_in;
    dv = -2.0 * a * v_in + 2.0;
  };
  for (int s = 0; s <= steps; ++s) {
    flow.t[static_cast<std::size_t>(s)] = s * dt;
    flow.mean[static_cast<std::size_t>(s)] = mean;
    flow.var[static_cast<std::size_t>(s)] = var;
    if (s == steps) break;
    double t = s * dt;
    double k1m, k1v, k2m, k2v, k3m, k3v, k4m, k4v;
    rates(t, mean, var, k1m, k1v);
    rates(t + 0.5 * dt, mean + 0.5 * dt * k1m, var + 0.5 * dt * k1v, k2m, k2v);
    rates(t + 0.5 * dt, mean + 0.5 * dt * k2m, var + 0.5 * dt * k2v, k3m, k3v);
    rates(t + dt, mean + dt * k3m, var + dt * k3v, k4m, k4v);
    mean += (dt / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m);
    var += (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return flow;
}

}  // namespace mfgc
