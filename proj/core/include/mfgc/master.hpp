#pragma once

#include "mfgc/grid.hpp"
#include "mfgc/model.hpp"
#include "mfgc/nash.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace mfgc {

// Empirical lift of the representative value function: the solved N-player
// field re-read as a function of (t, x, empirical measure), with the
// measure-derivative evaluators scaled by (N-1) and (N-1)^2. Cloud
// arguments must carry exactly N-1 atoms; atoms are addressed by index and
// coincident-atom second derivatives are rejected.
class MasterLift {
 public:
  virtual ~MasterLift() = default;

  virtual int players() const = 0;
  virtual int dim() const = 0;
  virtual int slice_count() const = 0;
  virtual double slice_time(int s) const = 0;
  virtual double radius() const = 0;  // probe domain half-width
  virtual Vec snap(const Vec& x) const = 0;

  virtual double value(int s, const Vec& x, const StateCloud& m) const = 0;
  virtual double u_t(int s, const Vec& x, const StateCloud& m) const = 0;
  virtual Vec u_x(int s, const Vec& x, const StateCloud& m) const = 0;
  virtual Mat u_xx(int s, const Vec& x, const StateCloud& m) const = 0;
  virtual Vec u_m(int s, const Vec& x, const StateCloud& m, int atom) const = 0;
  virtual Mat u_xm(int s, const Vec& x, const StateCloud& m, int atom) const = 0;
  virtual Mat u_ym(int s, const Vec& x, const StateCloud& m, int atom) const = 0;
  virtual Mat u_mm(int s, const Vec& x, const StateCloud& m, int atom_y,
                   int atom_z) const = 0;

 protected:
  void check_args(const StateCloud& m, int atom_y = 0, int atom_z = -1) const;
};

// Lift of a tensor-grid field; cloud atoms and x are snapped to grid nodes
// before any finite difference so the derivative identities hold exactly.
std::shared_ptr<const MasterLift> lift_field(std::shared_ptr<const ValueField> field);

// Lift of the closed-form quadratic solution (no grid error).
std::shared_ptr<const MasterLift> lift_riccati(std::shared_ptr<const RiccatiSolution> sol,
                                               int time_slices = 33);

struct ResidualProbe {
  int slice = 0;
  Vec x;
  StateCloud cloud;
};

struct ResidualRow {
  int players = 0;
  double t = 0.0;
  int probe_id = 0;
  double residual = 0.0;
  double envelope = 0.0;  // (|x| + M_2(m)^{1/2}) / sqrt(N)
  double ratio = 0.0;
  // component breakdown
  double term_ut = 0.0;
  double term_idio = 0.0;
  double term_common = 0.0;
  double term_hamiltonian = 0.0;
  double term_transport = 0.0;
};

// Pointwise defect of the lifted field in the limiting equation: the
// effective Hamiltonian is evaluated through the measure fixed point on the
// gradient pushforward cloud; the double measure integral runs over
// distinct atom pairs. sigma0_override replaces the model's common-noise
// intensity inside the residual formula only (the lift is unchanged).
std::vector<ResidualRow> master_residual(const MasterLift& lift, const Model& model,
                                         const std::vector<ResidualProbe>& probes,
                                         std::optional<double> sigma0_override = {});

// Deterministic probe set within the inner 75% of the lift domain.
std::vector<ResidualProbe> make_residual_probes(const MasterLift& lift, int count,
                                                std::uint64_t seed, double scale = 1.0);

// Mean-field value for the plain lq family: closes over quadratics in
// (x, xbar(m)), integrated backward with RK4 and validated by residual
// substitution in tests.
struct MasterLq {
  LqSpec spec;
  double sigma0 = 0.0;
  int dim = 1;
  double horizon = 0.0;
  double dt = 1e-4;
  std::vector<double> alpha, beta, gamma, kappa;  // index k at time k*dt

  void coeffs_at(double t, double& a, double& b, double& g, double& k) const;
  void coeff_rates(double a, double b, double g, double& da, double& db, double& dg,
                   double& dk) const;
  double value(double t, const Vec& x, const StateCloud& m) const;
  Vec d_x(double t, const Vec& x, const StateCloud& m) const;
  Vec d_m(double t, const Vec& x, const StateCloud& m) const;  // atom-independent
  double u_t(double t, const Vec& x, const StateCloud& m) const;
};

MasterLq solve_master_lq(const Model& model, double dt = 1e-4);

struct ConvergenceRow {
  int players = 0;
  double err = 0.0;
};

// err_N = max over shared probes of |u^{N,1}(t, (x, cloud)) - U(t, x, m)|,
// with nested particle pools so probes match across N.
std::vector<ConvergenceRow> convergence_report(
    const std::vector<std::shared_ptr<const MasterLift>>& lifts, const MasterLq& master,
    int n_probes, std::uint64_t seed, double scale = 1.0);

// --- 1-d mean-field equilibrium solver (no common noise) ------------------

struct MfgcOptions {
  double damping = 0.5;
  double tol = 1e-4;
  int max_outer = 200;
  int quad_particles = 64;
  double m0_mean = 1.0;
  double m0_std = 0.5;
  double initial_action = 0.0;  // constant action of the starting flow guess
  int stop_stride = 50;         // flow-distance stopping metric slice stride
};

struct MfgcSolution {
  Grid grid;
  std::vector<Eigen::VectorXd> value;         // u(t_k, .)
  std::vector<Eigen::VectorXd> density;       // m(t_k, .)
  std::vector<StateActionCloud> action_flow;  // mu_{t_k} quadrature particles
  int iterations = 0;
  double final_change = 0.0;
};

// Damped fixed-point loop over the state-action flow: backward value solve,
// forward density transport, then the measure consistency map on the
// gradient pushforward of the density quadrature.
MfgcSolution solve_mfgc_picard(const Model& model, const Grid& grid1d,
                               const MfgcOptions& opts = {});

// Equilibrium mean/variance flow of the lq mean-field problem from the
// closed-form feedback coefficients (independent moment-equation oracle).
struct LqMomentFlow {
  std::vector<double> t, mean, var;
};
LqMomentFlow lq_moment_flow(const MasterLq& master, double mean0, double var0,
                            int steps);

}  // namespace mfgc
