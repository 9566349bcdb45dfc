#include "mfgc/nash.hpp"

#include "mfgc/errors.hpp"
#include "mfgc/lq.hpp"

#include <cmath>

namespace mfgc {

namespace {

// Coefficient dynamics of the quadratic ansatz
//   u^{N,1}(t,x) = x'P(t)x/2 + q(t)'x + r(t)
// obtained by substituting the ansatz into the coupled value system. The
// diagonal costate profile is affine, p^i(x) = A_i x + b_i with A_i the
// first block-row of P conjugated by the (1,i) player swap; the joint
// best-response map is the explicit linear solve a = -K p, and every
// remaining term of the system is affine or quadratic in x, so matching
// coefficients closes the flow.
struct LqCoefficientOde {
  int N;
  int d;
  double c_x, sigma0;
  Eigen::MatrixXd K;  // Nd x Nd best-response coupling
  Eigen::MatrixXd E;  // d x Nd deviation row x^1 - q_x xbar_{-1}

  LqCoefficientOde(const LqSpec& spec, double sigma0_in, int n_players, int dim)
      : N(n_players), d(dim), c_x(spec.c_x), sigma0(sigma0_in) {
    const double lambda = spec.lambda;
    const double denom = 1.0 - lambda / (N - 1);
    if (denom <= 0.0 || 1.0 + lambda <= 0.0)
      throw NonLqModel("riccati: coupling outside the solvable range");
    Eigen::MatrixXd k_scalar =
        (Eigen::MatrixXd::Identity(N, N) -
         (lambda / ((N - 1) * (1.0 + lambda))) * Eigen::MatrixXd::Ones(N, N)) /
        denom;
    K = Eigen::MatrixXd::Zero(N * d, N * d);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        K.block(i * d, j * d, d, d) = k_scalar(i, j) * Eigen::MatrixXd::Identity(d, d);
    E = Eigen::MatrixXd::Zero(d, N * d);
    E.block(0, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
    for (int j = 1; j < N; ++j)
      E.block(0, j * d, d, d) = -(spec.q_x / (N - 1)) * Eigen::MatrixXd::Identity(d, d);
  }

  // Forward-time derivatives (dP/dt, dq/dt, dr/dt).
  void rhs(const Eigen::MatrixXd& P, const Eigen::VectorXd& q, double /*r*/,
           Eigen::MatrixXd& Pdot, Eigen::VectorXd& qdot, double& rdot) const {
    const int nd = N * d;
    Eigen::MatrixXd A(nd, nd);
    Eigen::VectorXd b(nd);
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < N; ++c) {
        int src = c == 0 ? i : (c == i ? 0 : c);
        A.block(i * d, c * d, d, d) = P.block(0, src * d, d, d);
      }
      b.segment(i * d, d) = q.head(d);
    }
    Eigen::MatrixXd C = -K * A;   // actions a(x) = C x + dvec
    Eigen::VectorXd dvec = -K * b;

    Eigen::MatrixXd C1 = C.topRows(d);
    Eigen::VectorXd d1 = dvec.head(d);

    // Effective Hamiltonian of the representative player: |a^1(x)|^2/2
    // minus the state deviation penalty; transport couples the other
    // players' actions to the value gradient.
    Pdot = C1.transpose() * C1 - c_x * E.transpose() * E;
    qdot = C1.transpose() * d1;
    rdot = 0.5 * d1.squaredNorm();
    for (int j = 1; j < N; ++j) {
      Eigen::MatrixXd Cj = C.middleRows(j * d, d);
      Eigen::MatrixXd Pj = P.middleRows(j * d, d);
      Eigen::VectorXd qj = q.segment(j * d, d);
      Eigen::VectorXd dj = dvec.segment(j * d, d);
      Pdot -= Cj.transpose() * Pj + Pj.transpose() * Cj;
      qdot -= Cj.transpose() * qj + Pj.transpose() * dj;
      rdot -= dj.dot(qj);
    }
    for (int j = 0; j < N; ++j) rdot -= P.block(j * d, j * d, d, d).trace();
    if (sigma0 != 0.0) {
      double all = 0.0;
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) all += P.block(j * d, k * d, d, d).trace();
      rdot -= sigma0 * all;
    }
  }

  void rk4_step(Eigen::MatrixXd& P, Eigen::VectorXd& q, double& r, double step) const {
    Eigen::MatrixXd k1p, k2p, k3p, k4p;
    Eigen::VectorXd k1q, k2q, k3q, k4q;
    double k1r = 0, k2r = 0, k3r = 0, k4r = 0;
    rhs(P, q, r, k1p, k1q, k1r);
    rhs(P + 0.5 * step * k1p, q + 0.5 * step * k1q, r + 0.5 * step * k1r, k2p, k2q, k2r);
    rhs(P + 0.5 * step * k2p, q + 0.5 * step * k2q, r + 0.5 * step * k2r, k3p, k3q, k3r);
    rhs(P + step * k3p, q + step * k3q, r + step * k3r, k4p, k4q, k4r);
    P += (step / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    q += (step / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    r += (step / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  }
};

Eigen::VectorXd flatten_players(const PlayerVector& x) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Eigen::VectorXd out(n * d);
  for (int i = 0; i < n; ++i) out.segment(i * d, d) = x.row(i).transpose();
  return out;
}

}  // namespace

void RiccatiSolution::coeffs_at(double t, Eigen::MatrixXd& Pt, Eigen::VectorXd& qt,
                                double& rt) const {
  if (t < -1e-12 || t > horizon + 1e-12)
    throw OutOfDomain("riccati: time outside the horizon");
  int k = std::min(static_cast<int>(t / dt), static_cast<int>(P.size()) - 1);
  Pt = P[static_cast<std::size_t>(k)];
  qt = q[static_cast<std::size_t>(k)];
  rt = r[static_cast<std::size_t>(k)];
  double delta = t - k * dt;
  if (std::abs(delta) < 1e-14) return;
  // One local RK4 substep from the nearest stored node; no interpolation.
  LqCoefficientOde ode(spec, sigma0, players, dim);
  ode.rk4_step(Pt, qt, rt, delta);
}

double RiccatiSolution::value(double t, const PlayerVector& x) const {
  Eigen::MatrixXd Pt;
  Eigen::VectorXd qt;
  double rt;
  coeffs_at(t, Pt, qt, rt);
  Eigen::VectorXd xv = flatten_players(x);
  return 0.5 * xv.dot(Pt * xv) + qt.dot(xv) + rt;
}

Vec RiccatiSolution::gradient_block(double t, const PlayerVector& x, int j) const {
  Eigen::MatrixXd Pt;
  Eigen::VectorXd qt;
  double rt;
  coeffs_at(t, Pt, qt, rt);
  Eigen::VectorXd grad = Pt * flatten_players(x) + qt;
  return grad.segment(j * dim, dim);
}

Mat RiccatiSolution::hessian_block(double t, int j, int k) const {
  Eigen::MatrixXd Pt;
  Eigen::VectorXd qt;
  double rt;
  coeffs_at(t, Pt, qt, rt);
  return Pt.block(j * dim, k * dim, dim, dim);
}

double RiccatiSolution::time_derivative(double t, const PlayerVector& x) const {
  Eigen::MatrixXd Pt;
  Eigen::VectorXd qt;
  double rt;
  coeffs_at(t, Pt, qt, rt);
  LqCoefficientOde ode(spec, sigma0, players, dim);
  Eigen::MatrixXd Pdot;
  Eigen::VectorXd qdot;
  double rdot;
  ode.rhs(Pt, qt, rt, Pdot, qdot, rdot);
  Eigen::VectorXd xv = flatten_players(x);
  return 0.5 * xv.dot(Pdot * xv) + qdot.dot(xv) + rdot;
}

RiccatiSolution solve_nash_riccati(const Model& model, int n_players, double dt) {
  const LqSpec* spec = lq_spec_of(model);
  if (spec == nullptr)
    throw NonLqModel("solve_nash_riccati: only the plain lq family closes over quadratics");
  if (n_players < 2) throw Error("solve_nash_riccati: N >= 2");

  const int d = model.dim();
  const int nd = n_players * d;
  LqCoefficientOde ode(*spec, model.sigma0(), n_players, d);

  RiccatiSolution sol;
  sol.players = n_players;
  sol.dim = d;
  sol.horizon = model.horizon();
  sol.spec = *spec;
  sol.sigma0 = model.sigma0();
  int steps = std::max(1, static_cast<int>(std::ceil(sol.horizon / dt)));
  sol.dt = sol.horizon / steps;
  sol.P.assign(static_cast<std::size_t>(steps) + 1, Eigen::MatrixXd::Zero(nd, nd));
  sol.q.assign(static_cast<std::size_t>(steps) + 1, Eigen::VectorXd::Zero(nd));
  sol.r.assign(static_cast<std::size_t>(steps) + 1, 0.0);

  // Terminal data: P(T) is the exact Hessian of the terminal cost.
  Eigen::MatrixXd Eg = Eigen::MatrixXd::Zero(d, nd);
  Eg.block(0, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
  for (int j = 1; j < n_players; ++j)
    Eg.block(0, j * d, d, d) =
        -(spec->q_g / (n_players - 1)) * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd P = spec->c_g * Eg.transpose() * Eg;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nd);
  double r = 0.0;

  sol.P[static_cast<std::size_t>(steps)] = P;
  sol.q[static_cast<std::size_t>(steps)] = q;
  sol.r[static_cast<std::size_t>(steps)] = r;
  for (int k = steps; k > 0; --k) {
    ode.rk4_step(P, q, r, -sol.dt);
    sol.P[static_cast<std::size_t>(k - 1)] = P;
    sol.q[static_cast<std::size_t>(k - 1)] = q;
    sol.r[static_cast<std::size_t>(k - 1)] = r;
  }
  return sol;
}

}  // namespace mfgc
