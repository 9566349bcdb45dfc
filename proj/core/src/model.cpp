#include "mfgc/model.hpp"

#include "mfgc/errors.hpp"

#include <cmath>

namespace mfgc {

namespace {

constexpr double kInnerTol = 1e-12;
constexpr int kInnerMaxIter = 100;

}  // namespace

// Inner maximization of a |-> -a.p - L(x,a,mu). Strict convexity of L in a
// makes the problem concave; Newton on the stationarity condition
// D_a L(x,a,mu) = -p with a backtracked step is globally convergent here.
Vec Model::argmax_action(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  Vec a = -p;
  Vec grad = d_a_lagrangian(x, a, mu) + p;
  double res = grad.norm();
  for (int iter = 0; iter < kInnerMaxIter; ++iter) {
    if (res < kInnerTol) return a;
    Mat hess = d_aa_lagrangian(x, a, mu);
    Vec step = hess.ldlt().solve(grad);
    double scale = iter == 0 ? 0.5 : 1.0;  // damped first step
    for (int bt = 0; bt < 30; ++bt) {
      Vec trial = a - scale * step;
      Vec trial_grad = d_a_lagrangian(x, trial, mu) + p;
      double trial_res = trial_grad.norm();
      if (trial_res < res || trial_res < kInnerTol) {
        a = trial;
        grad = trial_grad;
        res = trial_res;
        break;
      }
      scale *= 0.5;
      if (bt == 29) throw InnerMaxDiverged("inner Hamiltonian maximization stalled");
    }
  }
  if (res >= kInnerTol)
    throw InnerMaxDiverged("inner Hamiltonian maximization did not converge");
  return a;
}

double Model::hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  Vec a = argmax_action(x, p, mu);
  return -a.dot(p) - lagrangian(x, a, mu);
}

Vec Model::d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  return -argmax_action(x, p, mu);
}

Vec Model::d_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  return -d_x_lagrangian(x, argmax_action(x, p, mu), mu);
}

Mat Model::d_pp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  Mat hess = d_aa_lagrangian(x, argmax_action(x, p, mu), mu);
  return hess.inverse();
}

Mat Model::d_xp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const {
  Vec a = argmax_action(x, p, mu);
  Mat hess_inv = d_aa_lagrangian(x, a, mu).inverse();
  return hess_inv * d_xa_lagrangian(x, a, mu);
}

Vec Model::dmu_a_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                             const Vec& xp, const Vec& ap) const {
  return -dmu_a_lagrangian(x, argmax_action(x, p, mu), mu, xp, ap);
}

Vec Model::dmu_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                             const Vec& xp, const Vec& ap) const {
  return -dmu_x_lagrangian(x, argmax_action(x, p, mu), mu, xp, ap);
}

Mat Model::dmu_a_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                 const Vec& xp, const Vec& ap) const {
  Vec a = argmax_action(x, p, mu);
  Mat hess_inv = d_aa_lagrangian(x, a, mu).inverse();
  return hess_inv * dmu_a_d_a_lagrangian(x, a, mu, xp, ap);
}

Mat Model::dmu_x_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                 const Vec& xp, const Vec& ap) const {
  Vec a = argmax_action(x, p, mu);
  Mat hess_inv = d_aa_lagrangian(x, a, mu).inverse();
  return hess_inv * dmu_x_d_a_lagrangian(x, a, mu, xp, ap);
}

}  // namespace mfgc
