#pragma once

#include "mfgc/model.hpp"

namespace mfgc {

// Linear-quadratic family:
//   L(x,a,mu) = |a|^2/2 + lambda a.abar(mu) + c_x |x - q_x xbar(mu)|^2 / 2
//   G(x,m)    = c_g |x - q_g xbar(m)|^2 / 2
// with abar/xbar the cloud means. |lambda| < 1 keeps the coupled
// best-response system monotone; the monotonicity module verifies the
// margin rather than assuming it.
struct LqSpec {
  double lambda = 0.0;
  double c_x = 0.0;
  double q_x = 0.0;
  double c_g = 0.0;
  double q_g = 0.0;
};

// Closed-form Hamiltonian block; argmax a*(x,p,mu) = -(p + lambda abar(mu)).
ModelPtr lq_model(const LqSpec& spec, double sigma0, double horizon, int dim = 1);

// Smooth non-separable perturbation L += eps sum_c tanh(a_c) abar_c(mu).
// The Hamiltonian block is derived through the inner Newton maximization.
// Requires 1 - |lambda| - |eps| > 0.
ModelPtr nonlinear_model(double eps, const LqSpec& base, double sigma0, double horizon,
                         int dim = 1);

// Family lookup used by the experiment config ("lq" or "lq-tanh").
ModelPtr make_model(const std::string& family, const LqSpec& spec, double eps,
                    double sigma0, double horizon, int dim = 1);

// Defining spec when the model is the plain "lq" family (the closed-form
// oracles only apply there); nullptr otherwise.
const LqSpec* lq_spec_of(const Model& model);

}  // namespace mfgc
