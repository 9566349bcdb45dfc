#pragma once

#include "mfgc/cloud.hpp"
#include "mfgc/types.hpp"

#include <memory>
#include <optional>
#include <string>

namespace mfgc {

// Structural constants declared by a model family when known analytically.
// The monotonicity module audits them and can fit missing ones.
struct ModelConstants {
  std::optional<double> lagrangian_action;  // C_{L,a} > 0
  std::optional<double> lagrangian_state;   // C_{L,x} >= 0
  std::optional<double> terminal;           // C_G >= 0
  double convexity_floor = 0.0;             // declared lower bound for D_aa L
  double growth = 0.0;                      // coercivity constant
};

// Model-data plugin: running cost L, Hamiltonian H, terminal cost G, and
// every derivative the solvers consume. Measure arguments are empirical
// clouds; measure derivatives are the intrinsic ones evaluated at a
// perturbing particle (x', a'), normalized so that for an n-atom cloud the
// particle derivative of a statistic equals (1/n) times the evaluator.
//
// All evaluators are pure and re-entrant.
class Model {
 public:
  virtual ~Model() = default;

  int dim() const { return dim_; }
  double sigma0() const { return sigma0_; }
  double horizon() const { return horizon_; }
  const std::string& family() const { return family_; }
  // True when the Hamiltonian block is closed-form; false when it runs the
  // inner maximization over controls.
  virtual bool analytic_hamiltonian() const { return false; }
  const ModelConstants& constants() const { return constants_; }

  // --- Lagrangian block -------------------------------------------------
  virtual double lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;
  virtual Vec d_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;
  virtual Vec d_x_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;
  virtual Mat d_aa_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;
  // Jacobian of D_a L with respect to x (rows: a-component, cols: x-component).
  virtual Mat d_xa_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;
  virtual Mat d_xx_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const = 0;

  virtual Vec dmu_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                               const Vec& xp, const Vec& ap) const = 0;
  virtual Vec dmu_x_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                               const Vec& xp, const Vec& ap) const = 0;
  // Rows: component of D_a L, cols: component of the perturbing particle.
  virtual Mat dmu_a_d_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                                   const Vec& xp, const Vec& ap) const = 0;
  virtual Mat dmu_x_d_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                                   const Vec& xp, const Vec& ap) const = 0;
  virtual Mat dmu_a_d_x_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                                   const Vec& xp, const Vec& ap) const = 0;
  virtual Mat dmu_x_d_x_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                                   const Vec& xp, const Vec& ap) const = 0;

  // --- Hamiltonian block: H(x,p,mu) = sup_a { -a.p - L(x,a,mu) } ---------
  // Defaults run an inner Newton maximization (tolerance 1e-12) with the
  // analytic D_aa L; closed-form families override the whole block.
  virtual Vec argmax_action(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual double hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual Vec d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual Vec d_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual Mat d_pp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual Mat d_xp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const;
  virtual Vec dmu_a_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                const Vec& xp, const Vec& ap) const;
  virtual Vec dmu_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                const Vec& xp, const Vec& ap) const;
  virtual Mat dmu_a_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                    const Vec& xp, const Vec& ap) const;
  virtual Mat dmu_x_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                                    const Vec& xp, const Vec& ap) const;

  // --- Terminal block -----------------------------------------------------
  virtual double terminal(const Vec& x, const StateCloud& m) const = 0;
  virtual Vec d_x_terminal(const Vec& x, const StateCloud& m) const = 0;
  virtual Mat d_xx_terminal(const Vec& x, const StateCloud& m) const = 0;
  virtual Mat dm_d_x_terminal(const Vec& x, const StateCloud& m, const Vec& xp) const = 0;

 protected:
  Model(int dim, double sigma0, double horizon, std::string family)
      : dim_(dim), sigma0_(sigma0), horizon_(horizon), family_(std::move(family)) {}

  ModelConstants constants_;

 private:
  int dim_;
  double sigma0_;
  double horizon_;
  std::string family_;
};

using ModelPtr = std::shared_ptr<const Model>;

}  // namespace mfgc
