#pragma once

#include "mfgc/model.hpp"
#include "mfgc/types.hpp"

#include <vector>

namespace mfgc {

enum class SolveMethod { kAuto, kPicard, kNewton };

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  double damping = 0.5;               // Picard relaxation
  SolveMethod method = SolveMethod::kAuto;
  const PlayerVector* warm_start = nullptr;
};

// Solved joint best-response profile. `residual` is the max over players of
// |a^i + D_p H(x^i, p^i, m^{N,-i}_{x,a})|.
struct FixedPointResult {
  PlayerVector actions;
  double residual = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::kPicard;  // method that finished the solve
};

// Joint best-response action profile a(x, p): for every player i,
//   a^i = -D_p H(x^i, p^i, m^{N,-i}_{x,a}),
// the leave-one-out coupling. Damped Picard with a monotone-Newton fallback
// on stall; Newton solves the linearized system whose block matrix is the
// diagonal-normalized monotone matrix.
FixedPointResult solve_action_profile(const Model& model, const PlayerVector& x,
                                      const PlayerVector& p,
                                      const FixedPointOptions& opts = {});

// Measure-level consistency map: returns the cloud with the same state
// marginal and actions a_j = -D_p H(x_j, p_j, mu) where mu is the returned
// cloud itself (full-cloud convention, no leave-one-out).
StateActionCloud solve_consistent_cloud(const Model& model, const StateActionCloud& nu,
                                        double tol = 1e-12);

enum class BlockFlavor { kDiag, kOffdiag, kFull, kDiagTilde, kOffdiagTilde, kFullTilde };

// N x N grid of d x d blocks stored densely. Diagonal flavors have zero
// off-diagonal blocks and vice versa; full = diag + offdiag.
class BlockMatrix {
 public:
  BlockMatrix(int players, int dim, BlockFlavor flavor)
      : players_(players), dim_(dim), flavor_(flavor),
        data_(Eigen::MatrixXd::Zero(players * dim, players * dim)) {}

  int players() const { return players_; }
  int dim() const { return dim_; }
  BlockFlavor flavor() const { return flavor_; }
  Eigen::MatrixXd& dense() { return data_; }
  const Eigen::MatrixXd& dense() const { return data_; }

  Eigen::Block<Eigen::MatrixXd> block(int i, int j) {
    return data_.block(i * dim_, j * dim_, dim_, dim_);
  }
  Eigen::Block<const Eigen::MatrixXd> block(int i, int j) const {
    return data_.block(i * dim_, j * dim_, dim_, dim_);
  }

  double min_symmetric_eigenvalue() const;

 private:
  int players_;
  int dim_;
  BlockFlavor flavor_;
  Eigen::MatrixXd data_;
};

// Second-derivative block matrices of the running cost at (x, a), with the
// leave-one-out measure re-evaluated per row:
//   diag  block (i,i): D_aa L(x^i, a^i, m^{N,-i})
//   off   block (i,j): D^a_mu D_a L(x^i, a^i, m^{N,-i}, x^j, a^j) / (N-1)
// and the tilde flavors with D_xa L and D^x_mu D_a L.
BlockMatrix assemble_blocks(const Model& model, const PlayerVector& x,
                            const PlayerVector& a, BlockFlavor flavor);

// Implicit Jacobians of the best-response profile at a solved point:
// D_p a = -(M)^-1 and D_x a = -(M)^-1 Mtilde. Block (i,j) of the result is
// the derivative of a^i with respect to p^j (resp. x^j). Throws SingularM
// (with the symmetric-part minimum eigenvalue) if the factorization fails.
BlockMatrix action_jacobian_p(const Model& model, const PlayerVector& x,
                              const PlayerVector& a);
BlockMatrix action_jacobian_x(const Model& model, const PlayerVector& x,
                              const PlayerVector& a);

// One probed mixed derivative of the best-response map alongside its
// predicted omega weight. Unused indices are 0 (indices are 1-based in the
// emitted tables).
struct DecayRow {
  int n_players = 0;
  int i = 0, j = 0, k = 0, l = 0;
  double omega = 0.0;
  double norm = 0.0;
};

struct DerivativeProbe {
  int i = 0, j = 0, k = 0;
  int l = -1;  // -1 for order 2
};

// Second / third derivatives of the best-response map in the costate
// directions, by central finite differences of the implicit Jacobian
// (step h). Probes are (i,j,k[,l]) player tuples.
std::vector<DecayRow> higher_derivatives(const Model& model, const PlayerVector& x,
                                         const PlayerVector& p,
                                         const std::vector<DerivativeProbe>& probes,
                                         double h = 1e-4, double tol = 1e-12,
                                         int workers = 1);

// Effective per-player Hamiltonian along the solved profile,
// H(x^i, p^i, m^{N,-i}_{x, a(x,p)}), and its costate-coupling vector
// sum_{l != i} D^a_mu H(x^i, p^i, m^{N,-i}, x^l, a^l) D_{p^k} a^l / (N-1).
double hat_hamiltonian(const Model& model, const PlayerVector& x, const PlayerVector& p,
                       int i, double tol = 1e-12);
Vec hat_hamiltonian_coupling(const Model& model, const PlayerVector& x,
                             const PlayerVector& p, int i, int k, double tol = 1e-12);

}  // namespace mfgc
