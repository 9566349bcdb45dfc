#pragma once

#include "mfgc/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace mfgc {

class MasterLift;

enum class AuditKind { kDiscreteM, kDispL, kDispG, kLlL, kLlG, kCDisp, kLlProp };

const char* audit_kind_name(AuditKind kind);

struct AuditWitness {
  int sample_id = 0;
  double value = 0.0;
  std::string description;
};

// Outcome of one structural audit. pass <=> worst_value >= threshold; the
// worst few samples are kept as witnesses. Fitted constants (when the model
// declares none, or when the audit estimates them anyway) land in `fitted`.
struct MonotonicityReport {
  AuditKind kind = AuditKind::kDiscreteM;
  int samples = 0;
  double worst_value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<AuditWitness> witnesses;           // up to 5, worst first
  std::map<std::string, double> fitted;
  std::vector<std::pair<int, double>> values;    // (sample_id, value) rows
};

struct AuditOptions {
  int samples = 100;
  int cloud_size = 16;
  std::uint64_t seed = 0;
  double scale = 1.0;  // Gaussian sampling scale
};

// Minimum eigenvalue of the symmetric part of the coupled second-derivative
// block matrix over random (x, a) samples. Positive margin = the discrete
// monotonicity condition that makes the best-response system solvable.
MonotonicityReport audit_discrete_M(const Model& model, int n_players,
                                    const AuditOptions& opts);

// Displacement form of the running cost along random equal-size coupled
// clouds. With declared constants the slack
//   LHS - C_{L,a} E|da|^2 + C_{L,x} E|dX|^2
// must stay nonnegative; without them a least-violation fit estimates the
// constants and reports the raw bilinear minimum.
MonotonicityReport audit_disp_L(const Model& model, const AuditOptions& opts);
MonotonicityReport audit_disp_G(const Model& model, const AuditOptions& opts);

enum class AuditTarget { kLagrangian, kTerminal };

// Sign audit of int int [F(.,mu) - F(.,mu')] d(mu - mu') over random cloud
// pairs.
MonotonicityReport audit_ll(const Model& model, AuditTarget which,
                            const AuditOptions& opts);

// C_disp = C_{L,a} - T C_G - T^2/2 C_{L,x} from declared constants, or from
// the supplied fitted overrides.
MonotonicityReport compute_C_disp(const Model& model,
                                  const std::map<std::string, double>* fitted = nullptr);

// Monotonicity of the lifted value function along time slices: evaluates
// int [U(t,x,m) - U(t,x,m')] d(m-m') over sampled grid-snapped cloud pairs
// at every stored slice, and tracks max |U_xx| per slice. `tolerance`
// absorbs the discretization error of the underlying field.
MonotonicityReport audit_ll_propagation(const MasterLift& lift, const AuditOptions& opts,
                                        double tolerance);

}  // namespace mfgc
