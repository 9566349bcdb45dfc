#include "mfgc/lq.hpp"

#include "mfgc/errors.hpp"

#include <cmath>

namespace mfgc {

namespace {

class LqModel : public Model {
 public:
  LqModel(const LqSpec& spec, double sigma0, double horizon, int dim, std::string family)
      : Model(dim, sigma0, horizon, std::move(family)), spec_(spec) {
    if (!std::isfinite(spec.lambda) || !std::isfinite(spec.c_x) ||
        !std::isfinite(spec.q_x) || !std::isfinite(spec.c_g) || !std::isfinite(spec.q_g))
      throw Error("lq_model: non-finite spec");
    constants_.lagrangian_action = 1.0 - std::abs(spec.lambda);
    constants_.lagrangian_state =
        std::max(0.0, -spec.c_x * (1.0 - std::max(spec.q_x, 0.0)));
    constants_.terminal = std::max(0.0, spec.c_g * (std::max(spec.q_g, 0.0) - 1.0));
    constants_.convexity_floor = 1.0;
    constants_.growth =
        4.0 * (1.0 + std::abs(spec.lambda) + spec.c_x * (1.0 + spec.q_x * spec.q_x) +
               spec.c_g * (1.0 + spec.q_g * spec.q_g));
  }

  bool analytic_hamiltonian() const override { return true; }
  const LqSpec& spec() const { return spec_; }

  // --- Lagrangian --------------------------------------------------------
  double lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const override {
    Vec dev = x - spec_.q_x * mu.mean_x();
    return 0.5 * a.squaredNorm() + spec_.lambda * a.dot(mu.mean_a()) +
           0.5 * spec_.c_x * dev.squaredNorm();
  }

  Vec d_a_lagrangian(const Vec&, const Vec& a, const StateActionCloud& mu) const override {
    return a + spec_.lambda * mu.mean_a();
  }

  Vec d_x_lagrangian(const Vec& x, const Vec&, const StateActionCloud& mu) const override {
    return spec_.c_x * (x - spec_.q_x * mu.mean_x());
  }

  Mat d_aa_lagrangian(const Vec&, const Vec&, const StateActionCloud&) const override {
    return Mat::Identity(dim(), dim());
  }

  Mat d_xa_lagrangian(const Vec&, const Vec&, const StateActionCloud&) const override {
    return Mat::Zero(dim(), dim());
  }

  Mat d_xx_lagrangian(const Vec&, const Vec&, const StateActionCloud&) const override {
    return spec_.c_x * Mat::Identity(dim(), dim());
  }

  Vec dmu_a_lagrangian(const Vec&, const Vec& a, const StateActionCloud&, const Vec&,
                       const Vec&) const override {
    return spec_.lambda * a;
  }

  Vec dmu_x_lagrangian(const Vec& x, const Vec&, const StateActionCloud& mu, const Vec&,
                       const Vec&) const override {
    return -spec_.q_x * spec_.c_x * (x - spec_.q_x * mu.mean_x());
  }

  Mat dmu_a_d_a_lagrangian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                           const Vec&) const override {
    return spec_.lambda * Mat::Identity(dim(), dim());
  }

  Mat dmu_x_d_a_lagrangian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                           const Vec&) const override {
    return Mat::Zero(dim(), dim());
  }

  Mat dmu_a_d_x_lagrangian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                           const Vec&) const override {
    return Mat::Zero(dim(), dim());
  }

  Mat dmu_x_d_x_lagrangian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                           const Vec&) const override {
    return -spec_.q_x * spec_.c_x * Mat::Identity(dim(), dim());
  }

  // --- Hamiltonian (closed forms) ----------------------------------------
  Vec argmax_action(const Vec&, const Vec& p, const StateActionCloud& mu) const override {
    return -(p + spec_.lambda * mu.mean_a());
  }

  double hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    Vec s = p + spec_.lambda * mu.mean_a();
    Vec dev = x - spec_.q_x * mu.mean_x();
    return 0.5 * s.squaredNorm() - 0.5 * spec_.c_x * dev.squaredNorm();
  }

  Vec d_p_hamiltonian(const Vec&, const Vec& p, const StateActionCloud& mu) const override {
    return p + spec_.lambda * mu.mean_a();
  }

  Vec d_x_hamiltonian(const Vec& x, const Vec&, const StateActionCloud& mu) const override {
    return -spec_.c_x * (x - spec_.q_x * mu.mean_x());
  }

  Mat d_pp_hamiltonian(const Vec&, const Vec&, const StateActionCloud&) const override {
    return Mat::Identity(dim(), dim());
  }

  Mat d_xp_hamiltonian(const Vec&, const Vec&, const StateActionCloud&) const override {
    return Mat::Zero(dim(), dim());
  }

  Vec dmu_a_hamiltonian(const Vec&, const Vec& p, const StateActionCloud& mu, const Vec&,
                        const Vec&) const override {
    return spec_.lambda * (p + spec_.lambda * mu.mean_a());
  }

  Vec dmu_x_hamiltonian(const Vec& x, const Vec&, const StateActionCloud& mu, const Vec&,
                        const Vec&) const override {
    return spec_.q_x * spec_.c_x * (x - spec_.q_x * mu.mean_x());
  }

  Mat dmu_a_d_p_hamiltonian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                            const Vec&) const override {
    return spec_.lambda * Mat::Identity(dim(), dim());
  }

  Mat dmu_x_d_p_hamiltonian(const Vec&, const Vec&, const StateActionCloud&, const Vec&,
                            const Vec&) const override {
    return Mat::Zero(dim(), dim());
  }

  // --- Terminal -----------------------------------------------------------
  double terminal(const Vec& x, const StateCloud& m) const override {
    Vec dev = x - spec_.q_g * m.mean();
    return 0.5 * spec_.c_g * dev.squaredNorm();
  }

  Vec d_x_terminal(const Vec& x, const StateCloud& m) const override {
    return spec_.c_g * (x - spec_.q_g * m.mean());
  }

  Mat d_xx_terminal(const Vec&, const StateCloud&) const override {
    return spec_.c_g * Mat::Identity(dim(), dim());
  }

  Mat dm_d_x_terminal(const Vec&, const StateCloud&, const Vec&) const override {
    return -spec_.c_g * spec_.q_g * Mat::Identity(dim(), dim());
  }

 private:
  LqSpec spec_;
};

// lq plus the bounded non-separable coupling eps tanh(a).abar(mu). The
// Hamiltonian block stays on the Model base (inner Newton).
class TanhModel : public LqModel {
 public:
  TanhModel(double eps, const LqSpec& spec, double sigma0, double horizon, int dim)
      : LqModel(spec, sigma0, horizon, dim, "lq-tanh"), eps_(eps) {
    if (1.0 - std::abs(spec.lambda) - std::abs(eps) <= 0.0)
      throw Error("nonlinear_model: 1 - |lambda| - |eps| must stay positive");
    constants_.lagrangian_action =
        std::max(0.0, 1.0 - std::abs(spec.lambda) - 2.0 * std::abs(eps));
    constants_.convexity_floor = std::max(0.0, 1.0 - std::abs(eps));
  }

  bool analytic_hamiltonian() const override { return false; }

  double lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const override {
    Vec abar = mu.mean_a();
    double extra = 0.0;
    for (int c = 0; c < dim(); ++c) extra += std::tanh(a(c)) * abar(c);
    return LqModel::lagrangian(x, a, mu) + eps_ * extra;
  }

  Vec d_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const override {
    Vec out = LqModel::d_a_lagrangian(x, a, mu);
    Vec abar = mu.mean_a();
    for (int c = 0; c < dim(); ++c) {
      double t = std::tanh(a(c));
      out(c) += eps_ * (1.0 - t * t) * abar(c);
    }
    return out;
  }

  Mat d_aa_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu) const override {
    Mat out = LqModel::d_aa_lagrangian(x, a, mu);
    Vec abar = mu.mean_a();
    for (int c = 0; c < dim(); ++c) {
      double t = std::tanh(a(c));
      out(c, c) += eps_ * (-2.0 * t * (1.0 - t * t)) * abar(c);
    }
    return out;
  }

  Vec dmu_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                       const Vec& xp, const Vec& ap) const override {
    Vec out = LqModel::dmu_a_lagrangian(x, a, mu, xp, ap);
    for (int c = 0; c < dim(); ++c) out(c) += eps_ * std::tanh(a(c));
    return out;
  }

  Mat dmu_a_d_a_lagrangian(const Vec& x, const Vec& a, const StateActionCloud& mu,
                           const Vec& xp, const Vec& ap) const override {
    Mat out = LqModel::dmu_a_d_a_lagrangian(x, a, mu, xp, ap);
    for (int c = 0; c < dim(); ++c) {
      double t = std::tanh(a(c));
      out(c, c) += eps_ * (1.0 - t * t);
    }
    return out;
  }

  // Hamiltonian block intentionally not overridden: derived via inner Newton.
  Vec argmax_action(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::argmax_action(x, p, mu);
  }
  double hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::hamiltonian(x, p, mu);
  }
  Vec d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::d_p_hamiltonian(x, p, mu);
  }
  Vec d_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::d_x_hamiltonian(x, p, mu);
  }
  Mat d_pp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::d_pp_hamiltonian(x, p, mu);
  }
  Mat d_xp_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu) const override {
    return Model::d_xp_hamiltonian(x, p, mu);
  }
  Vec dmu_a_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                        const Vec& xp, const Vec& ap) const override {
    return Model::dmu_a_hamiltonian(x, p, mu, xp, ap);
  }
  Vec dmu_x_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                        const Vec& xp, const Vec& ap) const override {
    return Model::dmu_x_hamiltonian(x, p, mu, xp, ap);
  }
  Mat dmu_a_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                            const Vec& xp, const Vec& ap) const override {
    return Model::dmu_a_d_p_hamiltonian(x, p, mu, xp, ap);
  }
  Mat dmu_x_d_p_hamiltonian(const Vec& x, const Vec& p, const StateActionCloud& mu,
                            const Vec& xp, const Vec& ap) const override {
    return Model::dmu_x_d_p_hamiltonian(x, p, mu, xp, ap);
  }

 private:
  double eps_;
};

}  // namespace

ModelPtr lq_model(const LqSpec& spec, double sigma0, double horizon, int dim) {
  return std::make_shared<LqModel>(spec, sigma0, horizon, dim, "lq");
}

ModelPtr nonlinear_model(double eps, const LqSpec& base, double sigma0, double horizon,
                         int dim) {
  return std::make_shared<TanhModel>(eps, base, sigma0, horizon, dim);
}

ModelPtr make_model(const std::string& family, const LqSpec& spec, double eps,
                    double sigma0, double horizon, int dim) {
  if (family == "lq") return lq_model(spec, sigma0, horizon, dim);
  if (family == "lq-tanh") return nonlinear_model(eps, spec, sigma0, horizon, dim);
  throw ConfigError("unknown model family: " + family);
}

const LqSpec* lq_spec_of(const Model& model) {
  if (model.family() != "lq") return nullptr;
  const auto* lq = dynamic_cast<const LqModel*>(&model);
  return lq == nullptr ? nullptr : &lq->spec();
}

}  // namespace mfgc
