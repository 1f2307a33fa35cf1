#pragma once

#include "cgnn/common.hpp"

namespace cgnn {

// Parameters of the residual precision model Gamma = beta (I - sum_i alpha_i S^(i)).
// The exclusion margin eta keeps |alpha_i| <= 1 - eta so the model stays
// positive definite with a topology-independent condition bound.
struct CorrelationParams {
  Vector alphas;       // one entry per edge type
  double beta = 1.0;
  double eta = 1e-3;

  CorrelationParams() = default;
  CorrelationParams(Vector alphas_, double beta_, double eta_ = 1e-3)
      : alphas(std::move(alphas_)), beta(beta_), eta(eta_) {
    validate();
  }
  static CorrelationParams single(double alpha, double beta, double eta = 1e-3) {
    Vector a(1);
    a[0] = alpha;
    return CorrelationParams(std::move(a), beta, eta);
  }

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("params: beta must be positive");
    if (!(eta > 0.0)) throw std::invalid_argument("params: eta must be positive");
    for (Index i = 0; i < alphas.size(); ++i)
      if (!(std::abs(alphas[i]) <= 1.0 - eta))
        throw std::invalid_argument("params: |alpha| exceeds 1 - eta");
  }

  double max_abs_alpha() const {
    double a = 0.0;
    for (Index i = 0; i < alphas.size(); ++i) a = std::max(a, std::abs(alphas[i]));
    return a;
  }
};

// Unconstrained parametrization used by the training loop:
//   alpha_i = (1 - eta) * tanh(raw[i]),  beta = exp(raw[last]).
// Returns the parameters together with the local derivatives needed to chain
// gradients back to the raw coordinates.
struct Reparametrization {
  CorrelationParams params;
  Vector dalpha_draw;  // dalpha_i / draw_i
  double dbeta_draw;   // dbeta / draw_last
};

inline Reparametrization reparametrize(const Vector& raw, double eta = 1e-3) {
  if (raw.size() < 2) throw std::invalid_argument("reparametrize: need at least [raw_a, raw_b]");
  const Index k = raw.size() - 1;
  Reparametrization out;
  out.params.alphas.resize(k);
  out.dalpha_draw.resize(k);
  out.params.eta = eta;
  for (Index i = 0; i < k; ++i) {
    const double t = std::tanh(raw[i]);
    out.params.alphas[i] = (1.0 - eta) * t;
    out.dalpha_draw[i] = (1.0 - eta) * (1.0 - t * t);
  }
  out.params.beta = std::exp(raw[k]);
  out.dbeta_draw = out.params.beta;
  return out;
}

// Inverse of reparametrize on the valid open region (|alpha| < 1 - eta).
inline Vector to_raw(const CorrelationParams& params) {
  Vector raw(params.alphas.size() + 1);
  for (Index i = 0; i < params.alphas.size(); ++i)
    raw[i] = std::atanh(params.alphas[i] / (1.0 - params.eta));
  raw[params.alphas.size()] = std::log(params.beta);
  return raw;
}

}  // namespace cgnn
