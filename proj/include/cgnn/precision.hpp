#pragma once

#include "cgnn/graph.hpp"
#include "cgnn/linalg.hpp"

#include <memory>

namespace cgnn {

// Which parameter a derivative block refers to.
struct DerivAlpha {
  Index type = 0;
};
struct DerivBeta {};

// Matrix-free residual precision Gamma = beta (I - sum_i alpha_i S^(i)).
// Symmetric positive definite whenever the parameter invariants hold; every
// apply costs O(m). Holds one normalized adjacency per edge type (all sharing
// the total-degree normalization).
class PrecisionOperator {
 public:
  using SharedOps = std::shared_ptr<const std::vector<NormalizedAdjacency>>;

  PrecisionOperator(CorrelationParams params, SharedOps s_ops)
      : params_(std::move(params)), s_ops_(std::move(s_ops)) {
    params_.validate();
    if (!s_ops_ || s_ops_->empty())
      throw std::invalid_argument("precision: no adjacency operators");
    if (params_.alphas.size() != static_cast<Index>(s_ops_->size()))
      throw std::invalid_argument("precision: one alpha per edge type required");
    n_ = s_ops_->front().rows();
    for (const auto& s : *s_ops_)
      if (s.rows() != n_) throw std::invalid_argument("precision: operator dims differ");
  }

  PrecisionOperator(CorrelationParams params, std::vector<NormalizedAdjacency> s_ops)
      : PrecisionOperator(std::move(params),
                          std::make_shared<const std::vector<NormalizedAdjacency>>(
                              std::move(s_ops))) {}

  PrecisionOperator(const CorrelationParams& params, const AttributedGraph& graph)
      : PrecisionOperator(params, typed_normalized_adjacency(graph)) {}

  Index rows() const { return n_; }
  const CorrelationParams& params() const { return params_; }
  const std::vector<NormalizedAdjacency>& adjacency_ops() const { return *s_ops_; }
  SharedOps shared_ops() const { return s_ops_; }

  // Gamma v = beta (v - sum_i alpha_i S^(i) v).
  Vector apply(const Vector& v) const {
    Vector acc = v;
    for (std::size_t i = 0; i < s_ops_->size(); ++i) {
      const double a = params_.alphas[static_cast<Index>(i)];
      if (a != 0.0) acc -= a * (*s_ops_)[i].apply(v);
    }
    return params_.beta * acc;
  }

  // Gamma_PQ v for arbitrary sorted index sets; the identity contributes only
  // on indices shared between P and Q.
  Vector apply_block(const IndexList& p, const IndexList& q, const Vector& v) const {
    Vector acc = Vector::Zero(static_cast<Index>(p.size()));
    add_shared_identity(p, q, v, acc);
    for (std::size_t i = 0; i < s_ops_->size(); ++i) {
      const double a = params_.alphas[static_cast<Index>(i)];
      if (a != 0.0) acc -= a * (*s_ops_)[i].apply_block(p, q, v);
    }
    return params_.beta * acc;
  }

  // dGamma_PQ/dalpha_i v = -beta S^(i)_PQ v;  dGamma_PQ/dbeta v = Gamma_PQ v / beta.
  Vector apply_derivative_block(DerivAlpha which, const IndexList& p, const IndexList& q,
                                const Vector& v) const {
    if (which.type < 0 || which.type >= static_cast<Index>(s_ops_->size()))
      throw std::invalid_argument("precision: derivative type out of range");
    return -params_.beta * (*s_ops_)[static_cast<std::size_t>(which.type)].apply_block(p, q, v);
  }

  Vector apply_derivative_block(DerivBeta, const IndexList& p, const IndexList& q,
                                const Vector& v) const {
    return apply_block(p, q, v) / params_.beta;
  }

  PrecisionOperator with_params(CorrelationParams params) const {
    return PrecisionOperator(std::move(params), s_ops_);
  }

 private:
  static void add_shared_identity(const IndexList& p, const IndexList& q, const Vector& v,
                                  Vector& acc) {
    std::size_t i = 0, j = 0;
    while (i < p.size() && j < q.size()) {
      if (p[i] < q[j]) {
        ++i;
      } else if (q[j] < p[i]) {
        ++j;
      } else {
        acc[static_cast<Index>(i)] += v[static_cast<Index>(j)];
        ++i;
        ++j;
      }
    }
  }

  CorrelationParams params_;
  SharedOps s_ops_;
  Index n_;
};

// Gamma_UU as an operator on vectors indexed by the unlabeled set.
struct PrecisionUnlabeledBlock {
  const PrecisionOperator* op;
  const VertexPartition* partition;

  Index rows() const { return static_cast<Index>(partition->unlabeled.size()); }
  Vector apply(const Vector& v) const {
    return op->apply_block(partition->unlabeled, partition->unlabeled, v);
  }
};

struct MarginalApplyResult {
  Vector value;       // Gammabar_LL v
  CgResult cg;        // solve on Gamma_UU
};

// Marginal (Schur-complement) precision applied to a labeled-block vector:
//   Gammabar_LL v = Gamma_LL v - Gamma_LU x,  Gamma_UU x = Gamma_UL v (by CG).
inline MarginalApplyResult apply_marginal_precision(const PrecisionOperator& op,
                                                    const VertexPartition& partition,
                                                    const Vector& v_l,
                                                    const EstimatorConfig& cfg) {
  MarginalApplyResult out;
  const IndexList& l = partition.labeled;
  const IndexList& u = partition.unlabeled;
  out.value = op.apply_block(l, l, v_l);
  if (u.empty()) return out;
  const Vector rhs = op.apply_block(u, l, v_l);
  const PrecisionUnlabeledBlock uu{&op, &partition};
  out.cg = conjugate_gradient(uu, rhs, Vector::Zero(uu.rows()), cfg);
  out.value -= op.apply_block(l, u, out.cg.x);
  return out;
}

}  // namespace cgnn
