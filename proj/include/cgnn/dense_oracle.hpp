#pragma once

#include "cgnn/precision.hpp"

#include <Eigen/Cholesky>

namespace cgnn {

// Dense (factorization-based) counterparts of the stochastic estimators.
// Cubic in the vertex count; intended for verification and for the oracle
// mode of the training loop on small graphs.

inline Matrix dense_precision(const PrecisionOperator& op) {
  const Index n = op.rows();
  Matrix gamma = Matrix::Identity(n, n);
  const auto& s_ops = op.adjacency_ops();
  for (std::size_t i = 0; i < s_ops.size(); ++i)
    gamma -= op.params().alphas[static_cast<Index>(i)] * s_ops[i].dense();
  return op.params().beta * gamma;
}

inline double dense_logdet(const Matrix& spd) {
  const Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("dense_logdet: matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline Matrix principal_block(const Matrix& m, const IndexList& rows, const IndexList& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

struct DenseNllResult {
  double omega = 0.0;
  Vector dalpha;
  double dbeta = 0.0;
  Vector dyhat_l;      // dOmega / dyhat_L = -2 Gammabar_LL r_L
  double logdet_full = 0.0;
  double logdet_uu = 0.0;
  double quadratic = 0.0;
};

// Exact loss Omega = r' Gammabar_LL r - log det(Gamma) + log det(Gamma_UU)
// and its (alpha_i, beta) derivatives via dense factorizations.
inline DenseNllResult dense_marginal_nll(const PrecisionOperator& op,
                                         const VertexPartition& partition,
                                         const Vector& residual_l) {
  const IndexList& l = partition.labeled;
  const IndexList& u = partition.unlabeled;
  if (l.empty()) throw std::invalid_argument("dense_marginal_nll: empty labeled set");
  const Index n = op.rows();
  const double beta = op.params().beta;
  const auto& s_ops = op.adjacency_ops();
  const Index types = static_cast<Index>(s_ops.size());

  const Matrix gamma = dense_precision(op);
  const Matrix gamma_ll = principal_block(gamma, l, l);
  const Matrix gamma_lu = principal_block(gamma, l, u);
  const Matrix gamma_uu = principal_block(gamma, u, u);

  DenseNllResult out;
  out.dalpha = Vector::Zero(types);

  Eigen::LLT<Matrix> llt_uu;
  Vector schur_u;  // u = Gamma_UU^{-1} Gamma_UL r
  if (!u.empty()) {
    llt_uu.compute(gamma_uu);
    if (llt_uu.info() != Eigen::Success)
      throw std::domain_error("dense_marginal_nll: Gamma_UU not positive definite");
    schur_u = llt_uu.solve(gamma_lu.transpose() * residual_l);
  } else {
    schur_u = Vector(0);
  }

  const Vector gll_r = gamma_ll * residual_l;
  const Vector glu_u = u.empty() ? Vector::Zero(static_cast<Index>(l.size()))
                                 : Vector(gamma_lu * schur_u);
  out.quadratic = residual_l.dot(gll_r) - residual_l.dot(glu_u);
  out.dyhat_l = -2.0 * (gll_r - glu_u);

  out.logdet_full = dense_logdet(gamma);
  out.logdet_uu = u.empty() ? 0.0 : dense_logdet(gamma_uu);
  out.omega = out.quadratic - out.logdet_full + out.logdet_uu;

  const Eigen::LLT<Matrix> llt_full(gamma);
  for (Index t = 0; t < types; ++t) {
    const Matrix s = s_ops[static_cast<std::size_t>(t)].dense();
    const Matrix ds = -beta * s;  // dGamma/dalpha_t
    double quad = residual_l.dot(principal_block(ds, l, l) * residual_l);
    double trace_full = -llt_full.solve(beta * s).trace();
    double trace_uu = 0.0;
    if (!u.empty()) {
      quad -= 2.0 * residual_l.dot(principal_block(ds, l, u) * schur_u);
      quad += schur_u.dot(principal_block(ds, u, u) * schur_u);
      trace_uu = -llt_uu.solve(beta * principal_block(s, u, u)).trace();
    }
    out.dalpha[t] = quad - trace_full + trace_uu;
  }

  // dGamma/dbeta = Gamma / beta, so the traces are n/beta and |U|/beta.
  out.dbeta = out.quadratic / beta - static_cast<double>(n) / beta +
              static_cast<double>(u.size()) / beta;
  return out;
}

// Exact conditional mean yhat_U - Gamma_UU^{-1} Gamma_UL r_L.
inline Vector dense_conditional_mean(const PrecisionOperator& op, const VertexPartition& partition,
                                     const Vector& yhat_all, const Vector& residual_l) {
  const Matrix gamma = dense_precision(op);
  const Matrix gamma_uu = principal_block(gamma, partition.unlabeled, partition.unlabeled);
  const Matrix gamma_ul = principal_block(gamma, partition.unlabeled, partition.labeled);
  const Eigen::LLT<Matrix> llt(gamma_uu);
  return gather(yhat_all, partition.unlabeled) - llt.solve(gamma_ul * residual_l);
}

}  // namespace cgnn
