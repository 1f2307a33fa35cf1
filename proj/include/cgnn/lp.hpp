#pragma once

#include "cgnn/regressors.hpp"
#include "cgnn/linalg.hpp"

namespace cgnn {

// Normalized Laplacian L = I - S as a matrix-free operator.
struct LaplacianOperator {
  const NormalizedAdjacency* s;

  Index rows() const { return s->rows(); }
  Vector apply(const Vector& v) const { return v - s->apply(v); }
};

struct LpConfig {
  double tolerance = 1e-8;
  int max_iters = 0;  // 0: 2 * dim + 100
};

struct LpResult {
  Vector values;  // indexed like partition.unlabeled
  CgResult cg;
};

// Harmonic interpolation of targets through the normalized Laplacian:
// solves L_UU z_U = -L_UL z_L by CG from zero. On a singular consistent
// system (components of U disconnected from L) CG returns the minimal-norm
// solution, which leaves those components at exactly zero.
inline LpResult label_propagation(const NormalizedAdjacency& s, const Vector& z_l,
                                  const VertexPartition& partition, const LpConfig& cfg = {}) {
  if (z_l.size() != static_cast<Index>(partition.labeled.size()))
    throw std::invalid_argument("label_propagation: z_L size mismatch");
  LpResult out;
  const Index dim = static_cast<Index>(partition.unlabeled.size());
  if (dim == 0) {
    out.values = Vector(0);
    return out;
  }
  // rhs = -L_UL z_L = S_UL z_L (the identity part of L vanishes off-diagonal).
  const Vector rhs = s.apply_block(partition.unlabeled, partition.labeled, z_l);
  const LaplacianOperator lap{&s};
  const PrincipalBlock<LaplacianOperator> lap_uu{&lap, &partition.unlabeled};
  EstimatorConfig cg_cfg;
  cg_cfg.cg_tolerance = cfg.tolerance;
  cg_cfg.cg_max_iters = cfg.max_iters > 0 ? cfg.max_iters : static_cast<int>(2 * dim + 100);
  out.cg = conjugate_gradient(lap_uu, rhs, Vector::Zero(dim), cg_cfg);
  out.values = out.cg.x;
  return out;
}

// Base regressor plus label-propagated residuals:
//   y_U = yhat_U + LabelPropagation(S, y_L - yhat_L).
inline Vector lp_gnn_predict(const RegressorSpec& spec, const ParameterSet& params,
                             const AttributedGraph& graph, const VertexPartition& partition,
                             const Vector& labels_l, const LpConfig& cfg = {}) {
  IndexList all;
  all.reserve(static_cast<std::size_t>(graph.vertex_count()));
  for (Index i = 0; i < graph.vertex_count(); ++i) all.push_back(i);
  const auto fwd = forward(spec, params, graph, all);
  const Vector residual_l = labels_l - gather(fwd.cache.predictions_all, partition.labeled);
  const NormalizedAdjacency s = normalized_adjacency(graph);
  const LpResult lp = label_propagation(s, residual_l, partition, cfg);
  return gather(fwd.cache.predictions_all, partition.unlabeled) + lp.values;
}

}  // namespace cgnn
