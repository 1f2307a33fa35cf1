#pragma once

#include "cgnn/common.hpp"

#include <optional>
#include <tuple>

namespace cgnn {

// One undirected edge; stored canonicalized with u < v.
struct Edge {
  Index u = 0;
  Index v = 0;
  int type = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge& a, const Edge& b) {
    return std::tie(a.u, a.v, a.type) <=> std::tie(b.u, b.v, b.type);
  }
};

// Immutable sparse undirected graph with per-vertex features and optional
// real-valued labels. Edges are canonicalized (min, max, type), sorted and
// deduplicated at construction; parallel edges are allowed across distinct
// types but rejected within a type.
class AttributedGraph {
 public:
  AttributedGraph(Index n, std::vector<Edge> edges, Matrix features,
                  std::vector<std::optional<double>> labels = {},
                  int edge_type_count = 0)
      : n_(n), edges_(std::move(edges)), features_(std::move(features)), labels_(std::move(labels)) {
    if (n_ < 0) throw std::invalid_argument("graph: negative vertex count");
    if (features_.rows() != n_)
      throw std::invalid_argument("graph: feature rows must equal vertex count");
    if (labels_.empty()) labels_.assign(static_cast<std::size_t>(n_), std::nullopt);
    if (static_cast<Index>(labels_.size()) != n_)
      throw std::invalid_argument("graph: label count must equal vertex count");

    int max_type = -1;
    for (auto& e : edges_) {
      if (e.u == e.v) throw std::invalid_argument("graph: self-loop rejected");
      if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_)
        throw std::invalid_argument("graph: edge endpoint out of range");
      if (e.type < 0) throw std::invalid_argument("graph: negative edge type");
      if (e.u > e.v) std::swap(e.u, e.v);
      max_type = std::max(max_type, e.type);
    }
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t i = 1; i < edges_.size(); ++i)
      if (edges_[i] == edges_[i - 1])
        throw std::invalid_argument("graph: duplicate edge within a type");

    edge_type_count_ = std::max(edge_type_count, std::max(max_type + 1, 1));
  }

  Index vertex_count() const { return n_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  int edge_type_count() const { return edge_type_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  Index feature_dim() const { return features_.cols(); }

  const std::vector<std::optional<double>>& labels() const { return labels_; }
  bool has_label(Index i) const { return labels_[static_cast<std::size_t>(i)].has_value(); }
  double label(Index i) const { return *labels_[static_cast<std::size_t>(i)]; }

  IndexList labeled_vertices() const {
    IndexList out;
    for (Index i = 0; i < n_; ++i)
      if (has_label(i)) out.push_back(i);
    return out;
  }

  // Total degree (all edge types).
  std::vector<Index> degrees() const {
    std::vector<Index> deg(static_cast<std::size_t>(n_), 0);
    for (const auto& e : edges_) {
      ++deg[static_cast<std::size_t>(e.u)];
      ++deg[static_cast<std::size_t>(e.v)];
    }
    return deg;
  }

  AttributedGraph with_features(Matrix features) const {
    return AttributedGraph(n_, edges_, std::move(features), labels_, edge_type_count_);
  }

  AttributedGraph with_labels(std::vector<std::optional<double>> labels) const {
    return AttributedGraph(n_, edges_, features_, std::move(labels), edge_type_count_);
  }

 private:
  Index n_;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<std::optional<double>> labels_;
  int edge_type_count_ = 1;
};

// Labeled/unlabeled split of the vertex set; both sides stored sorted so that
// block indexing is deterministic.
struct VertexPartition {
  IndexList labeled;
  IndexList unlabeled;

  static VertexPartition from_labeled(IndexList labeled_ids, Index n) {
    VertexPartition p;
    p.labeled = sorted_copy(std::move(labeled_ids));
    if (!is_sorted_unique(p.labeled) && !p.labeled.empty())
      throw std::invalid_argument("partition: duplicate labeled index");
    if (!p.labeled.empty() && (p.labeled.front() < 0 || p.labeled.back() >= n))
      throw std::invalid_argument("partition: labeled index out of range");
    p.unlabeled = complement(p.labeled, n);
    return p;
  }

  Index size() const { return static_cast<Index>(labeled.size() + unlabeled.size()); }
};

// Symmetric normalized adjacency S = D^{-1/2} A D^{-1/2} as a matrix-free
// operator backed by compressed sparse rows. For a typed operator S^(i) only
// the edges of type i contribute entries, but D stays the total degree.
// Isolated vertices get zero rows (their D^{-1/2} entry is defined as 0).
class NormalizedAdjacency {
 public:
  // type < 0 selects all edge types.
  NormalizedAdjacency(const AttributedGraph& graph, int type = -1) : n_(graph.vertex_count()) {
    const auto deg = graph.degrees();
    std::vector<double> inv_sqrt(static_cast<std::size_t>(n_), 0.0);
    for (Index i = 0; i < n_; ++i)
      if (deg[static_cast<std::size_t>(i)] > 0)
        inv_sqrt[static_cast<std::size_t>(i)] =
            1.0 / std::sqrt(static_cast<double>(deg[static_cast<std::size_t>(i)]));

    std::vector<Index> counts(static_cast<std::size_t>(n_), 0);
    for (const auto& e : graph.edges()) {
      if (type >= 0 && e.type != type) continue;
      ++counts[static_cast<std::size_t>(e.u)];
      ++counts[static_cast<std::size_t>(e.v)];
    }
    row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (Index i = 0; i < n_; ++i)
      row_ptr_[static_cast<std::size_t>(i) + 1] =
          row_ptr_[static_cast<std::size_t>(i)] + counts[static_cast<std::size_t>(i)];
    col_.resize(static_cast<std::size_t>(row_ptr_.back()));
    val_.resize(col_.size());

    std::vector<Index> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (const auto& e : graph.edges()) {
      if (type >= 0 && e.type != type) continue;
      const double w =
          inv_sqrt[static_cast<std::size_t>(e.u)] * inv_sqrt[static_cast<std::size_t>(e.v)];
      auto place = [&](Index r, Index c) {
        const auto k = static_cast<std::size_t>(cursor[static_cast<std::size_t>(r)]++);
        col_[k] = c;
        val_[k] = w;
      };
      place(e.u, e.v);
      place(e.v, e.u);
    }
    // Edges are sorted by (u, v), so rows u < v get columns in ascending
    // order already; rows built from the v side need a local sort.
    for (Index r = 0; r < n_; ++r) {
      const auto lo = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r)]);
      const auto hi = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(r) + 1]);
      std::vector<std::pair<Index, double>> row;
      row.reserve(hi - lo);
      for (auto k = lo; k < hi; ++k) row.emplace_back(col_[k], val_[k]);
      std::sort(row.begin(), row.end());
      for (auto k = lo; k < hi; ++k) {
        col_[k] = row[k - lo].first;
        val_[k] = row[k - lo].second;
      }
    }
  }

  Index rows() const { return n_; }
  Index nnz() const { return static_cast<Index>(col_.size()); }

  Vector apply(const Vector& v) const {
    Vector out = Vector::Zero(n_);
    for (Index r = 0; r < n_; ++r) {
      double acc = 0.0;
      for (Index k = row_ptr_[static_cast<std::size_t>(r)];
           k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
        acc += val_[static_cast<std::size_t>(k)] * v[col_[static_cast<std::size_t>(k)]];
      }
      out[r] = acc;
    }
    return out;
  }

  // Rows P of S applied to v zero-extended onto the columns Q.
  Vector apply_block(const IndexList& p, const IndexList& q, const Vector& v) const {
    Vector extended = Vector::Zero(n_);
    scatter_into(v, q, extended);
    Vector out(static_cast<Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Index r = p[i];
      double acc = 0.0;
      for (Index k = row_ptr_[static_cast<std::size_t>(r)];
           k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
        acc += val_[static_cast<std::size_t>(k)] * extended[col_[static_cast<std::size_t>(k)]];
      }
      out[static_cast<Index>(i)] = acc;
    }
    return out;
  }

  // Dense realization; intended for tests and small oracle computations.
  Matrix dense() const {
    Matrix m = Matrix::Zero(n_, n_);
    for (Index r = 0; r < n_; ++r)
      for (Index k = row_ptr_[static_cast<std::size_t>(r)];
           k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
        m(r, col_[static_cast<std::size_t>(k)]) += val_[static_cast<std::size_t>(k)];
    return m;
  }

 private:
  Index n_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_;
  std::vector<double> val_;
};

inline NormalizedAdjacency normalized_adjacency(const AttributedGraph& graph) {
  return NormalizedAdjacency(graph);
}

// One operator per edge type; their sum equals normalized_adjacency(graph).
inline std::vector<NormalizedAdjacency> typed_normalized_adjacency(const AttributedGraph& graph) {
  std::vector<NormalizedAdjacency> ops;
  ops.reserve(static_cast<std::size_t>(graph.edge_type_count()));
  for (int t = 0; t < graph.edge_type_count(); ++t) ops.emplace_back(graph, t);
  return ops;
}

// Principal-submatrix view M_PP of a symmetric operator, as an operator on
// vectors indexed by the sorted id set.
template <typename Op>
struct PrincipalBlock {
  const Op* op;
  const IndexList* ids;

  Index rows() const { return static_cast<Index>(ids->size()); }

  Vector apply(const Vector& v) const {
    Vector extended = Vector::Zero(op->rows());
    scatter_into(v, *ids, extended);
    return gather(op->apply(extended), *ids);
  }
};

}  // namespace cgnn
