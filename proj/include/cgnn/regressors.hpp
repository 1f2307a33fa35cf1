#pragma once

#include "cgnn/graph.hpp"

#include <memory>

namespace cgnn {

enum class RegressorKind { linear, mlp, sage_mean, gcn };

inline const char* to_string(RegressorKind k) {
  switch (k) {
    case RegressorKind::linear: return "linear";
    case RegressorKind::mlp: return "mlp";
    case RegressorKind::sage_mean: return "sage_mean";
    case RegressorKind::gcn: return "gcn";
  }
  return "?";
}

inline RegressorKind regressor_kind_from_string(const std::string& s) {
  if (s == "linear") return RegressorKind::linear;
  if (s == "mlp") return RegressorKind::mlp;
  if (s == "sage_mean") return RegressorKind::sage_mean;
  if (s == "gcn") return RegressorKind::gcn;
  throw std::invalid_argument("unknown regressor kind: " + s);
}

// Base feature-to-prediction map: an encoder (plain or graph-aggregated ReLU
// layers, then a linear projection to the representation) followed by a linear
// output layer. The linear kind is a single affine map.
struct RegressorSpec {
  RegressorKind kind = RegressorKind::mlp;
  Index input_dim = 0;
  Index hidden_width = 16;
  Index representation_dim = 8;
  int layers = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("regressor: input_dim must be >= 1");
    if (hidden_width < 1 || representation_dim < 1 || layers < 1)
      throw std::invalid_argument("regressor: widths and layer count must be positive");
  }
};

struct TensorLayout {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;
};

// Flat weight vector plus a layout descriptor; gradients share the layout.
class ParameterSet {
 public:
  static ParameterSet build(const RegressorSpec& spec) {
    spec.validate();
    ParameterSet p;
    auto add = [&p](const std::string& name, Index rows, Index cols) {
      p.layout_.push_back({name, rows, cols, p.total_});
      p.total_ += rows * cols;
    };
    if (spec.kind == RegressorKind::linear) {
      add("out_w", 1, spec.input_dim);
      add("out_b", 1, 1);
    } else {
      Index in = spec.input_dim;
      for (int k = 0; k < spec.layers; ++k) {
        add("layer" + std::to_string(k) + "_w", spec.hidden_width, in);
        add("layer" + std::to_string(k) + "_b", spec.hidden_width, 1);
        in = spec.hidden_width;
      }
      add("proj_w", spec.representation_dim, in);
      add("proj_b", spec.representation_dim, 1);
      add("out_w", 1, spec.representation_dim);
      add("out_b", 1, 1);
    }
    p.flat_ = Vector::Zero(p.total_);
    return p;
  }

  Index size() const { return total_; }
  const std::vector<TensorLayout>& layout() const { return layout_; }
  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  Eigen::Map<Matrix> tensor(std::size_t i) {
    const auto& t = layout_[i];
    return Eigen::Map<Matrix>(flat_.data() + t.offset, t.rows, t.cols);
  }
  Eigen::Map<const Matrix> tensor(std::size_t i) const {
    const auto& t = layout_[i];
    return Eigen::Map<const Matrix>(flat_.data() + t.offset, t.rows, t.cols);
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < layout_.size(); ++i)
      if (layout_[i].name == name) return i;
    throw std::invalid_argument("parameter tensor not found: " + name);
  }
  Eigen::Map<Matrix> tensor(const std::string& name) { return tensor(index_of(name)); }
  Eigen::Map<const Matrix> tensor(const std::string& name) const { return tensor(index_of(name)); }

  ParameterSet zeros_like() const {
    ParameterSet p = *this;
    p.flat_.setZero();
    return p;
  }

 private:
  std::vector<TensorLayout> layout_;
  Vector flat_;
  Index total_ = 0;
};

// Glorot-uniform weights, zero biases; draw order is fixed by the layout.
inline ParameterSet initialize_parameters(const RegressorSpec& spec) {
  ParameterSet p = ParameterSet::build(spec);
  Rng rng(derive_seed(spec.seed, 0x1717));
  for (std::size_t i = 0; i < p.layout().size(); ++i) {
    const auto& t = p.layout()[i];
    if (t.name.ends_with("_b")) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    auto w = p.tensor(i);
    for (Index c = 0; c < t.cols; ++c)
      for (Index r = 0; r < t.rows; ++r) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

// Neighborhood aggregation used by the graph kinds. sage_mean averages over
// {i} u N(i); gcn applies the symmetric self-loop normalization
// (D+I)^{-1/2} (A+I) (D+I)^{-1/2}.
class Aggregator {
 public:
  explicit Aggregator(const AttributedGraph& graph) : n_(graph.vertex_count()) {
    const auto deg = graph.degrees();
    inv_count_.resize(static_cast<std::size_t>(n_));
    inv_sqrt_count_.resize(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) {
      const double c = static_cast<double>(deg[static_cast<std::size_t>(i)] + 1);
      inv_count_[static_cast<std::size_t>(i)] = 1.0 / c;
      inv_sqrt_count_[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(c);
    }
    std::vector<Index> counts(static_cast<std::size_t>(n_), 1);  // self-loop
    for (const auto& e : graph.edges()) {
      ++counts[static_cast<std::size_t>(e.u)];
      ++counts[static_cast<std::size_t>(e.v)];
    }
    row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (Index i = 0; i < n_; ++i)
      row_ptr_[static_cast<std::size_t>(i) + 1] =
          row_ptr_[static_cast<std::size_t>(i)] + counts[static_cast<std::size_t>(i)];
    col_.resize(static_cast<std::size_t>(row_ptr_.back()));
    std::vector<Index> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (Index i = 0; i < n_; ++i) col_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(i)]++)] = i;
    for (const auto& e : graph.edges()) {
      col_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++)] = e.v;
      col_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++)] = e.u;
    }
    for (Index r = 0; r < n_; ++r)
      std::sort(col_.begin() + row_ptr_[static_cast<std::size_t>(r)],
                col_.begin() + row_ptr_[static_cast<std::size_t>(r) + 1]);
  }

  Index rows() const { return n_; }

  // out = M in with M = diag(1/(deg+1)) (A+I).
  Matrix mean_apply(const Matrix& in) const {
    Matrix out = sum_apply(in);
    for (Index i = 0; i < n_; ++i) out.row(i) *= inv_count_[static_cast<std::size_t>(i)];
    return out;
  }

  // out = M' in.
  Matrix mean_apply_transpose(const Matrix& in) const {
    Matrix scaled = in;
    for (Index i = 0; i < n_; ++i) scaled.row(i) *= inv_count_[static_cast<std::size_t>(i)];
    return sum_apply(scaled);
  }

  // Symmetric: its own transpose.
  Matrix gcn_apply(const Matrix& in) const {
    Matrix scaled = in;
    for (Index i = 0; i < n_; ++i) scaled.row(i) *= inv_sqrt_count_[static_cast<std::size_t>(i)];
    Matrix out = sum_apply(scaled);
    for (Index i = 0; i < n_; ++i) out.row(i) *= inv_sqrt_count_[static_cast<std::size_t>(i)];
    return out;
  }

 private:
  Matrix sum_apply(const Matrix& in) const {
    Matrix out = Matrix::Zero(in.rows(), in.cols());
    for (Index r = 0; r < n_; ++r)
      for (Index k = row_ptr_[static_cast<std::size_t>(r)];
           k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
        out.row(r) += in.row(col_[static_cast<std::size_t>(k)]);
    return out;
  }

  Index n_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_;
  std::vector<double> inv_count_;
  std::vector<double> inv_sqrt_count_;
};

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Everything the backward pass needs from the matching forward pass, plus a
// token so a stale cache (parameters changed since the forward) is detected.
struct ForwardCache {
  std::vector<Matrix> aggregated;       // Z_k: layer inputs after aggregation
  std::vector<Matrix> pre_activations;  // P_k
  Matrix encoder_output;                // input to the projection layer
  Matrix representation;                // input to the output layer
  Matrix inputs;                        // feature matrix (linear kind)
  Vector predictions_all;               // yhat on every vertex
  IndexList vertices;                   // the requested subset
  std::shared_ptr<const Aggregator> aggregator;
  std::uint64_t token = 0;
};

inline std::uint64_t parameter_token(const RegressorSpec& spec, const ParameterSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int kind = static_cast<int>(spec.kind);
  h = fnv1a_bytes(&kind, sizeof kind, h);
  h = fnv1a_bytes(&spec.input_dim, sizeof spec.input_dim, h);
  h = fnv1a_bytes(params.flat().data(),
                  static_cast<std::size_t>(params.flat().size()) * sizeof(double), h);
  return h;
}

struct ForwardResult {
  Vector predictions;  // indexed like `vertices`
  ForwardCache cache;
};

inline ForwardResult forward(const RegressorSpec& spec, const ParameterSet& params,
                             const AttributedGraph& graph, const IndexList& vertices) {
  spec.validate();
  if (graph.feature_dim() != spec.input_dim)
    throw std::invalid_argument("forward: feature dimension does not match regressor input_dim");

  ForwardResult out;
  ForwardCache& cache = out.cache;
  cache.vertices = vertices;
  cache.token = parameter_token(spec, params);

  const Matrix& x = graph.features();
  const Index n = graph.vertex_count();

  if (spec.kind == RegressorKind::linear) {
    cache.inputs = x;
    const auto w = params.tensor("out_w");
    const double b = params.tensor("out_b")(0, 0);
    cache.predictions_all = (x * w.transpose()).col(0).array() + b;
  } else {
    const bool graph_kind =
        spec.kind == RegressorKind::sage_mean || spec.kind == RegressorKind::gcn;
    if (graph_kind) cache.aggregator = std::make_shared<Aggregator>(graph);

    Matrix activation = x;
    for (int k = 0; k < spec.layers; ++k) {
      Matrix z;
      if (spec.kind == RegressorKind::sage_mean) {
        z = cache.aggregator->mean_apply(activation);
      } else if (spec.kind == RegressorKind::gcn) {
        z = cache.aggregator->gcn_apply(activation);
      } else {
        z = activation;
      }
      const auto w = params.tensor("layer" + std::to_string(k) + "_w");
      const auto b = params.tensor("layer" + std::to_string(k) + "_b");
      Matrix pre = z * w.transpose();
      pre.rowwise() += b.col(0).transpose();
      cache.aggregated.push_back(std::move(z));
      activation = pre.cwiseMax(0.0);
      cache.pre_activations.push_back(std::move(pre));
    }
    cache.encoder_output = activation;
    const auto wp = params.tensor("proj_w");
    const auto bp = params.tensor("proj_b");
    cache.representation = activation * wp.transpose();
    cache.representation.rowwise() += bp.col(0).transpose();
    const auto wo = params.tensor("out_w");
    const double bo = params.tensor("out_b")(0, 0);
    cache.predictions_all = (cache.representation * wo.transpose()).col(0).array() + bo;
  }

  if (cache.predictions_all.size() != n) throw std::logic_error("forward: bad prediction size");
  out.predictions = gather(cache.predictions_all, vertices);
  return out;
}

// Exact reverse-mode gradient of <d_loss_d_yhat, yhat(theta)> with respect to
// the flat parameters; d_loss_d_yhat is indexed like cache.vertices.
inline ParameterSet backward(const RegressorSpec& spec, const ParameterSet& params,
                             const ForwardCache& cache, const Vector& d_loss_d_yhat) {
  if (cache.token != parameter_token(spec, params))
    throw std::logic_error("backward: stale forward cache (parameters changed)");
  if (d_loss_d_yhat.size() != static_cast<Index>(cache.vertices.size()))
    throw std::invalid_argument("backward: gradient size does not match cached vertices");

  ParameterSet grad = params.zeros_like();
  const Index n = cache.predictions_all.size();
  Vector g = Vector::Zero(n);
  scatter_into(d_loss_d_yhat, cache.vertices, g);

  if (spec.kind == RegressorKind::linear) {
    grad.tensor("out_w") = g.transpose() * cache.inputs;
    grad.tensor("out_b")(0, 0) = g.sum();
    return grad;
  }

  const auto wo = params.tensor("out_w");
  grad.tensor("out_w") = g.transpose() * cache.representation;
  grad.tensor("out_b")(0, 0) = g.sum();
  Matrix delta = g * wo;  // n x rep

  const auto wp = params.tensor("proj_w");
  grad.tensor("proj_w") = delta.transpose() * cache.encoder_output;
  grad.tensor("proj_b") = delta.colwise().sum().transpose();
  delta = delta * wp;  // n x width

  for (int k = spec.layers - 1; k >= 0; --k) {
    const Matrix& pre = cache.pre_activations[static_cast<std::size_t>(k)];
    Matrix dpre = (pre.array() > 0.0).select(delta, Matrix::Zero(delta.rows(), delta.cols()));
    const auto w = params.tensor("layer" + std::to_string(k) + "_w");
    grad.tensor("layer" + std::to_string(k) + "_w") =
        dpre.transpose() * cache.aggregated[static_cast<std::size_t>(k)];
    grad.tensor("layer" + std::to_string(k) + "_b") = dpre.colwise().sum().transpose();
    if (k == 0) break;
    Matrix dz = dpre * w;
    if (spec.kind == RegressorKind::sage_mean) {
      delta = cache.aggregator->mean_apply_transpose(dz);
    } else if (spec.kind == RegressorKind::gcn) {
      delta = cache.aggregator->gcn_apply(dz);
    } else {
      delta = std::move(dz);
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Optimizers and squared-error training
// ---------------------------------------------------------------------------

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vector m, v;
  long step = 0;

  void update(Vector& params, const Vector& grad) {
    if (m.size() == 0) {
      m = Vector::Zero(params.size());
      v = Vector::Zero(params.size());
    }
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (Index i = 0; i < params.size(); ++i)
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
};

struct SgdConfig {
  int epochs = 75;
  Index batch_size = 32;  // 0 means full batch
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// Mini-batches of the training ids for one epoch, in a seeded shuffled order.
inline std::vector<IndexList> make_batches(const IndexList& ids, Index batch_size, Rng& rng) {
  IndexList order = ids;
  rng.shuffle(order);
  const Index b = batch_size <= 0 ? static_cast<Index>(ids.size())
                                  : std::min<Index>(batch_size, static_cast<Index>(ids.size()));
  std::vector<IndexList> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(b)) {
    const auto stop = std::min(order.size(), start + static_cast<std::size_t>(b));
    batches.push_back(sorted_copy(IndexList(order.begin() + static_cast<std::ptrdiff_t>(start),
                                            order.begin() + static_cast<std::ptrdiff_t>(stop))));
  }
  return batches;
}

struct TrainedRegressor {
  ParameterSet params;
  std::vector<double> loss_trace;  // full training loss per epoch
};

// Minimizes sum_{i in L} (yhat_i - y_i)^2 with Adam. Aborts on non-finite loss.
inline TrainedRegressor train_squared_error(const RegressorSpec& spec,
                                            const AttributedGraph& graph,
                                            const IndexList& train_ids, const SgdConfig& cfg) {
  for (Index i : train_ids)
    if (!graph.has_label(i))
      throw std::invalid_argument("train_squared_error: unlabeled vertex in training set");

  TrainedRegressor out{initialize_parameters(spec), {}};
  AdamState adam;
  adam.lr = cfg.lr;
  IndexList all;
  all.reserve(static_cast<std::size_t>(graph.vertex_count()));
  for (Index i = 0; i < graph.vertex_count(); ++i) all.push_back(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0xb000 + static_cast<std::uint64_t>(epoch)));
    for (const IndexList& batch : make_batches(train_ids, cfg.batch_size, shuffle_rng)) {
      auto fwd = forward(spec, out.params, graph, all);
      Vector g = Vector::Zero(graph.vertex_count());
      for (Index i : batch) g[i] = 2.0 * (fwd.cache.predictions_all[i] - graph.label(i));
      const ParameterSet grad = backward(spec, out.params, fwd.cache, g);
      adam.update(out.params.flat(), grad.flat());
    }
    auto fwd = forward(spec, out.params, graph, train_ids);
    double loss = 0.0;
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
      const double d = fwd.predictions[static_cast<Index>(i)] - graph.label(train_ids[i]);
      loss += d * d;
    }
    if (!std::isfinite(loss))
      throw std::runtime_error("train_squared_error: loss diverged at epoch " +
                               std::to_string(epoch));
    out.loss_trace.push_back(loss);
  }
  return out;
}

}  // namespace cgnn
