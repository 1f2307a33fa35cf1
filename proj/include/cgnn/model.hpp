#pragma once

#include "cgnn/data.hpp"
#include "cgnn/dense_oracle.hpp"
#include "cgnn/regressors.hpp"

namespace cgnn {

enum class EstimatorBackend { stochastic, dense };

struct NllDiagnostics {
  int cg_calls = 0;
  int cg_nonconverged = 0;
  double max_cg_residual = 0.0;

  void absorb(const CgResult& r) {
    ++cg_calls;
    if (r.status == CgStatus::breakdown)
      throw std::runtime_error("marginal_nll: CG hit NaN/Inf");
    if (!r.converged()) ++cg_nonconverged;
    max_cg_residual = std::max(max_cg_residual, r.relative_residual);
  }
};

struct MarginalNllResult {
  double omega = 0.0;
  Vector dalpha;       // dOmega/dalpha_i
  double dbeta = 0.0;  // dOmega/dbeta
  Vector dyhat_l;      // dOmega/dyhat_L = -2 Gammabar_LL r_L
  double logdet_full = 0.0;
  double logdet_uu = 0.0;
  double quadratic = 0.0;
  NllDiagnostics diag;
};

namespace detail {

// Quadrature value n * sum_i tau_i^2 log(xi_i) for one normalized probe.
template <SymmetricLinearOperator Op>
double slq_probe_logdet(const Op& op, const Vector& z, int lanczos_steps) {
  const TridiagonalMatrix tri = lanczos_tridiagonalize(op, z, lanczos_steps);
  const TridiagonalEigen eig = tridiag_eig(tri);
  double sum = 0.0;
  for (Index i = 0; i < eig.eigenvalues.size(); ++i) {
    if (!(eig.eigenvalues[i] > 0.0))
      throw std::domain_error("slq: nonpositive quadrature node (operator not PD?)");
    sum += eig.first_components[i] * eig.first_components[i] * std::log(eig.eigenvalues[i]);
  }
  return static_cast<double>(op.rows()) * sum;
}

// Per-probe SLQ + Hutchinson contributions for one symmetric PD operator
// `mat` of dimension dim. apply_deriv(i, z) applies dGamma/dparam_i restricted
// to the operator's index set; the same probes and CG solves serve the
// log-determinant and every trace estimate.
template <typename MatOp, typename ApplyDeriv>
void estimate_logdet_and_traces(const MatOp& mat, Index n_derivs, ApplyDeriv&& apply_deriv,
                                const EstimatorConfig& cfg, std::uint64_t stream_tag,
                                double& logdet_out, Vector& traces_out, NllDiagnostics& diag) {
  const Index dim = mat.rows();
  logdet_out = 0.0;
  traces_out = Vector::Zero(n_derivs);
  if (dim == 0) return;

  const std::uint64_t base = derive_seed(cfg.seed, stream_tag);
  std::vector<double> ld(static_cast<std::size_t>(cfg.probes));
  Matrix tr(n_derivs, cfg.probes);
  std::vector<CgResult> solves(static_cast<std::size_t>(cfg.probes));
  std::atomic<bool> bad{false};

  for_each_probe(cfg.probes, cfg.threads, [&](int t) {
    try {
      Rng rng(derive_seed(base, static_cast<std::uint64_t>(t)));
      const Vector z = rng.gaussian_vector(dim);
      ld[static_cast<std::size_t>(t)] = slq_probe_logdet(mat, z, cfg.lanczos_steps);
      CgResult solve = conjugate_gradient(mat, z, Vector::Zero(dim), cfg);
      for (Index i = 0; i < n_derivs; ++i) tr(i, t) = solve.x.dot(apply_deriv(i, z));
      solves[static_cast<std::size_t>(t)] = std::move(solve);
    } catch (...) {
      bad.store(true);
    }
  });
  if (bad.load()) throw std::domain_error("marginal_nll: estimator probe failed (operator not PD?)");

  for (int t = 0; t < cfg.probes; ++t) {
    logdet_out += ld[static_cast<std::size_t>(t)];
    diag.absorb(solves[static_cast<std::size_t>(t)]);
  }
  logdet_out /= static_cast<double>(cfg.probes);
  for (Index i = 0; i < n_derivs; ++i) traces_out[i] = tr.row(i).mean();
}

}  // namespace detail

// Negative log marginal likelihood (up to an additive constant)
//   Omega = r_L' Gammabar_LL r_L - log det(Gamma) + log det(Gamma_UU)
// and its derivatives in (alpha_i, beta) plus the pullback seed dOmega/dyhat_L.
// The quadratic term and all three derivative contractions reuse the single
// CG solve u = Gamma_UU^{-1} Gamma_UL r_L; log-determinants use SLQ; traces
// use Hutchinson probes shared with the SLQ streams per matrix.
inline MarginalNllResult marginal_nll_and_grads(const PrecisionOperator& op,
                                                const VertexPartition& partition,
                                                const Vector& residual_l,
                                                const EstimatorConfig& cfg,
                                                EstimatorBackend backend = EstimatorBackend::stochastic) {
  if (partition.labeled.empty())
    throw std::invalid_argument("marginal_nll: empty labeled set");
  if (residual_l.size() != static_cast<Index>(partition.labeled.size()))
    throw std::invalid_argument("marginal_nll: residual size mismatch");

  if (backend == EstimatorBackend::dense) {
    const DenseNllResult dense = dense_marginal_nll(op, partition, residual_l);
    MarginalNllResult out;
    out.omega = dense.omega;
    out.dalpha = dense.dalpha;
    out.dbeta = dense.dbeta;
    out.dyhat_l = dense.dyhat_l;
    out.logdet_full = dense.logdet_full;
    out.logdet_uu = dense.logdet_uu;
    out.quadratic = dense.quadratic;
    return out;
  }

  cfg.validate();
  const IndexList& l = partition.labeled;
  const IndexList& u = partition.unlabeled;
  const Index types = op.params().alphas.size();
  const double beta = op.params().beta;

  MarginalNllResult out;
  out.dalpha = Vector::Zero(types);

  // Quadratic pieces through the shared Schur vector u.
  Vector schur_u = Vector(0);
  if (!u.empty()) {
    const Vector rhs = op.apply_block(u, l, residual_l);
    const PrecisionUnlabeledBlock uu{&op, &partition};
    CgResult solve = conjugate_gradient(uu, rhs, Vector::Zero(uu.rows()), cfg);
    out.diag.absorb(solve);
    schur_u = std::move(solve.x);
  }
  const Vector gll_r = op.apply_block(l, l, residual_l);
  const Vector glu_u = u.empty() ? Vector::Zero(static_cast<Index>(l.size()))
                                 : op.apply_block(l, u, schur_u);
  out.quadratic = residual_l.dot(gll_r) - residual_l.dot(glu_u);
  out.dyhat_l = -2.0 * (gll_r - glu_u);

  // r' dGammabar r = r'(dG_LL)r - 2 r'(dG_LU)u + u'(dG_UU)u for each parameter.
  auto quad_derivative = [&](auto which) {
    double q = residual_l.dot(op.apply_derivative_block(which, l, l, residual_l));
    if (!u.empty()) {
      q -= 2.0 * residual_l.dot(op.apply_derivative_block(which, l, u, schur_u));
      q += schur_u.dot(op.apply_derivative_block(which, u, u, schur_u));
    }
    return q;
  };
  Vector quad_alpha(types);
  for (Index t = 0; t < types; ++t) quad_alpha[t] = quad_derivative(DerivAlpha{t});
  const double quad_beta = quad_derivative(DerivBeta{});

  // Full-matrix estimators: one probe set serves log det(Gamma) and the
  // traces tr(Gamma^{-1} dGamma/d.) for every parameter (beta last).
  const auto& s_ops = op.adjacency_ops();
  Vector traces_full;
  {
    auto deriv_full = [&](Index i, const Vector& z) -> Vector {
      if (i < types) return -beta * s_ops[static_cast<std::size_t>(i)].apply(z);
      return op.apply(z) / beta;
    };
    detail::estimate_logdet_and_traces(op, types + 1, deriv_full, cfg, /*stream_tag=*/101,
                                       out.logdet_full, traces_full, out.diag);
  }

  Vector traces_uu = Vector::Zero(types + 1);
  if (!u.empty()) {
    const PrecisionUnlabeledBlock uu{&op, &partition};
    auto deriv_uu = [&](Index i, const Vector& z) -> Vector {
      if (i < types) return -beta * s_ops[static_cast<std::size_t>(i)].apply_block(u, u, z);
      return op.apply_block(u, u, z) / beta;
    };
    detail::estimate_logdet_and_traces(uu, types + 1, deriv_uu, cfg, /*stream_tag=*/202,
                                       out.logdet_uu, traces_uu, out.diag);
  }

  out.omega = out.quadratic - out.logdet_full + out.logdet_uu;
  for (Index t = 0; t < types; ++t)
    out.dalpha[t] = quad_alpha[t] - traces_full[t] + traces_uu[t];
  out.dbeta = quad_beta - traces_full[types] + traces_uu[types];
  return out;
}

// ---------------------------------------------------------------------------
// The C-GNN model: base regressor + correlation parameters
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 75;
  Index batch_size = 0;  // 0: full labeled set per step
  double lr_theta = 1e-3;
  double lr_alpha_beta = 1e-1;
  std::uint64_t seed = 0;
  std::optional<double> freeze_alpha;  // pin every alpha_i to this value
  std::optional<double> freeze_beta;   // pin beta
  bool oracle_mode = false;            // dense estimators (small graphs only)
  double eta = 1e-3;
};

struct CGNNModel {
  RegressorSpec spec;
  ParameterSet params;
  CorrelationParams correlation;
  EstimatorConfig estimator;

  // training metadata
  int epochs_run = 0;
  int best_epoch = -1;  // -1: no validation selection happened
  std::vector<double> loss_trace;
  std::vector<double> val_r2_trace;
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
};

// Conditional-mean prediction yhat_U - Gamma_UU^{-1} Gamma_UL r_L on the
// partition's unlabeled set.
inline Vector predict_cgnn(const RegressorSpec& spec, const ParameterSet& params,
                           const PrecisionOperator& op, const AttributedGraph& graph,
                           const VertexPartition& partition, const Vector& labels_l,
                           const EstimatorConfig& cfg, NllDiagnostics* diag = nullptr) {
  if (partition.unlabeled.empty()) return Vector(0);
  IndexList all;
  all.reserve(static_cast<std::size_t>(graph.vertex_count()));
  for (Index i = 0; i < graph.vertex_count(); ++i) all.push_back(i);
  const auto fwd = forward(spec, params, graph, all);
  const Vector yhat_u = gather(fwd.cache.predictions_all, partition.unlabeled);
  if (partition.labeled.empty()) return yhat_u;

  const Vector residual_l = labels_l - gather(fwd.cache.predictions_all, partition.labeled);
  const Vector rhs = op.apply_block(partition.unlabeled, partition.labeled, residual_l);
  const PrecisionUnlabeledBlock uu{&op, &partition};
  CgResult solve = conjugate_gradient(uu, rhs, Vector::Zero(uu.rows()), cfg);
  if (diag) diag->absorb(solve);
  if (solve.status == CgStatus::breakdown)
    throw std::runtime_error("predict: CG hit NaN/Inf");
  return yhat_u - solve.x;
}

inline Vector predict_cgnn(const CGNNModel& model, const AttributedGraph& graph,
                           const VertexPartition& partition, const Vector& labels_l) {
  const PrecisionOperator op(model.correlation, graph);
  return predict_cgnn(model.spec, model.params, op, graph, partition, labels_l, model.estimator);
}

// Inductive transfer: identical conditioning mechanics on an unseen graph with
// frozen parameters. The labeled set L' is the new graph's labeled vertices;
// with L' empty the output is exactly the forward pass.
inline Vector predict_inductive(const CGNNModel& model, const AttributedGraph& new_graph) {
  if (new_graph.feature_dim() != model.spec.input_dim)
    throw std::invalid_argument("predict_inductive: feature dimension mismatch");
  const VertexPartition partition =
      VertexPartition::from_labeled(new_graph.labeled_vertices(), new_graph.vertex_count());
  Vector labels_l(static_cast<Index>(partition.labeled.size()));
  for (std::size_t i = 0; i < partition.labeled.size(); ++i)
    labels_l[static_cast<Index>(i)] = new_graph.label(partition.labeled[i]);
  const PrecisionOperator op(model.correlation, new_graph);
  return predict_cgnn(model.spec, model.params, op, new_graph, partition, labels_l,
                      model.estimator);
}

// Joint maximum-marginal-likelihood training (mini-batched): each step draws a
// labeled mini-batch L, treats V \ L as the step's unlabeled set, evaluates
// the marginal NLL and updates theta by Adam and the raw (alpha, beta)
// coordinates by gradient descent on the batch-mean objective. Model selection
// keeps the best validation-R^2 checkpoint (final parameters also recorded).
inline CGNNModel train_cgnn(const AttributedGraph& graph, const IndexList& train_ids,
                            const IndexList& val_ids, const RegressorSpec& spec,
                            const TrainConfig& cfg, const EstimatorConfig& est) {
  if (train_ids.empty()) throw std::invalid_argument("train_cgnn: empty training set");
  for (Index i : train_ids)
    if (!graph.has_label(i)) throw std::invalid_argument("train_cgnn: unlabeled training vertex");
  if (cfg.batch_size > static_cast<Index>(train_ids.size()))
    throw std::invalid_argument("train_cgnn: batch_size exceeds labeled set");
  if (cfg.oracle_mode && graph.vertex_count() > 500)
    throw std::invalid_argument("train_cgnn: oracle mode is limited to n <= 500");

  const Index n = graph.vertex_count();
  const int types = graph.edge_type_count();
  const auto s_ops = std::make_shared<const std::vector<NormalizedAdjacency>>(
      typed_normalized_adjacency(graph));

  CGNNModel model;
  model.spec = spec;
  model.params = initialize_parameters(spec);
  model.estimator = est;

  // Raw coordinates: alpha_i = (1 - eta) tanh(raw_i), beta = exp(raw_last).
  Vector raw = Vector::Zero(types + 1);
  if (cfg.freeze_alpha) {
    CorrelationParams frozen(Vector::Constant(types, *cfg.freeze_alpha), 1.0, cfg.eta);
    raw.head(types) = to_raw(frozen).head(types);
  }
  if (cfg.freeze_beta) raw[types] = std::log(*cfg.freeze_beta);

  AdamState adam;
  adam.lr = cfg.lr_theta;

  IndexList all;
  all.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all.push_back(i);

  Vector labels_train(static_cast<Index>(train_ids.size()));
  for (std::size_t i = 0; i < train_ids.size(); ++i)
    labels_train[static_cast<Index>(i)] = graph.label(train_ids[i]);
  Vector labels_val(static_cast<Index>(val_ids.size()));
  for (std::size_t i = 0; i < val_ids.size(); ++i) {
    if (!graph.has_label(val_ids[i]))
      throw std::invalid_argument("train_cgnn: unlabeled validation vertex");
    labels_val[static_cast<Index>(i)] = graph.label(val_ids[i]);
  }

  double best_val = -std::numeric_limits<double>::infinity();
  ParameterSet best_params = model.params;
  Vector best_raw = raw;

  long step_counter = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0xb000 + static_cast<std::uint64_t>(epoch)));
    for (const IndexList& batch : make_batches(train_ids, cfg.batch_size, shuffle_rng)) {
      const Reparametrization repar = reparametrize(raw, cfg.eta);
      const PrecisionOperator op(repar.params, s_ops);
      const VertexPartition partition = VertexPartition::from_labeled(batch, n);

      const auto fwd = forward(spec, model.params, graph, all);
      Vector residual(static_cast<Index>(batch.size()));
      for (std::size_t i = 0; i < batch.size(); ++i)
        residual[static_cast<Index>(i)] =
            graph.label(batch[i]) - fwd.cache.predictions_all[batch[i]];

      const EstimatorConfig step_est =
          est.with_seed(derive_seed(est.seed, 0xe57e + static_cast<std::uint64_t>(step_counter)));
      const MarginalNllResult nll = marginal_nll_and_grads(
          op, partition, residual, step_est,
          cfg.oracle_mode ? EstimatorBackend::dense : EstimatorBackend::stochastic);
      if (!std::isfinite(nll.omega))
        throw std::runtime_error("train_cgnn: loss diverged at step " +
                                 std::to_string(step_counter));
      model.loss_trace.push_back(nll.omega);

      // theta channel: raw gradient, so alpha = 0 reduces exactly to
      // beta-scaled squared-error training.
      Vector g = Vector::Zero(n);
      scatter_into(nll.dyhat_l, batch, g);
      const ParameterSet grad = backward(spec, model.params, fwd.cache, g);
      adam.update(model.params.flat(), grad.flat());

      // (alpha, beta) channel: plain GD on the batch-mean objective.
      const double scale = cfg.lr_alpha_beta / static_cast<double>(batch.size());
      if (!cfg.freeze_alpha)
        for (Index t = 0; t < types; ++t) raw[t] -= scale * nll.dalpha[t] * repar.dalpha_draw[t];
      if (!cfg.freeze_beta) raw[types] -= scale * nll.dbeta * repar.dbeta_draw;
      for (Index t = 0; t < raw.size(); ++t)
        if (!std::isfinite(raw[t]))
          throw std::runtime_error("train_cgnn: correlation parameters diverged");
      if (!model.params.flat().allFinite())
        throw std::runtime_error("train_cgnn: regressor parameters diverged");
      ++step_counter;
    }

    if (!val_ids.empty()) {
      const Reparametrization repar = reparametrize(raw, cfg.eta);
      const PrecisionOperator op(repar.params, s_ops);
      const VertexPartition partition = VertexPartition::from_labeled(train_ids, n);
      const Vector pred_u = predict_cgnn(spec, model.params, op, graph, partition, labels_train,
                                         est);
      // Validation vertices inside the step's unlabeled set.
      Vector pred_val(static_cast<Index>(val_ids.size()));
      std::size_t k = 0;
      for (std::size_t i = 0; i < partition.unlabeled.size(); ++i) {
        if (k < val_ids.size() && partition.unlabeled[i] == val_ids[k]) {
          pred_val[static_cast<Index>(k)] = pred_u[static_cast<Index>(i)];
          ++k;
        }
      }
      if (k != val_ids.size())
        throw std::invalid_argument("train_cgnn: validation ids must be disjoint from training");
      double score = -std::numeric_limits<double>::infinity();
      try {
        score = r_squared(pred_val, labels_val);
      } catch (const std::domain_error&) {
      }
      model.val_r2_trace.push_back(score);
      if (score > best_val) {
        best_val = score;
        best_params = model.params;
        best_raw = raw;
        model.best_epoch = epoch;
      }
    }
  }

  model.epochs_run = cfg.epochs;
  if (!model.loss_trace.empty()) model.final_train_loss = model.loss_trace.back();
  if (model.best_epoch >= 0) {
    model.params = best_params;
    raw = best_raw;
  }
  model.correlation = reparametrize(raw, cfg.eta).params;
  return model;
}

// Squared-error fine-tuning of the base regressor on an unseen graph's
// labeled vertices (used by the inductive baselines).
inline CGNNModel fine_tune_regressor(const CGNNModel& model, const AttributedGraph& new_graph,
                                     int epochs = 25, double lr = 5e-4,
                                     std::uint64_t seed = 0) {
  CGNNModel tuned = model;
  const IndexList labeled = new_graph.labeled_vertices();
  if (labeled.empty()) return tuned;
  AdamState adam;
  adam.lr = lr;
  IndexList all;
  for (Index i = 0; i < new_graph.vertex_count(); ++i) all.push_back(i);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, 0xf17e + static_cast<std::uint64_t>(epoch)));
    for (const IndexList& batch : make_batches(labeled, 32, shuffle_rng)) {
      const auto fwd = forward(tuned.spec, tuned.params, new_graph, all);
      Vector g = Vector::Zero(new_graph.vertex_count());
      for (Index i : batch) g[i] = 2.0 * (fwd.cache.predictions_all[i] - new_graph.label(i));
      const ParameterSet grad = backward(tuned.spec, tuned.params, fwd.cache, g);
      adam.update(tuned.params.flat(), grad.flat());
    }
  }
  return tuned;
}

// ---------------------------------------------------------------------------
// Model file (versioned JSON envelope)
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const CGNNModel& model) {
  nlohmann::json j;
  j["format"] = "cgnn-model";
  j["version"] = 1;
  j["regressor"]["kind"] = to_string(model.spec.kind);
  j["regressor"]["input_dim"] = model.spec.input_dim;
  j["regressor"]["hidden_width"] = model.spec.hidden_width;
  j["regressor"]["representation_dim"] = model.spec.representation_dim;
  j["regressor"]["layers"] = model.spec.layers;
  j["regressor"]["seed"] = model.spec.seed;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& t : model.params.layout())
    layout.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  j["regressor"]["layout"] = std::move(layout);
  j["regressor"]["weights"] = std::vector<double>(
      model.params.flat().data(), model.params.flat().data() + model.params.flat().size());
  j["correlation"]["alphas"] = std::vector<double>(
      model.correlation.alphas.data(),
      model.correlation.alphas.data() + model.correlation.alphas.size());
  j["correlation"]["beta"] = model.correlation.beta;
  j["correlation"]["eta"] = model.correlation.eta;
  j["estimator"]["probes"] = model.estimator.probes;
  j["estimator"]["lanczos_steps"] = model.estimator.lanczos_steps;
  j["estimator"]["cg_tolerance"] = model.estimator.cg_tolerance;
  j["estimator"]["cg_max_iters"] = model.estimator.cg_max_iters;
  j["estimator"]["seed"] = model.estimator.seed;
  j["training"]["epochs_run"] = model.epochs_run;
  j["training"]["best_epoch"] = model.best_epoch;
  j["training"]["loss_trace"] = model.loss_trace;
  j["training"]["val_r2_trace"] = model.val_r2_trace;
  return j;
}

inline CGNNModel model_from_json(const nlohmann::json& j) {
  if (j.at("format") != "cgnn-model") throw std::runtime_error("model file: bad format tag");
  CGNNModel model;
  const auto& r = j.at("regressor");
  model.spec.kind = regressor_kind_from_string(r.at("kind").get<std::string>());
  model.spec.input_dim = r.at("input_dim").get<Index>();
  model.spec.hidden_width = r.at("hidden_width").get<Index>();
  model.spec.representation_dim = r.at("representation_dim").get<Index>();
  model.spec.layers = r.at("layers").get<int>();
  model.spec.seed = r.at("seed").get<std::uint64_t>();
  model.params = ParameterSet::build(model.spec);
  const auto weights = r.at("weights").get<std::vector<double>>();
  if (static_cast<Index>(weights.size()) != model.params.size())
    throw std::runtime_error("model file: weight count mismatch");
  for (Index i = 0; i < model.params.size(); ++i)
    model.params.flat()[i] = weights[static_cast<std::size_t>(i)];
  const auto& c = j.at("correlation");
  const auto alphas = c.at("alphas").get<std::vector<double>>();
  model.correlation.alphas =
      Eigen::Map<const Vector>(alphas.data(), static_cast<Index>(alphas.size()));
  model.correlation.beta = c.at("beta").get<double>();
  model.correlation.eta = c.at("eta").get<double>();
  const auto& e = j.at("estimator");
  model.estimator.probes = e.at("probes").get<int>();
  model.estimator.lanczos_steps = e.at("lanczos_steps").get<int>();
  model.estimator.cg_tolerance = e.at("cg_tolerance").get<double>();
  model.estimator.cg_max_iters = e.at("cg_max_iters").get<int>();
  model.estimator.seed = e.at("seed").get<std::uint64_t>();
  const auto& t = j.at("training");
  model.epochs_run = t.at("epochs_run").get<int>();
  model.best_epoch = t.at("best_epoch").get<int>();
  model.loss_trace = t.at("loss_trace").get<std::vector<double>>();
  model.val_r2_trace = t.at("val_r2_trace").get<std::vector<double>>();
  return model;
}

inline void save_model(const std::filesystem::path& path, const CGNNModel& model) {
  std::ofstream out(path);
  out << model_to_json(model).dump(2) << '\n';
}

inline CGNNModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model file: cannot open " + path.string());
  return model_from_json(nlohmann::json::parse(in));
}

// Regressor checkpoint (layout descriptor + flat weights; bit-exact round trip).
inline void save_regressor(const std::filesystem::path& path, const RegressorSpec& spec,
                           const ParameterSet& params) {
  nlohmann::json j;
  j["format"] = "cgnn-regressor";
  j["version"] = 1;
  j["kind"] = to_string(spec.kind);
  j["input_dim"] = spec.input_dim;
  j["hidden_width"] = spec.hidden_width;
  j["representation_dim"] = spec.representation_dim;
  j["layers"] = spec.layers;
  j["seed"] = spec.seed;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& t : params.layout())
    layout.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  j["layout"] = std::move(layout);
  j["weights"] =
      std::vector<double>(params.flat().data(), params.flat().data() + params.flat().size());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

inline std::pair<RegressorSpec, ParameterSet> load_regressor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("regressor file: cannot open " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format") != "cgnn-regressor")
    throw std::runtime_error("regressor file: bad format tag");
  RegressorSpec spec;
  spec.kind = regressor_kind_from_string(j.at("kind").get<std::string>());
  spec.input_dim = j.at("input_dim").get<Index>();
  spec.hidden_width = j.at("hidden_width").get<Index>();
  spec.representation_dim = j.at("representation_dim").get<Index>();
  spec.layers = j.at("layers").get<int>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  ParameterSet params = ParameterSet::build(spec);
  const auto weights = j.at("weights").get<std::vector<double>>();
  if (static_cast<Index>(weights.size()) != params.size())
    throw std::runtime_error("regressor file: weight count mismatch");
  for (Index i = 0; i < params.size(); ++i) params.flat()[i] = weights[static_cast<std::size_t>(i)];
  return {spec, params};
}

}  // namespace cgnn
