#pragma once

#include "cgnn/generators.hpp"

namespace cgnn {

// Ising model on a rows x cols grid with uniform coupling J and external field
// h_i = field_scale * x_i1 * x_i2 over coordinates rescaled to [-1, 1]:
//   H(sigma) = -sum_{(i,j) in E} J sigma_i sigma_j - sum_i h_i sigma_i,
//   P(sigma) proportional to exp(-H(sigma)).
// Sampling is systematic-scan single-site heat bath; burn_in sweeps precede
// the first sample and sample_gap sweeps separate consecutive samples.
struct IsingConfig {
  Index rows = 35;
  Index cols = 35;
  double coupling = 0.3;
  double field_scale = 0.35;
  int burn_in = 1000;
  int sample_gap = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("ising: grid dims must be >= 1");
    if (burn_in < 1) throw std::invalid_argument("ising: burn_in must be >= 1");
    if (sample_gap < 1) throw std::invalid_argument("ising: sample_gap must be >= 1");
  }
};

namespace detail {

class IsingChain {
 public:
  explicit IsingChain(const IsingConfig& cfg)
      : cfg_(cfg), graph_(grid_graph(cfg.rows, cfg.cols)), rng_(derive_seed(cfg.seed, 0x1519)) {
    cfg.validate();
    const Index n = graph_.vertex_count();
    field_.resize(n);
    for (Index i = 0; i < n; ++i)
      field_[i] = cfg.field_scale * graph_.features()(i, 0) * graph_.features()(i, 1);
    neighbors_.resize(static_cast<std::size_t>(n));
    for (const auto& e : graph_.edges()) {
      neighbors_[static_cast<std::size_t>(e.u)].push_back(e.v);
      neighbors_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    spins_.resize(n);
    for (Index i = 0; i < n; ++i) spins_[i] = rng_.uniform() < 0.5 ? -1.0 : 1.0;
    for (int s = 0; s < cfg.burn_in; ++s) sweep();
  }

  const AttributedGraph& graph() const { return graph_; }

  // Heat-bath conditional: P(sigma_i = +1 | rest) = 1 / (1 + exp(-2 lambda_i))
  // with lambda_i = J sum_{j in N(i)} sigma_j + h_i.
  void sweep() {
    const Index n = graph_.vertex_count();
    for (Index i = 0; i < n; ++i) {
      double lambda = field_[i];
      for (Index j : neighbors_[static_cast<std::size_t>(i)]) lambda += cfg_.coupling * spins_[j];
      const double p_up = 1.0 / (1.0 + std::exp(-2.0 * lambda));
      spins_[i] = rng_.uniform() < p_up ? 1.0 : -1.0;
    }
  }

  Vector sample() {
    const Vector out = spins_;
    for (int s = 0; s < cfg_.sample_gap; ++s) sweep();
    return out;
  }

 private:
  IsingConfig cfg_;
  AttributedGraph graph_;
  Rng rng_;
  Vector field_;
  Vector spins_;
  std::vector<IndexList> neighbors_;
};

}  // namespace detail

// Draws `count` gap-separated spin configurations from one chain.
inline std::vector<Vector> sample_ising_chain(const IsingConfig& cfg, int count) {
  detail::IsingChain chain(cfg);
  std::vector<Vector> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) samples.push_back(chain.sample());
  return samples;
}

// Grid graph with coordinate features and one sampled +-1 spin configuration
// as labels.
inline AttributedGraph sample_ising(const IsingConfig& cfg) {
  detail::IsingChain chain(cfg);
  const Vector spins = chain.sample();
  std::vector<std::optional<double>> labels(static_cast<std::size_t>(spins.size()));
  for (Index i = 0; i < spins.size(); ++i) labels[static_cast<std::size_t>(i)] = spins[i];
  return chain.graph().with_labels(std::move(labels));
}

}  // namespace cgnn
