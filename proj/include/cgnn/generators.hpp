#pragma once

#include "cgnn/graph.hpp"

#include <set>

namespace cgnn {

// Watts-Strogatz small-world graph: a ring lattice where every vertex links to
// its mean_degree/2 clockwise neighbors, then each lattice edge has its far
// endpoint rewired with probability rewire_prob (resampled to avoid self-loops
// and duplicates). Exactly n*mean_degree/2 edges. Features are a seeded
// 2-dimensional standard-normal draw per vertex; no labels.
inline AttributedGraph watts_strogatz(Index n, Index mean_degree, double rewire_prob,
                                      std::uint64_t seed) {
  if (mean_degree < 0 || mean_degree % 2 != 0)
    throw std::invalid_argument("watts_strogatz: mean_degree must be even");
  if (mean_degree >= n)
    throw std::invalid_argument("watts_strogatz: mean_degree must be < n");
  if (rewire_prob < 0.0 || rewire_prob > 1.0)
    throw std::invalid_argument("watts_strogatz: rewire_prob must be in [0, 1]");

  Rng rng(derive_seed(seed, 1));
  std::set<std::pair<Index, Index>> present;
  auto key = [](Index a, Index b) { return std::make_pair(std::min(a, b), std::max(a, b)); };

  for (Index j = 1; j <= mean_degree / 2; ++j)
    for (Index u = 0; u < n; ++u) present.insert(key(u, (u + j) % n));

  for (Index j = 1; j <= mean_degree / 2; ++j) {
    for (Index u = 0; u < n; ++u) {
      const Index v = (u + j) % n;
      if (rng.uniform() >= rewire_prob) continue;
      // Rewire (u, v) -> (u, w); keep the old edge if u is already saturated.
      if (static_cast<Index>(present.size()) >= n * (n - 1) / 2) continue;
      bool replaced = false;
      for (int attempt = 0; attempt < 1000 && !replaced; ++attempt) {
        const Index w = static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        if (w == u || present.count(key(u, w))) continue;
        present.erase(key(u, v));
        present.insert(key(u, w));
        replaced = true;
      }
    }
  }

  std::vector<Edge> edges;
  edges.reserve(present.size());
  for (const auto& [a, b] : present) edges.push_back({a, b, 0});

  Rng feature_rng(derive_seed(seed, 2));
  Matrix features(n, 2);
  for (Index i = 0; i < n; ++i) {
    features(i, 0) = feature_rng.gaussian();
    features(i, 1) = feature_rng.gaussian();
  }
  return AttributedGraph(n, std::move(edges), std::move(features));
}

// Axis coordinate rescaled to [-1, +1]; a degenerate axis maps to -1.
inline double grid_coordinate(Index i, Index size) {
  return size > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(size - 1) : -1.0;
}

// 4-neighbor lattice with coordinates rescaled to [-1, +1] as features.
inline AttributedGraph grid_graph(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid_graph: dims must be >= 1");
  const Index n = rows * cols;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(rows * (cols - 1) + cols * (rows - 1)));
  Matrix features(n, 2);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index i = r * cols + c;
      if (c + 1 < cols) edges.push_back({i, i + 1, 0});
      if (r + 1 < rows) edges.push_back({i, i + cols, 0});
      features(i, 0) = grid_coordinate(c, cols);
      features(i, 1) = grid_coordinate(r, rows);
    }
  }
  return AttributedGraph(n, std::move(edges), std::move(features));
}

}  // namespace cgnn
