#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgnn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexList = std::vector<Index>;

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// All stochastic components derive their draws from 64-bit seeds through the
// helpers below, so results are reproducible bit-for-bit across runs and
// independent of the standard library's distribution implementations.
// ---------------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a stream id.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; second value cached.
  double gaussian() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cache_ = radius * std::sin(angle);
    has_cache_ = true;
    return radius * std::cos(angle);
  }

  Vector gaussian_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  // Fisher-Yates shuffle (in place).
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

// ---------------------------------------------------------------------------
// Sorted index-set helpers.
// ---------------------------------------------------------------------------

inline IndexList sorted_copy(IndexList ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline bool is_sorted_unique(const IndexList& ids) {
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] <= ids[i - 1]) return false;
  return true;
}

// Complement of a sorted index set within [0, n).
inline IndexList complement(const IndexList& ids, Index n) {
  IndexList out;
  out.reserve(static_cast<std::size_t>(n) - ids.size());
  std::size_t k = 0;
  for (Index i = 0; i < n; ++i) {
    if (k < ids.size() && ids[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

inline Vector gather(const Vector& full, const IndexList& ids) {
  Vector out(static_cast<Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out[static_cast<Index>(i)] = full[ids[i]];
  return out;
}

inline void scatter_into(const Vector& values, const IndexList& ids, Vector& full) {
  for (std::size_t i = 0; i < ids.size(); ++i) full[ids[i]] = values[static_cast<Index>(i)];
}

}  // namespace cgnn
