#pragma once

#include "cgnn/params.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <concepts>
#include <limits>
#include <thread>

namespace cgnn {

template <typename Op>
concept SymmetricLinearOperator = requires(const Op& op, const Vector& v) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.apply(v) } -> std::convertible_to<Vector>;
};

// Hyperparameters of all stochastic estimation: probe count T, Lanczos steps k,
// CG stopping rule and the seed that derives every probe stream. `threads`
// controls how many probes run concurrently; per-probe results are identical
// for any thread count and the reduction order is fixed, so estimates are
// reproducible bit-for-bit regardless of parallelism.
struct EstimatorConfig {
  int probes = 128;
  int lanczos_steps = 32;
  double cg_tolerance = 1e-6;
  int cg_max_iters = 256;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    if (probes < 1) throw std::invalid_argument("estimator: probes must be >= 1");
    if (lanczos_steps < 1) throw std::invalid_argument("estimator: lanczos_steps must be >= 1");
    if (!(cg_tolerance > 0.0)) throw std::invalid_argument("estimator: tolerance must be > 0");
    if (cg_max_iters < 1) throw std::invalid_argument("estimator: cg_max_iters must be >= 1");
  }

  EstimatorConfig with_seed(std::uint64_t s) const {
    EstimatorConfig c = *this;
    c.seed = s;
    return c;
  }
};

// Runs fn(t) for t in [0, count) on cfg.threads threads. fn must only touch
// per-t state; the caller aggregates afterwards in t order.
template <typename Fn>
void for_each_probe(int count, int threads, Fn&& fn) {
  const int workers = std::max(1, threads);
  if (workers == 1 || count <= 1) {
    for (int t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= count) return;
      fn(t);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = std::min(workers, count);
  pool.reserve(static_cast<std::size_t>(spawn));
  for (int i = 0; i < spawn; ++i) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Conjugate gradients
// ---------------------------------------------------------------------------

enum class CgStatus { converged, max_iterations, breakdown };

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  CgStatus status = CgStatus::converged;

  bool converged() const { return status == CgStatus::converged; }
};

// Solves op(x) = rhs for a symmetric positive semi-definite operator. Stops at
// relative residual cfg.cg_tolerance or cfg.cg_max_iters iterations, whichever
// first; hitting the cap is reported, not thrown. Starting from x0 = 0 on a
// singular consistent system yields the minimal-norm solution. NaN/Inf in the
// iteration is reported as CgStatus::breakdown with the last finite iterate.
template <SymmetricLinearOperator Op>
CgResult conjugate_gradient(const Op& op, const Vector& rhs, const Vector& x0,
                            const EstimatorConfig& cfg) {
  if (rhs.size() != op.rows() || x0.size() != op.rows())
    throw std::invalid_argument("cg: dimension mismatch");
  CgResult result;
  result.x = x0;
  const double rhs_norm = rhs.norm();
  if (!std::isfinite(rhs_norm)) throw std::invalid_argument("cg: rhs not finite");
  if (rhs_norm == 0.0) {
    result.x.setZero();
    return result;
  }
  Vector r = rhs - op.apply(result.x);
  double rho = r.squaredNorm();
  if (std::sqrt(rho) / rhs_norm <= cfg.cg_tolerance) {
    result.relative_residual = std::sqrt(rho) / rhs_norm;
    return result;
  }
  Vector p = r;
  for (int iter = 1; iter <= cfg.cg_max_iters; ++iter) {
    const Vector ap = op.apply(p);
    const double denom = p.dot(ap);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      // Krylov space exhausted (singular consistent system) or numerical
      // failure; with exact zero curvature the current iterate is the
      // minimal-norm solution.
      result.iterations = iter - 1;
      result.relative_residual = std::sqrt(rho) / rhs_norm;
      result.status = std::isfinite(denom) && denom == 0.0 && rho / (rhs_norm * rhs_norm) <=
                              cfg.cg_tolerance * cfg.cg_tolerance
                          ? CgStatus::converged
                          : CgStatus::breakdown;
      return result;
    }
    const double step = rho / denom;
    result.x += step * p;
    r -= step * ap;
    const double rho_next = r.squaredNorm();
    result.iterations = iter;
    if (!std::isfinite(rho_next)) {
      result.relative_residual = std::numeric_limits<double>::quiet_NaN();
      result.status = CgStatus::breakdown;
      return result;
    }
    if (std::sqrt(rho_next) / rhs_norm <= cfg.cg_tolerance) {
      result.relative_residual = std::sqrt(rho_next) / rhs_norm;
      return result;
    }
    p = r + (rho_next / rho) * p;
    rho = rho_next;
  }
  result.relative_residual = std::sqrt(rho) / rhs_norm;
  result.status = CgStatus::max_iterations;
  return result;
}

// Topology-independent condition bound (1 + a) / (1 - a), a = max_i |alpha_i|.
// Applies to Gamma and, by eigenvalue interlacing, to any principal block.
inline double condition_bound(double max_abs_alpha) {
  if (!(max_abs_alpha >= 0.0) || max_abs_alpha >= 1.0)
    throw std::invalid_argument("condition_bound: need 0 <= max|alpha| < 1");
  return (1.0 + max_abs_alpha) / (1.0 - max_abs_alpha);
}

inline double condition_bound(const CorrelationParams& params) {
  return condition_bound(params.max_abs_alpha());
}

// ---------------------------------------------------------------------------
// Stochastic trace estimation
// ---------------------------------------------------------------------------

// Unbiased estimate of tr(A^{-1} B) from T Gaussian probes:
//   (1/T) sum_t (A^{-1} z_t)' (B z_t),
// where solve_a applies A^{-1} (typically a CG solve) and apply_b applies B.
// Probe t draws from the stream (cfg.seed, t), so estimates are deterministic
// given the config and independent of the thread count.
template <typename SolveA, typename ApplyB>
double hutchinson_trace(SolveA&& solve_a, ApplyB&& apply_b, Index dim,
                        const EstimatorConfig& cfg) {
  cfg.validate();
  std::vector<double> terms(static_cast<std::size_t>(cfg.probes));
  for_each_probe(cfg.probes, cfg.threads, [&](int t) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const Vector z = rng.gaussian_vector(dim);
    terms[static_cast<std::size_t>(t)] = solve_a(z).dot(apply_b(z));
  });
  double acc = 0.0;
  for (double v : terms) acc += v;
  return acc / static_cast<double>(cfg.probes);
}

// ---------------------------------------------------------------------------
// Lanczos tridiagonalization and quadrature
// ---------------------------------------------------------------------------

struct TridiagonalMatrix {
  Vector diag;     // length k
  Vector offdiag;  // length k - 1

  Index size() const { return diag.size(); }
};

// k steps of the Lanczos iteration with full reorthogonalization. Returns the
// tridiagonal projection V' op V = T; an off-diagonal entry below the
// breakdown threshold terminates early with a smaller T (not an error).
template <SymmetricLinearOperator Op>
TridiagonalMatrix lanczos_tridiagonalize(const Op& op, const Vector& v0, int k) {
  if (k < 1) throw std::invalid_argument("lanczos: k must be >= 1");
  const double v0_norm = v0.norm();
  if (!(v0_norm > 0.0)) throw std::invalid_argument("lanczos: v0 must be nonzero");
  const Index n = op.rows();
  const int steps = static_cast<int>(std::min<Index>(k, n));

  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(steps));
  basis.push_back(v0 / v0_norm);

  std::vector<double> diag;
  std::vector<double> off;
  double norm_estimate = 0.0;

  for (int j = 0; j < steps; ++j) {
    Vector w = op.apply(basis[static_cast<std::size_t>(j)]);
    const double a = basis[static_cast<std::size_t>(j)].dot(w);
    diag.push_back(a);
    w -= a * basis[static_cast<std::size_t>(j)];
    if (j > 0) w -= off.back() * basis[static_cast<std::size_t>(j - 1)];
    // Full reorthogonalization; k is small so this is cheap and keeps the
    // quadrature weights trustworthy.
    for (const Vector& q : basis) w -= q.dot(w) * q;
    norm_estimate = std::max(norm_estimate, std::abs(a) + (off.empty() ? 0.0 : off.back()));
    const double b = w.norm();
    if (j + 1 == steps) break;
    if (!(b > 1e-12 * std::max(norm_estimate, 1.0))) break;  // lucky breakdown
    off.push_back(b);
    basis.push_back(w / b);
  }

  TridiagonalMatrix t;
  t.diag = Eigen::Map<const Vector>(diag.data(), static_cast<Index>(diag.size()));
  t.offdiag = off.empty()
                  ? Vector(0)
                  : Vector(Eigen::Map<const Vector>(off.data(), static_cast<Index>(off.size())));
  return t;
}

struct TridiagonalEigen {
  Vector eigenvalues;       // ascending
  Vector first_components;  // first entry of each eigenvector; squares sum to 1
};

inline TridiagonalEigen tridiag_eig(const TridiagonalMatrix& t) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(t.diag, t.offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("tridiag_eig: did not converge");
  TridiagonalEigen out;
  out.eigenvalues = solver.eigenvalues();
  out.first_components = solver.eigenvectors().row(0).transpose();
  return out;
}

// Stochastic Lanczos quadrature estimate of log det(op) for a symmetric
// positive definite operator:
//   (1/T) sum_t n * sum_i tau_ti^2 log(xi_ti),
// with nodes xi and weights tau from the eigendecomposition of the Lanczos
// tridiagonalization started at the normalized Gaussian probe. The n scaling
// makes the estimator unbiased (z/||z|| is uniform on the sphere) and exact
// for operators proportional to the identity.
template <SymmetricLinearOperator Op>
double slq_logdet(const Op& op, const EstimatorConfig& cfg) {
  cfg.validate();
  const Index n = op.rows();
  if (n == 0) return 0.0;
  std::vector<double> terms(static_cast<std::size_t>(cfg.probes));
  std::atomic<bool> bad_node{false};
  for_each_probe(cfg.probes, cfg.threads, [&](int t) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const Vector z = rng.gaussian_vector(n);
    const TridiagonalMatrix tri = lanczos_tridiagonalize(op, z, cfg.lanczos_steps);
    const TridiagonalEigen eig = tridiag_eig(tri);
    double sum = 0.0;
    for (Index i = 0; i < eig.eigenvalues.size(); ++i) {
      if (!(eig.eigenvalues[i] > 0.0)) {
        bad_node.store(true);
        return;
      }
      sum += eig.first_components[i] * eig.first_components[i] * std::log(eig.eigenvalues[i]);
    }
    terms[static_cast<std::size_t>(t)] = static_cast<double>(n) * sum;
  });
  if (bad_node.load())
    throw std::domain_error("slq_logdet: nonpositive quadrature node (operator not PD?)");
  double acc = 0.0;
  for (double v : terms) acc += v;
  return acc / static_cast<double>(cfg.probes);
}

}  // namespace cgnn
