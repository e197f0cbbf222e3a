#pragma once

#include <vector>

#include "sparselab/types.hpp"

namespace sparselab {

/// Code entries with |h_j| above this are treated as active.
inline constexpr double kSupportEps = 1e-8;

struct SolverConfig {
  double lambda = 0.1;    // l1 weight
  int max_iters = 100;
  double step_size = 0.0; // <= 0 -> auto: 1 / sigma_max(D)^2
  double tol = 1e-7;      // relative code-change stopping threshold; 0 = run all iters
  bool momentum = true;   // FISTA; false -> ISTA
  // Reset the momentum sequence whenever it points against per-sample
  // progress (gradient-scheme adaptive restart); gives linear convergence
  // once the support settles.
  bool adaptive_restart = true;
};

struct SparseCode {
  Vector values;
  std::vector<int> support;  // ascending indices with |values| > kSupportEps
  double objective = 0.0;    // 0.5*||y - D h||^2 + lambda*||h||_1
  int iters_run = 0;
  bool min_norm = false;     // lstsq_on_support: subdictionary was rank-deficient
};

/// sign(v) .* max(|v| - tau, 0), elementwise.
template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& v, double tau) {
  return v.unaryExpr([tau](double x) {
    const double m = std::abs(x) - tau;
    return m > 0.0 ? (x < 0.0 ? -m : m) : 0.0;
  });
}

/// sigma_max(D)^2 via power iteration on D^T D (50 iterations, tol 1e-8).
double spectral_norm_sq(const Matrix& D);

/// Codes for a batch of observations against one dictionary.
struct BatchCodes {
  Matrix H;                 // n x d_h, row per sample
  Vector objective;         // final Lasso value per sample
  int iters_run = 0;
};

/// Proximal-gradient Lasso solve: iterates h <- S_{eta*lambda}(W q + b) with
/// W = I - eta D^T D and b = eta D^T y, where q is the Nesterov-extrapolated
/// point (momentum=true) or the previous iterate (ISTA). `init` defaults to
/// the zero vector. For very wide dictionaries the same update runs in the
/// matrix-free form S(q - eta D^T(D q - y)).
SparseCode fista(const Vector& y, const Matrix& D, const SolverConfig& cfg,
                 const Vector* init = nullptr,
                 std::vector<double>* objective_trace = nullptr);

/// All rows of Y (n x d_y) solved against D with shared precomputation.
/// `init` is n x d_h when given. Iterates until every column's relative
/// change is below tol or max_iters is reached.
BatchCodes fista_batch(const Matrix& Y, const Matrix& D, const SolverConfig& cfg,
                       const Matrix* init = nullptr);

/// Greedy residual pursuit: per step select j maximising d_j^T r (ties ->
/// smallest index), accumulate h_j += d_j^T r, deflate r. Atoms may repeat.
/// Early stop on (numerically) zero residual. `objective` is 0.5*||r||^2.
SparseCode matching_pursuit(const Vector& y, const Matrix& D, int T);

/// Batched matching pursuit; returns n x d_h codes.
Matrix matching_pursuit_batch(const Matrix& Y, const Matrix& D, int T);

/// Least-squares magnitudes on a fixed support; off-support entries exactly 0.
/// Rank-deficient subdictionaries yield the minimum-norm solution (flagged).
SparseCode lstsq_on_support(const Vector& y, const Matrix& D,
                            const std::vector<int>& support);

/// 0.5*||y - D h||^2 + lambda*||h||_1.
double lasso_objective(const Vector& y, const Matrix& D, const Vector& h,
                       double lambda);

}  // namespace sparselab
