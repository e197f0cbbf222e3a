#include "sparselab/solvers.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sparselab/rng.hpp"

namespace sparselab {

namespace {

// Above this code dimension, forming I - eta D^T D is not worth the memory.
constexpr int kPrecomputeMaxDim = 3000;

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw numeric_error(std::string("non-finite ") + what);
}

void check_solver_args(const Matrix& Y, const Matrix& D, const SolverConfig& cfg) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("fista: lambda must be >= 0");
  if (cfg.max_iters < 0) throw std::invalid_argument("fista: max_iters must be >= 0");
  if (Y.cols() != D.rows())
    throw std::invalid_argument("fista: observation dimension != dictionary rows");
  check_finite(Y, "observations");
  check_finite(D, "dictionary");
}

std::vector<int> extract_support(const Vector& h) {
  std::vector<int> support;
  for (int j = 0; j < h.size(); ++j)
    if (std::abs(h(j)) > kSupportEps) support.push_back(j);
  return support;
}

}  // namespace

double spectral_norm_sq(const Matrix& D) {
  check_finite(D, "dictionary");
  const Eigen::Index d = D.cols();
  if (d == 0 || D.rows() == 0) throw std::invalid_argument("spectral_norm_sq: empty matrix");
  Rng rng(0x5EEDF00Dull);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = D.transpose() * (D * v);
    const double wn = w.norm();
    if (wn <= 0.0) return 0.0;
    const double lam_next = v.dot(w);
    w /= wn;
    const bool converged = std::abs(lam_next - lam) <= 1e-8 * std::max(1.0, std::abs(lam_next));
    lam = lam_next;
    v = std::move(w);
    if (converged) break;
  }
  return lam;
}

double lasso_objective(const Vector& y, const Matrix& D, const Vector& h,
                       double lambda) {
  return 0.5 * (y - D * h).squaredNorm() + lambda * h.lpNorm<1>();
}

BatchCodes fista_batch(const Matrix& Y, const Matrix& D, const SolverConfig& cfg,
                       const Matrix* init) {
  check_solver_args(Y, D, cfg);
  const Eigen::Index n = Y.rows();
  const Eigen::Index d_h = D.cols();
  if (init && (init->rows() != n || init->cols() != d_h))
    throw std::invalid_argument("fista: init shape mismatch");
  if (init) check_finite(*init, "init");

  double eta = cfg.step_size;
  if (eta <= 0.0) {
    const double sigma_sq = spectral_norm_sq(D);
    if (sigma_sq <= 0.0) throw numeric_error("fista: zero dictionary");
    // Power iteration approaches sigma_max^2 from below; the inflation keeps
    // eta <= 1/L.
    eta = 1.0 / (sigma_sq * (1.0 + 1e-6));
  }
  const double thresh = eta * cfg.lambda;

  // Column-per-sample layout for the per-iteration GEMM. The precomputed
  // W-form wins when the dictionary is not much wider than the observation
  // dimension; otherwise two thin GEMMs per iteration are cheaper.
  Matrix H = init ? Matrix(init->transpose()) : Matrix(Matrix::Zero(d_h, n));
  Matrix Q = H;

  const bool precompute =
      d_h <= kPrecomputeMaxDim && d_h <= 3 * D.rows();
  Matrix W;       // I - eta D^T D
  Matrix B;       // eta D^T Y^T
  if (precompute) {
    W = -eta * (D.transpose() * D);
    W.diagonal().array() += 1.0;
    B = eta * (D.transpose() * Y.transpose());
  }

  Vector t_momentum = Vector::Ones(n);
  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Matrix H_next;
    if (precompute) {
      H_next = soft_threshold(((W * Q) + B).eval(), thresh);
    } else {
      Matrix grad_pt = Q - eta * (D.transpose() * ((D * Q) - Y.transpose()));
      H_next = soft_threshold(grad_pt, thresh);
    }

    // Relative change, worst column.
    double worst = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double num = (H_next.col(c) - H.col(c)).norm();
      const double den = std::max(1.0, H.col(c).norm());
      worst = std::max(worst, num / den);
    }

    if (cfg.momentum) {
      for (Eigen::Index c = 0; c < n; ++c) {
        double& t = t_momentum(c);
        if (cfg.adaptive_restart && t > 1.0 &&
            (Q.col(c) - H_next.col(c)).dot(H_next.col(c) - H.col(c)) > 0.0)
          t = 1.0;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        Q.col(c) = H_next.col(c) + ((t - 1.0) / t_next) * (H_next.col(c) - H.col(c));
        t = t_next;
      }
    }
    H = std::move(H_next);
    if (!cfg.momentum) Q = H;

    if (cfg.tol > 0.0 && worst < cfg.tol) {
      ++iters;
      break;
    }
  }

  BatchCodes out;
  out.iters_run = iters;
  out.H = H.transpose();
  out.objective.resize(n);
  Matrix R = Y.transpose() - D * H;  // d_y x n residuals
  for (Eigen::Index c = 0; c < n; ++c)
    out.objective(c) = 0.5 * R.col(c).squaredNorm() + cfg.lambda * H.col(c).lpNorm<1>();
  if (!out.H.allFinite()) throw numeric_error("fista: iterates diverged");
  return out;
}

SparseCode fista(const Vector& y, const Matrix& D, const SolverConfig& cfg,
                 const Vector* init, std::vector<double>* objective_trace) {
  if (!objective_trace) {
    Matrix Y = y.transpose();
    Matrix I0;
    if (init) I0 = init->transpose();
    BatchCodes batch = fista_batch(Y, D, cfg, init ? &I0 : nullptr);
    SparseCode code;
    code.values = batch.H.row(0).transpose();
    code.support = extract_support(code.values);
    code.objective = batch.objective(0);
    code.iters_run = batch.iters_run;
    return code;
  }

  // Traced path: per-iteration objective, used by the monotonicity checks.
  check_solver_args(y.transpose(), D, cfg);
  const Eigen::Index d_h = D.cols();
  if (init) {
    if (init->size() != d_h) throw std::invalid_argument("fista: init size mismatch");
    check_finite(*init, "init");
  }
  double eta = cfg.step_size;
  if (eta <= 0.0) {
    const double sigma_sq = spectral_norm_sq(D);
    if (sigma_sq <= 0.0) throw numeric_error("fista: zero dictionary");
    eta = 1.0 / (sigma_sq * (1.0 + 1e-6));
  }
  const double thresh = eta * cfg.lambda;

  Vector h = init ? *init : Vector(Vector::Zero(d_h));
  Vector q = h;
  double t_momentum = 1.0;
  objective_trace->clear();
  objective_trace->push_back(lasso_objective(y, D, h, cfg.lambda));
  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Vector h_next = soft_threshold((q - eta * (D.transpose() * (D * q - y))).eval(), thresh);
    const double change = (h_next - h).norm() / std::max(1.0, h.norm());
    if (cfg.momentum) {
      if (cfg.adaptive_restart && t_momentum > 1.0 &&
          (q - h_next).dot(h_next - h) > 0.0)
        t_momentum = 1.0;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      q = h_next + ((t_momentum - 1.0) / t_next) * (h_next - h);
      t_momentum = t_next;
    }
    h = std::move(h_next);
    if (!cfg.momentum) q = h;
    objective_trace->push_back(lasso_objective(y, D, h, cfg.lambda));
    if (cfg.tol > 0.0 && change < cfg.tol) {
      ++iters;
      break;
    }
  }

  SparseCode code;
  code.values = h;
  code.support = extract_support(h);
  code.objective = objective_trace->back();
  code.iters_run = iters;
  if (!code.values.allFinite()) throw numeric_error("fista: iterates diverged");
  return code;
}

SparseCode matching_pursuit(const Vector& y, const Matrix& D, int T) {
  if (T < 1) throw std::invalid_argument("matching_pursuit: T must be >= 1");
  if (y.size() != D.rows())
    throw std::invalid_argument("matching_pursuit: dimension mismatch");
  check_finite(y.transpose(), "observations");
  check_finite(D, "dictionary");

  const Eigen::Index d_h = D.cols();
  Vector h = Vector::Zero(d_h);
  Vector r = y;
  const double stop = 1e-12 * std::max(1.0, y.norm());
  int steps = 0;
  for (int t = 0; t < T; ++t) {
    if (r.norm() <= stop) break;
    Vector c = D.transpose() * r;
    int j = 0;
    for (Eigen::Index i = 1; i < d_h; ++i)
      if (c(i) > c(j)) j = static_cast<int>(i);
    const double coef = c(j);
    if (coef == 0.0) break;
    h(j) += coef;
    r -= coef * D.col(j);
    ++steps;
  }

  SparseCode code;
  code.values = std::move(h);
  code.support = extract_support(code.values);
  code.objective = 0.5 * r.squaredNorm();
  code.iters_run = steps;
  return code;
}

Matrix matching_pursuit_batch(const Matrix& Y, const Matrix& D, int T) {
  if (T < 1) throw std::invalid_argument("matching_pursuit: T must be >= 1");
  if (Y.cols() != D.rows())
    throw std::invalid_argument("matching_pursuit: dimension mismatch");
  const Eigen::Index n = Y.rows();
  const Eigen::Index d_h = D.cols();
  Matrix H = Matrix::Zero(n, d_h);
  Matrix R = Y.transpose();  // d_y x n
  std::vector<double> stop(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    stop[static_cast<size_t>(i)] = 1e-12 * std::max(1.0, R.col(i).norm());
  for (int t = 0; t < T; ++t) {
    Matrix C = D.transpose() * R;  // d_h x n
    for (Eigen::Index i = 0; i < n; ++i) {
      if (R.col(i).norm() <= stop[static_cast<size_t>(i)]) continue;
      int j = 0;
      for (Eigen::Index a = 1; a < d_h; ++a)
        if (C(a, i) > C(j, i)) j = static_cast<int>(a);
      const double coef = C(j, i);
      if (coef == 0.0) continue;
      H(i, j) += coef;
      R.col(i) -= coef * D.col(j);
    }
  }
  return H;
}

SparseCode lstsq_on_support(const Vector& y, const Matrix& D,
                            const std::vector<int>& support) {
  if (y.size() != D.rows())
    throw std::invalid_argument("lstsq_on_support: dimension mismatch");
  check_finite(y.transpose(), "observations");
  check_finite(D, "dictionary");

  SparseCode code;
  code.values = Vector::Zero(D.cols());
  if (support.empty()) {
    code.objective = 0.5 * y.squaredNorm();
    return code;
  }
  for (int j : support)
    if (j < 0 || j >= D.cols())
      throw std::invalid_argument("lstsq_on_support: index out of range");

  const int s = static_cast<int>(support.size());
  Matrix Dsub(D.rows(), s);
  for (int i = 0; i < s; ++i) Dsub.col(i) = D.col(support[static_cast<size_t>(i)]);
  auto cod = Dsub.completeOrthogonalDecomposition();
  Vector hs = cod.solve(y);
  code.min_norm = cod.rank() < s;
  for (int i = 0; i < s; ++i) code.values(support[static_cast<size_t>(i)]) = hs(i);
  code.support = extract_support(code.values);
  code.objective = 0.5 * (y - Dsub * hs).squaredNorm();
  return code;
}

}  // namespace sparselab
