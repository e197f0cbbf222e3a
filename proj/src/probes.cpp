#include "sparselab/probes.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sparselab/solvers.hpp"

namespace sparselab {

namespace {

// log(1 + e^s) without overflow.
double log1pexp(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double sigmoid(double s) {
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

void check_labels(const Matrix& H, const std::vector<int>& t) {
  if (H.rows() != static_cast<Eigen::Index>(t.size()))
    throw std::invalid_argument("logistic: label length mismatch");
  bool pos = false, neg = false;
  for (int v : t) (v ? pos : neg) = true;
  if (!pos || !neg)
    throw std::invalid_argument("logistic: training labels contain a single class");
}

}  // namespace

RidgeProbe fit_ridge(const Matrix& Y, const Matrix& Z, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("fit_ridge: alpha must be >= 0");
  if (Y.rows() != Z.rows()) throw std::invalid_argument("fit_ridge: row count mismatch");
  if (Y.rows() < 1) throw std::invalid_argument("fit_ridge: empty training set");

  const Vector y_mean = Y.colwise().mean();
  const Vector z_mean = Z.colwise().mean();
  const Matrix Yc = Y.rowwise() - y_mean.transpose();
  const Matrix Zc = Z.rowwise() - z_mean.transpose();

  Matrix G = Yc.transpose() * Yc;
  G.diagonal().array() += alpha;
  const Matrix X = G.ldlt().solve(Yc.transpose() * Zc);  // d_y x d_z

  RidgeProbe probe;
  probe.alpha = alpha;
  probe.B = X.transpose();
  probe.c = z_mean - probe.B * y_mean;
  if (!probe.B.allFinite() || !probe.c.allFinite())
    throw numeric_error("fit_ridge: non-finite solution");
  return probe;
}

Matrix ridge_predict(const RidgeProbe& probe, const Matrix& Y) {
  return (Y * probe.B.transpose()).rowwise() + probe.c.transpose();
}

LogisticProbe fit_logistic(const Matrix& H, const std::vector<int>& t, double l2) {
  if (l2 < 0.0) throw std::invalid_argument("fit_logistic: l2 must be >= 0");
  check_labels(H, t);
  const Eigen::Index n = H.rows();
  const Eigen::Index d = H.cols();

  Vector a = Vector::Zero(d);
  double a0 = 0.0;
  Vector tv(n);
  for (Eigen::Index i = 0; i < n; ++i) tv(i) = t[static_cast<size_t>(i)];

  auto objective = [&](const Vector& w, double w0) {
    const Vector s = H * w + Vector::Constant(n, w0);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += tv(i) * s(i) - log1pexp(s(i));
    return ll - 0.5 * l2 * w.squaredNorm();
  };

  // Conservative initial step from the logistic Hessian bound 0.25 * ||H~||^2.
  Matrix Haug(n, d + 1);
  Haug.leftCols(d) = H;
  Haug.col(d).setOnes();
  const double lip = 0.25 * spectral_norm_sq(Haug) + l2;
  double step = lip > 0.0 ? 1.0 / lip : 1.0;

  double f = objective(a, a0);
  for (int it = 0; it < 500; ++it) {
    const Vector s = H * a + Vector::Constant(n, a0);
    Vector p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(s(i));
    const Vector g = H.transpose() * (tv - p) - l2 * a;
    const double g0 = (tv - p).sum();
    const double gnorm_sq = g.squaredNorm() + g0 * g0;
    if (std::sqrt(gnorm_sq) <= 1e-6) break;

    // Backtracking ascent with a growing initial guess.
    double trial = step * 2.0;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      const Vector a_new = a + trial * g;
      const double a0_new = a0 + trial * g0;
      const double f_new = objective(a_new, a0_new);
      if (f_new >= f + 1e-4 * trial * gnorm_sq) {
        a = a_new;
        a0 = a0_new;
        f = f_new;
        step = trial;
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;  // no ascent direction progress at machine precision
  }

  if (!a.allFinite() || !std::isfinite(a0))
    throw numeric_error("fit_logistic: diverged");
  return {a, a0};
}

double eval_accuracy(const LogisticProbe& probe, const Matrix& H,
                     const std::vector<int>& t) {
  if (H.rows() != static_cast<Eigen::Index>(t.size()))
    throw std::invalid_argument("eval_accuracy: label length mismatch");
  if (H.rows() == 0) return 0.0;
  long correct = 0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    const double logit = probe.a.dot(H.row(i)) + probe.a0;
    const int pred = logit > 0.0 ? 1 : 0;
    if (pred == t[static_cast<size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(H.rows());
}

}  // namespace sparselab
