#pragma once

#include <vector>

#include "sparselab/types.hpp"

namespace sparselab {

/// Supervised skyline: ridge map from observations to ground-truth latents.
struct RidgeProbe {
  Matrix B;      // d_z x d_y
  Vector c;      // d_z intercept
  double alpha = 0.0;
};

/// Closed-form ridge with intercept (columns of Z fit independently).
/// Predictions B*y + c serve as this method's codes downstream.
RidgeProbe fit_ridge(const Matrix& Y, const Matrix& Z, double alpha);

Matrix ridge_predict(const RidgeProbe& probe, const Matrix& Y);  // n x d_z

struct LogisticProbe {
  Vector a;       // weights over code dimensions
  double a0 = 0;  // intercept
};

/// l2-penalised logistic regression (intercept unpenalised), maximised by
/// full-batch gradient ascent with backtracking line search until the
/// gradient norm is <= 1e-6 or 500 iterations.
LogisticProbe fit_logistic(const Matrix& H, const std::vector<int>& t, double l2);

/// Fraction of samples with (predicted probability > 0.5) == label.
double eval_accuracy(const LogisticProbe& probe, const Matrix& H,
                     const std::vector<int>& t);

}  // namespace sparselab
