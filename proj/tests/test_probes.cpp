#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sparselab/probes.hpp"
#include "sparselab/rng.hpp"

using namespace sparselab;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

Matrix random_orthogonal(int d, std::uint64_t seed) {
  return Eigen::HouseholderQR<Matrix>(random_matrix(d, d, seed)).householderQ();
}

}  // namespace

TEST_SUITE("probes") {

TEST_CASE("ridge identity task at vanishing alpha") {
  const Matrix Y = random_matrix(200, 5, 1);
  const RidgeProbe probe = fit_ridge(Y, Y, 1e-10);
  CHECK((probe.B - Matrix::Identity(5, 5)).norm() <= 1e-5);
  CHECK(probe.c.norm() <= 1e-5);
}

TEST_CASE("ridge shrinkage limit predicts column means") {
  const Matrix Y = random_matrix(100, 4, 2);
  const Matrix Z = random_matrix(100, 3, 3);
  const RidgeProbe probe = fit_ridge(Y, Z, 1e12);
  const Matrix pred = ridge_predict(probe, Y);
  const Vector means = Z.colwise().mean();
  for (int i = 0; i < 100; ++i)
    CHECK((pred.row(i).transpose() - means).norm() <= 1e-6);
  CHECK_THROWS_AS(fit_ridge(Y, Z, -1.0), std::invalid_argument);
}

TEST_CASE("ridge predictions are equivariant to orthogonal input rotation") {
  const Matrix Y = random_matrix(150, 6, 4);
  const Matrix Z = random_matrix(150, 4, 5);
  const Matrix R = random_orthogonal(6, 6);
  const RidgeProbe base = fit_ridge(Y, Z, 1e-3);
  const RidgeProbe rotated = fit_ridge(Matrix(Y * R.transpose()), Z, 1e-3);
  const Matrix p1 = ridge_predict(base, Y);
  const Matrix p2 = ridge_predict(rotated, Matrix(Y * R.transpose()));
  CHECK((p1 - p2).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("logistic separates a margin-1 toy exactly") {
  Matrix H(6, 2);
  H << -2, 0, -1.5, 1, -1, -1, 1, 0, 1.5, -1, 2, 1;
  const std::vector<int> t{0, 0, 0, 1, 1, 1};
  const LogisticProbe probe = fit_logistic(H, t, 1e-4);
  CHECK(eval_accuracy(probe, H, t) == doctest::Approx(1.0));
}

TEST_CASE("logistic on labels independent of codes is near chance") {
  const int n = 2000;
  const Matrix H = random_matrix(n, 8, 7);
  std::vector<int> t(n);
  Rng rng(8);
  for (int i = 0; i < n; ++i) t[size_t(i)] = rng.uniform() < 0.5;
  const Matrix H_test = random_matrix(n, 8, 9);
  std::vector<int> t_test(n);
  for (int i = 0; i < n; ++i) t_test[size_t(i)] = rng.uniform() < 0.5;
  const LogisticProbe probe = fit_logistic(H, t, 1e-4);
  CHECK(std::abs(eval_accuracy(probe, H_test, t_test) - 0.5) <= 0.03);
}

TEST_CASE("logistic rejects single-class training labels") {
  const Matrix H = random_matrix(10, 2, 10);
  CHECK_THROWS_AS(fit_logistic(H, std::vector<int>(10, 1), 1e-4),
                  std::invalid_argument);
}

TEST_CASE("logistic decisions are invariant to feature rescaling at l2 = 0") {
  // Labels carry noise so the unpenalised maximum-likelihood optimum is
  // finite and unique; both parameterisations then converge to it.
  const int n = 400;
  Matrix H = random_matrix(n, 3, 11);
  std::vector<int> t(n);
  Rng rng(12);
  for (int i = 0; i < n; ++i) {
    t[size_t(i)] = (H(i, 0) + 0.5 * H(i, 1) - 0.2 * H(i, 2) + 0.1) > 0;
    if (rng.uniform() < 0.08) t[size_t(i)] = 1 - t[size_t(i)];
  }
  Matrix H_scaled = H;
  H_scaled.col(1) *= 10.0;

  const LogisticProbe a = fit_logistic(H, t, 0.0);
  const LogisticProbe b = fit_logistic(H_scaled, t, 0.0);
  int same = 0;
  for (int i = 0; i < n; ++i) {
    const int pa = (a.a.dot(H.row(i)) + a.a0) > 0;
    const int pb = (b.a.dot(H_scaled.row(i)) + b.a0) > 0;
    same += pa == pb;
  }
  CHECK(same == n);
}

}  // TEST_SUITE
