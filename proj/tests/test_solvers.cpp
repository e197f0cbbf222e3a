#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "sparselab/rng.hpp"
#include "sparselab/solvers.hpp"
#include "sparselab/synthgen.hpp"

using namespace sparselab;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

Matrix orthonormal(int d, std::uint64_t seed) {
  const Matrix m = random_matrix(d, d, seed);
  return Eigen::HouseholderQR<Matrix>(m).householderQ();
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("soft_threshold examples and properties") {
  Vector z(2);
  z << 0, 0;
  CHECK(Vector(soft_threshold(z, 1.0)).isZero(0.0));

  Vector v(3);
  v << 3, -2, 0.5;
  Vector expect(3);
  expect << 2, -1, 0;
  CHECK(Vector(soft_threshold(v, 1.0)) == expect);
  CHECK(Vector(soft_threshold(v, 0.0)) == v);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Vector a = random_matrix(6, 1, 100 + trial);
    Vector b = random_matrix(6, 1, 200 + trial);
    const double tau = rng.uniform();
    // 1-Lipschitz
    CHECK(Vector(soft_threshold(a, tau) - soft_threshold(b, tau)).norm() <=
          (a - b).norm() + 1e-12);
    // odd
    CHECK(Vector(soft_threshold(-a, tau) + soft_threshold(a, tau)).norm() == 0.0);
  }
}

TEST_CASE("spectral_norm_sq matches SVD") {
  const Matrix D = random_matrix(20, 50, 3);
  const double svd = D.jacobiSvd().singularValues()(0);
  CHECK(spectral_norm_sq(D) == doctest::Approx(svd * svd).epsilon(1e-6));
}

TEST_CASE("unregularised orthonormal solve reaches least squares") {
  const Matrix D = orthonormal(8, 4);
  const Vector y = random_matrix(8, 1, 9);
  SolverConfig cfg;
  cfg.lambda = 0.0;
  cfg.max_iters = 200;
  cfg.tol = 0.0;
  const SparseCode code = fista(y, D, cfg);
  CHECK((D * code.values - y).norm() <= 1e-8);
}

TEST_CASE("identity dictionary equals soft threshold, verified by perturbation") {
  const Matrix D = Matrix::Identity(3, 3);
  Vector y(3);
  y << 3, -2, 0.5;
  SolverConfig cfg;
  cfg.lambda = 1.0;
  cfg.max_iters = 400;
  cfg.tol = 1e-12;
  const SparseCode code = fista(y, D, cfg);
  Vector expect(3);
  expect << 2, -1, 0;
  CHECK((code.values - expect).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(code.support == std::vector<int>{0, 1});

  // h* must beat +-0.01 coordinate perturbations on the Lasso objective.
  const double obj = testlab::lasso_value(y, D, code.values, cfg.lambda);
  for (int j = 0; j < 3; ++j) {
    for (double delta : {0.01, -0.01}) {
      Vector perturbed = code.values;
      perturbed(j) += delta;
      CHECK(obj <= testlab::lasso_value(y, D, perturbed, cfg.lambda) + 1e-12);
    }
  }
}

TEST_CASE("warm start agrees with cold start") {
  const MixingMatrix A = gen_mixing(24, 50, 12);
  GenConfig gc{50, 5, 24, 40, 7};
  const Dataset data = sample_split(gc, A, Split::IdTrain);
  SolverConfig cfg;
  cfg.lambda = 0.1;
  cfg.max_iters = 100;
  cfg.tol = 0.0;
  const BatchCodes cold = fista_batch(data.Y, A.entries, cfg);
  Matrix init = random_matrix(40, 50, 99) * 0.3;
  const BatchCodes warm = fista_batch(data.Y, A.entries, cfg, &init);
  for (int i = 0; i < 40; ++i)
    CHECK((cold.H.row(i) - warm.H.row(i)).norm() <= 1e-4);
}

TEST_CASE("objective is non-increasing up to momentum transients") {
  const MixingMatrix A = gen_mixing(12, 30, 4);
  GenConfig gc{30, 3, 12, 1, 11};
  const Dataset data = sample_split(gc, A, Split::IdTrain);
  const Vector y = data.Y.row(0).transpose();
  SolverConfig cfg;
  cfg.lambda = 0.1;
  cfg.max_iters = 150;
  cfg.tol = 0.0;
  std::vector<double> trace;
  fista(y, A.entries, cfg, nullptr, &trace);
  REQUIRE(trace.size() > 10);
  for (size_t t = 0; t + 1 < trace.size(); ++t)
    CHECK(trace[t + 1] <= trace[t] + 1e-6);
  CHECK(trace.back() <= trace.front() + 1e-10);
}

TEST_CASE("ista and fista reach the same optimum") {
  const MixingMatrix A = gen_mixing(10, 20, 6);
  GenConfig gc{20, 2, 10, 1, 3};
  const Dataset data = sample_split(gc, A, Split::IdTrain);
  const Vector y = data.Y.row(0).transpose();
  SolverConfig fista_cfg;
  fista_cfg.lambda = 0.05;
  fista_cfg.max_iters = 2000;
  fista_cfg.tol = 1e-12;
  SolverConfig ista_cfg = fista_cfg;
  ista_cfg.momentum = false;
  const SparseCode a = fista(y, A.entries, fista_cfg);
  const SparseCode b = fista(y, A.entries, ista_cfg);
  CHECK((a.values - b.values).norm() <= 1e-5);
}

TEST_CASE("solver input validation") {
  const Matrix D = Matrix::Identity(3, 3);
  Vector y(3);
  y << 1, 2, 3;
  SolverConfig cfg;
  cfg.lambda = -0.5;
  CHECK_THROWS_AS(fista(y, D, cfg), std::invalid_argument);
  cfg.lambda = 0.1;
  Vector bad = y;
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fista(bad, D, cfg), numeric_error);
}

TEST_CASE("matching pursuit basics") {
  const Matrix I3 = Matrix::Identity(3, 3);
  Vector y(3);
  y << 2, 1, 0;
  const SparseCode code = matching_pursuit(y, I3, 2);
  CHECK((code.values - y).norm() <= 1e-12);
  CHECK(code.support == std::vector<int>{0, 1});

  const SparseCode zero = matching_pursuit(Vector::Zero(3), I3, 4);
  CHECK(zero.values.isZero(0.0));
  CHECK(zero.iters_run == 0);
}

TEST_CASE("matching pursuit inflates the first coefficient of a correlated pair") {
  // d1^T d2 = 0.5, y = 1*d1 + 0.5*d2 -> first selection picks d1 with 1.25.
  Matrix D(2, 2);
  D.col(0) << 1, 0;
  D.col(1) << 0.5, std::sqrt(3.0) / 2.0;
  const Vector y = 1.0 * D.col(0) + 0.5 * D.col(1);
  const SparseCode one = matching_pursuit(y, D, 1);
  CHECK(one.values(0) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(one.values(1) == 0.0);
}

TEST_CASE("matching pursuit residual is non-increasing in T") {
  const MixingMatrix A = gen_mixing(10, 24, 15);
  GenConfig gc{24, 3, 10, 5, 8};
  const Dataset data = sample_split(gc, A, Split::IdTrain);
  Matrix Dunit = A.entries;
  for (int c = 0; c < Dunit.cols(); ++c) Dunit.col(c).normalize();
  for (long i = 0; i < data.p(); ++i) {
    const Vector y = data.Y.row(i).transpose();
    double prev = y.norm();
    for (int T = 1; T <= 12; ++T) {
      const SparseCode code = matching_pursuit(y, Dunit, T);
      const double res = (y - Dunit * code.values).norm();
      CHECK(res <= prev + 1e-10);
      prev = res;
    }
  }
}

TEST_CASE("matching pursuit breaks ties toward the smallest index") {
  Matrix D(2, 3);
  D.col(0) << 0, 1;
  D.col(1) << 1, 0;
  D.col(2) << 1, 0;  // duplicate atom
  Vector y(2);
  y << 1, 0;
  const SparseCode code = matching_pursuit(y, D, 1);
  CHECK(code.values(1) == doctest::Approx(1.0));
  CHECK(code.values(2) == 0.0);
}

TEST_CASE("lstsq_on_support recovers consistent systems") {
  const MixingMatrix A = gen_mixing(47, 100, 33);
  GenConfig gc{100, 10, 47, 1, 44};
  const Dataset data = sample_split(gc, A, Split::IdTrain);
  const Vector y = data.Y.row(0).transpose();
  std::vector<int> truth;
  for (int j = 0; j < 100; ++j)
    if (data.Z(0, j) != 0.0) truth.push_back(j);

  const SparseCode exact = lstsq_on_support(y, A.entries, truth);
  CHECK((y - A.entries * exact.values).norm() <= 1e-9);
  CHECK((exact.values.transpose() - data.Z.row(0)).norm() <= 1e-8);
  CHECK_FALSE(exact.min_norm);

  const SparseCode empty = lstsq_on_support(y, A.entries, {});
  CHECK(empty.values.isZero(0.0));
  CHECK(std::sqrt(2.0 * empty.objective) == doctest::Approx(y.norm()));

  // A wrong support of the right size fits strictly worse.
  std::vector<int> wrong;
  for (int j = 0; j < 10; ++j) wrong.push_back(50 + j);
  bool overlaps = false;
  for (int j : wrong)
    overlaps |= std::find(truth.begin(), truth.end(), j) != truth.end();
  const SparseCode bad = lstsq_on_support(y, A.entries, wrong);
  if (!overlaps) CHECK(bad.objective > exact.objective + 1e-6);

  // Rank-deficient subdictionary flags the minimum-norm path.
  Matrix dup(4, 3);
  dup.col(0) << 1, 0, 0, 0;
  dup.col(1) << 1, 0, 0, 0;
  dup.col(2) << 0, 1, 0, 0;
  Vector y4(4);
  y4 << 2, 3, 0, 0;
  const SparseCode mn = lstsq_on_support(y4, dup, {0, 1, 2});
  CHECK(mn.min_norm);
  CHECK((dup * mn.values - y4).norm() <= 1e-12);
}

TEST_CASE("fista support matches exhaustive lasso search") {
  REQUIRE(cs_bound_dim(2, 12) <= 12);  // d_y = 12 respects the bound
  int agree = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const testlab::EquivalenceInstance inst =
        testlab::coherence_certified_instance(std::uint64_t(trial));
    SolverConfig cfg;
    cfg.lambda = 0.05;
    cfg.max_iters = 1500;
    cfg.tol = 1e-13;
    const SparseCode code = fista(inst.y, inst.D, cfg);
    const std::set<int> fista_support(code.support.begin(), code.support.end());
    const testlab::BruteLasso brute =
        testlab::brute_force_lasso(inst.y, inst.D, cfg.lambda, 2);
    if (fista_support == brute.support) ++agree;
  }
  CHECK(agree >= 190);  // >= 95% of 200
}

}  // TEST_SUITE
