#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "sparselab/metrics.hpp"
#include "sparselab/rng.hpp"
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

double assignment_cost(const Matrix& cost, const Matching& m) {
  double total = 0;
  for (const auto& [r, c] : m.pairs()) total += cost(r, c);
  return total;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hungarian pinned examples") {
  Matrix diag(3, 3);
  diag << 0.1, 5, 5, 5, 0.2, 5, 5, 5, 0.3;
  const Matching m = hungarian(diag);
  CHECK(m.code_to_latent == std::vector<int>{0, 1, 2});

  Matrix anti(2, 2);
  anti << 1, 0, 0, 1;
  const Matching m2 = hungarian(anti);
  CHECK(m2.code_to_latent == std::vector<int>{1, 0});
  CHECK(assignment_cost(anti, m2) == 0.0);
}

TEST_CASE("hungarian matches the exhaustive oracle") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Matrix cost = random_matrix(6, 6, 40 + seed);
    const Matching m = hungarian(cost);
    const double brute = testlab::brute_force_assignment(cost);
    CHECK(assignment_cost(cost, m) == doctest::Approx(brute).epsilon(1e-12));
    // injectivity over all 6 rows
    std::set<int> used;
    for (int c : m.code_to_latent) {
      CHECK(c >= 0);
      used.insert(c);
    }
    CHECK(used.size() == 6);
  }
}

TEST_CASE("hungarian on rectangular costs") {
  const Matrix wide = random_matrix(3, 5, 77);
  const Matching m = hungarian(wide);
  CHECK(assignment_cost(wide, m) ==
        doctest::Approx(testlab::brute_force_assignment(wide)).epsilon(1e-12));
  CHECK(m.pairs().size() == 3);

  const Matrix tall = random_matrix(5, 3, 78);
  const Matching mt = hungarian(tall);
  CHECK(assignment_cost(tall, mt) ==
        doctest::Approx(testlab::brute_force_assignment(tall)).epsilon(1e-12));
  CHECK(mt.pairs().size() == 3);
}

TEST_CASE("hungarian beats the identity assignment") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Matrix cost = random_matrix(7, 7, 90 + seed);
    const Matching m = hungarian(cost);
    CHECK(assignment_cost(cost, m) <= cost.trace() + 1e-12);
  }
}

TEST_CASE("mcc is invariant to permutation, positive rescaling and sign") {
  const Matrix Z = random_matrix(200, 6, 5);
  Matrix H(200, 6);
  // permutation (reversed columns) with positive scales
  for (int j = 0; j < 6; ++j) H.col(j) = Z.col(5 - j) * (0.5 + j);
  auto [score, match] = mcc(H, Z);
  CHECK(score == doctest::Approx(1.0).epsilon(1e-9));
  for (int j = 0; j < 6; ++j) CHECK(match.code_to_latent[size_t(j)] == 5 - j);

  CHECK(mcc(Matrix(-Z), Z).first == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mcc of independent noise stays low") {
  const Matrix Z = random_matrix(1000, 20, 6);
  const Matrix H = random_matrix(1000, 20, 7);
  CHECK(mcc(H, Z).first <= 0.15);
}

TEST_CASE("mcc edge cases") {
  CHECK_THROWS_AS(mcc(Matrix::Zero(1, 3), Matrix::Zero(1, 3)), std::invalid_argument);
  // constant code column correlates 0 with everything
  Matrix Z = random_matrix(50, 2, 8);
  Matrix H = Z;
  H.col(0).setConstant(3.0);
  auto [score, match] = mcc(H, Z);
  CHECK(score == doctest::Approx(0.5).epsilon(1e-9));
  (void)match;
}

TEST_CASE("per_feature_auc") {
  const int n = 200;
  Matrix H_id = random_matrix(n, 4, 9);
  Matrix H_ood = random_matrix(n, 4, 10);
  std::vector<int> t_id(n), t_ood(n);
  Rng rng(11);
  for (int i = 0; i < n; ++i) {
    t_id[size_t(i)] = rng.uniform() < 0.5;
    t_ood[size_t(i)] = rng.uniform() < 0.5;
  }
  // feature 2 equals the label on both splits
  for (int i = 0; i < n; ++i) {
    H_id(i, 2) = t_id[size_t(i)];
    H_ood(i, 2) = t_ood[size_t(i)];
  }
  const AucResult r = per_feature_auc(H_id, t_id, H_ood, t_ood);
  CHECK(r.feature_index == 2);
  CHECK(r.auc_id == doctest::Approx(1.0));
  CHECK(r.auc_ood == doctest::Approx(1.0));

  // all-constant features rank at chance
  const Matrix flat = Matrix::Zero(n, 3);
  const AucResult rc = per_feature_auc(flat, t_id, flat, t_ood);
  CHECK(rc.auc_id == doctest::Approx(0.5));
  CHECK(rc.auc_ood == doctest::Approx(0.5));

  std::vector<int> ones(n, 1);
  CHECK_THROWS_AS(per_feature_auc(H_id, ones, H_ood, t_ood), std::invalid_argument);
}

TEST_CASE("per_feature_auc selection ignores OOD labels") {
  const int n = 300;
  const Matrix H_id = random_matrix(n, 6, 21);
  const Matrix H_ood = random_matrix(n, 6, 22);
  std::vector<int> t_id(n), t_ood(n), t_ood_perm(n);
  Rng rng(23);
  for (int i = 0; i < n; ++i) {
    t_id[size_t(i)] = H_id(i, 3) > 0;  // make feature 3 informative on ID
    t_ood[size_t(i)] = rng.uniform() < 0.5;
  }
  t_ood_perm = t_ood;
  std::reverse(t_ood_perm.begin(), t_ood_perm.end());
  const AucResult a = per_feature_auc(H_id, t_id, H_ood, t_ood);
  const AucResult b = per_feature_auc(H_id, t_id, H_ood, t_ood_perm);
  CHECK(a.feature_index == b.feature_index);
  CHECK(a.auc_id == b.auc_id);
}

TEST_CASE("support metrics on identical codes") {
  const MixingMatrix A = gen_mixing(10, 16, 31);
  GenConfig gc{16, 3, 10, 100, 32};
  const Dataset d = sample_split(gc, A, Split::IdTrain);
  Matching identity;
  identity.code_to_latent.resize(16);
  for (int j = 0; j < 16; ++j) identity.code_to_latent[size_t(j)] = j;
  const SupportMetrics sm = support_metrics(d.Z, d.Z, identity);
  CHECK(sm.precision == doctest::Approx(1.0));
  CHECK(sm.recall == doctest::Approx(1.0));
  CHECK(sm.f1 == doctest::Approx(1.0));
  CHECK(sm.mean_active == doctest::Approx(3.0));
}

TEST_CASE("pooled support counts satisfy precision * mean_active = recall * k") {
  const MixingMatrix A = gen_mixing(10, 16, 41);
  GenConfig gc{16, 3, 10, 400, 42};
  const Dataset d = sample_split(gc, A, Split::IdTrain);

  // Noisy predictions with a per-sample-varying active count.
  Rng rng(43);
  Matrix H = Matrix::Zero(400, 16);
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 16; ++j) {
      if (d.Z(i, j) != 0.0 && rng.uniform() < 0.8) H(i, j) = d.Z(i, j);
      if (d.Z(i, j) == 0.0 && rng.uniform() < 0.3) H(i, j) = rng.uniform();
    }
  Matching identity;
  identity.code_to_latent.resize(16);
  for (int j = 0; j < 16; ++j) identity.code_to_latent[size_t(j)] = j;
  const SupportMetrics sm = support_metrics(H, d.Z, identity);
  CHECK(sm.precision * sm.mean_active ==
        doctest::Approx(sm.recall * 3.0).epsilon(1e-12));
}

TEST_CASE("dict_diagnostics") {
  const MixingMatrix A = gen_mixing(8, 12, 51);
  const DictDiagnostics same = dict_diagnostics(A.entries, A.entries);
  CHECK(same.mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.mean_angle == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(same.mean_norm_ratio == doctest::Approx(1.0).epsilon(1e-12));

  const DictDiagnostics scaled = dict_diagnostics(Matrix(2.0 * A.entries), A.entries);
  CHECK(scaled.mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scaled.mean_norm_ratio == doctest::Approx(2.0).epsilon(1e-12));

  Matrix with_zero = A.entries;
  with_zero.col(3).setZero();
  const DictDiagnostics z = dict_diagnostics(with_zero, A.entries);
  bool flagged = false;
  for (const auto& col : z.per_column)
    if (col.code_col == 3) {
      flagged = col.zero_column;
      CHECK(col.cosine == 0.0);
      CHECK(col.norm_ratio == 0.0);
    }
  CHECK(flagged);
}

}  // TEST_SUITE
