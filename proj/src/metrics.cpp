#include "sparselab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparselab/solvers.hpp"

namespace sparselab {

namespace {

// Min-cost assignment for an n x m cost matrix with n <= m. Returns, per row,
// the assigned column. Shortest-augmenting-path formulation with potentials.
std::vector<int> lap_rows_to_cols(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(m) + 1, 0);    // row matched to column j (1-based)
  std::vector<int> way(static_cast<size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(m) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<size_t>(j)] > 0)
      row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Centered, unit-norm columns; all-constant columns become zero columns.
Matrix standardize_columns(const Matrix& X) {
  Matrix out = X;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c).array() -= out.col(c).mean();
    const double n = out.col(c).norm();
    if (n > 1e-12)
      out.col(c) /= n;
    else
      out.col(c).setZero();
  }
  return out;
}

double rank_auc(const Vector& scores, const std::vector<int>& labels) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](int a, int b) { return scores(a) < scores(b); });
  std::vector<double> rank(static_cast<size_t>(n), 0.0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores(order[static_cast<size_t>(j + 1)]) == scores(order[static_cast<size_t>(i)])) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // ranks are 1-based
    for (int t = i; t <= j; ++t) rank[static_cast<size_t>(order[static_cast<size_t>(t)])] = avg;
    i = j + 1;
  }
  long n_pos = 0;
  double rank_pos = 0.0;
  for (int s = 0; s < n; ++s) {
    if (labels[static_cast<size_t>(s)]) {
      ++n_pos;
      rank_pos += rank[static_cast<size_t>(s)];
    }
  }
  const long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: labels contain a single class");
  const double U = rank_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return U / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

Matching hungarian(const Matrix& cost) {
  if (!cost.allFinite()) throw std::invalid_argument("hungarian: non-finite cost");
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  Matching match;
  match.code_to_latent.assign(static_cast<size_t>(n), -1);
  if (n == 0 || m == 0) return match;

  if (n <= m) {
    match.code_to_latent = lap_rows_to_cols(cost);
  } else {
    const std::vector<int> col_to_row = lap_rows_to_cols(cost.transpose());
    for (int c = 0; c < m; ++c) {
      const int r = col_to_row[static_cast<size_t>(c)];
      if (r >= 0) match.code_to_latent[static_cast<size_t>(r)] = c;
    }
  }
  for (int r = 0; r < n; ++r) {
    const int c = match.code_to_latent[static_cast<size_t>(r)];
    if (c >= 0) match.scores.push_back(cost(r, c));
  }
  return match;
}

std::pair<double, Matching> mcc(const Matrix& H, const Matrix& Z) {
  if (H.rows() != Z.rows()) throw std::invalid_argument("mcc: row count mismatch");
  if (H.rows() < 2) throw std::invalid_argument("mcc: need at least 2 samples");
  const Matrix Hn = standardize_columns(H);
  const Matrix Zn = standardize_columns(Z);
  const Matrix corr = (Hn.transpose() * Zn).cwiseAbs();
  Matching match = hungarian(Matrix(1.0 - corr.array()));
  match.scores.clear();

  // Latents that never vary on this split (e.g. the ID-only block under the
  // compositional OOD split) carry no identifiable signal and are excluded
  // from the mean; dead code columns matched to live latents still count 0.
  std::vector<char> latent_live(static_cast<size_t>(Z.cols()), 0);
  for (Eigen::Index l = 0; l < Z.cols(); ++l)
    latent_live[static_cast<size_t>(l)] = Zn.col(l).norm() > 1e-12;

  double total = 0.0;
  long count = 0;
  for (const auto& [j, l] : match.pairs()) {
    const double c = std::min(1.0, corr(j, l));
    match.scores.push_back(c);
    if (!latent_live[static_cast<size_t>(l)]) continue;
    total += c;
    ++count;
  }
  return {count ? total / static_cast<double>(count) : 0.0, match};
}

AucResult per_feature_auc(const Matrix& H_id, const std::vector<int>& t_id,
                          const Matrix& H_ood, const std::vector<int>& t_ood) {
  if (H_id.rows() != static_cast<Eigen::Index>(t_id.size()) ||
      H_ood.rows() != static_cast<Eigen::Index>(t_ood.size()))
    throw std::invalid_argument("per_feature_auc: label length mismatch");
  if (H_id.cols() != H_ood.cols())
    throw std::invalid_argument("per_feature_auc: feature count mismatch");
  auto has_both = [](const std::vector<int>& t) {
    bool pos = false, neg = false;
    for (int v : t) (v ? pos : neg) = true;
    return pos && neg;
  };
  if (!has_both(t_id) || !has_both(t_ood))
    throw std::invalid_argument("per_feature_auc: single-class split");

  AucResult out;
  double best = -1.0;
  bool best_flip = false;
  for (Eigen::Index j = 0; j < H_id.cols(); ++j) {
    const double raw = rank_auc(H_id.col(j), t_id);
    const bool flip = (1.0 - raw) > raw;
    const double oriented = flip ? 1.0 - raw : raw;
    if (oriented > best) {
      best = oriented;
      best_flip = flip;
      out.feature_index = static_cast<int>(j);
    }
  }
  out.auc_id = best;
  const double ood_raw = rank_auc(H_ood.col(out.feature_index), t_ood);
  out.auc_ood = best_flip ? 1.0 - ood_raw : ood_raw;
  return out;
}

SupportMetrics support_metrics(const Matrix& H, const Matrix& Z,
                               const Matching& matching) {
  if (H.rows() != Z.rows())
    throw std::invalid_argument("support_metrics: row count mismatch");
  if (static_cast<Eigen::Index>(matching.code_to_latent.size()) != H.cols())
    throw std::invalid_argument("support_metrics: matching size mismatch");

  long tp = 0, fp = 0, fn = 0, active_total = 0;
  const Eigen::Index n = H.rows();
  const Eigen::Index d_z = Z.cols();
  std::vector<char> predicted(static_cast<size_t>(d_z));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(predicted.begin(), predicted.end(), 0);
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      if (std::abs(H(i, j)) <= kSupportEps) continue;
      ++active_total;
      const int l = matching.code_to_latent[static_cast<size_t>(j)];
      if (l >= 0)
        predicted[static_cast<size_t>(l)] = 1;
      else
        ++fp;  // active feature with no latent counterpart
    }
    for (Eigen::Index l = 0; l < d_z; ++l) {
      const bool truly = std::abs(Z(i, l)) > kSupportEps;
      const bool pred = predicted[static_cast<size_t>(l)];
      if (pred && truly) ++tp;
      else if (pred && !truly) ++fp;
      else if (!pred && truly) ++fn;
    }
  }
  SupportMetrics out;
  out.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                            : (fn == 0 ? 1.0 : 0.0);
  out.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                         : (fp == 0 ? 1.0 : 0.0);
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  out.mean_active = static_cast<double>(active_total) / static_cast<double>(n);
  return out;
}

DictDiagnostics dict_diagnostics(const Matrix& W_hat, const Matrix& A) {
  if (W_hat.rows() != A.rows())
    throw std::invalid_argument("dict_diagnostics: row dimension mismatch");
  const Eigen::Index d_h = W_hat.cols();
  const Eigen::Index d_z = A.cols();
  Matrix cosine(d_h, d_z);
  Vector wn(d_h), an(d_z);
  for (Eigen::Index j = 0; j < d_h; ++j) wn(j) = W_hat.col(j).norm();
  for (Eigen::Index l = 0; l < d_z; ++l) an(l) = A.col(l).norm();
  for (Eigen::Index j = 0; j < d_h; ++j) {
    for (Eigen::Index l = 0; l < d_z; ++l) {
      const double den = wn(j) * an(l);
      cosine(j, l) = den > 1e-15 ? std::abs(W_hat.col(j).dot(A.col(l))) / den : 0.0;
    }
  }

  DictDiagnostics out;
  out.matching = hungarian(Matrix(1.0 - cosine.array()));
  out.matching.scores.clear();
  double sum_cos = 0, sum_angle = 0, sum_ratio = 0;
  long count = 0;
  for (const auto& [j, l] : out.matching.pairs()) {
    DictDiagnostics::Column col;
    col.code_col = j;
    col.latent_col = l;
    col.zero_column = wn(j) <= 1e-15;
    col.cosine = std::min(1.0, cosine(j, l));
    col.angle = std::acos(std::clamp(col.cosine, 0.0, 1.0));
    col.norm_ratio = (an(l) > 1e-15 && !col.zero_column) ? wn(j) / an(l) : 0.0;
    out.matching.scores.push_back(col.cosine);
    sum_cos += col.cosine;
    sum_angle += col.angle;
    sum_ratio += col.norm_ratio;
    ++count;
    out.per_column.push_back(col);
  }
  if (count) {
    out.mean_cosine = sum_cos / static_cast<double>(count);
    out.mean_angle = sum_angle / static_cast<double>(count);
    out.mean_norm_ratio = sum_ratio / static_cast<double>(count);
  }
  return out;
}

}  // namespace sparselab
