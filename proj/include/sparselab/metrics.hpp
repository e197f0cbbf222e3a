#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "sparselab/types.hpp"

namespace sparselab {

/// Injective map from code columns to latent columns (the min(d_h, d_z)
/// matched pairs of a rectangular assignment).
struct Matching {
  std::vector<int> code_to_latent;  // length d_h; -1 where unmatched
  std::vector<double> scores;       // matched per-pair values, pair order below
  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < static_cast<int>(code_to_latent.size()); ++j)
      if (code_to_latent[static_cast<size_t>(j)] >= 0)
        out.emplace_back(j, code_to_latent[static_cast<size_t>(j)]);
    return out;
  }
};

/// One evaluated (method, config, split-pair) result.
struct MetricRow {
  double mcc_id = 0, mcc_ood = 0;
  double auc_id = 0, auc_ood = 0;
  double acc_id = 0, acc_ood = 0;
  double support_precision = 0, support_recall = 0, support_f1 = 0;
  double mean_active = 0;  // mean nonzero count per sample (ID test)
  double dict_cosine = std::numeric_limits<double>::quiet_NaN();
  double dict_norm_ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Min-cost injective assignment of rows to columns (Jonker-Volgenant style
/// shortest augmenting paths, O(n^2 m)). Rectangular inputs match all of the
/// shorter side. `scores` holds the matched cost entries.
Matching hungarian(const Matrix& cost);

/// Mean absolute Pearson correlation over the Hungarian matching of code
/// columns to latent columns. Constant columns correlate 0 with everything.
std::pair<double, Matching> mcc(const Matrix& H, const Matrix& Z);

struct AucResult {
  double auc_id = 0.5;
  double auc_ood = 0.5;
  int feature_index = -1;
};

/// Per-dimension ROC AUC from raw activations; orientation max(a, 1-a) is
/// decided on ID, then frozen. The ID-best feature's AUC is reported on both
/// splits. OOD data never influences the selection.
AucResult per_feature_auc(const Matrix& H_id, const std::vector<int>& t_id,
                          const Matrix& H_ood, const std::vector<int>& t_ood);

struct SupportMetrics {
  double precision = 0, recall = 0, f1 = 0;
  double mean_active = 0;
};

/// Binary nonzero-pattern comparison after reindexing codes through the
/// matching; counts pooled over all samples (activation threshold 1e-8).
/// Active code dimensions without a matched latent count as false positives.
SupportMetrics support_metrics(const Matrix& H, const Matrix& Z,
                               const Matching& matching);

struct DictDiagnostics {
  double mean_cosine = 0, mean_angle = 0, mean_norm_ratio = 0;
  Matching matching;
  struct Column {
    int code_col = -1, latent_col = -1;
    double cosine = 0, angle = 0, norm_ratio = 0;
    bool zero_column = false;
  };
  std::vector<Column> per_column;
};

/// Hungarian match on (1 - |cosine|) between learned and ground-truth
/// columns; reports matched mean |cosine|, angle = arccos|cosine| and the
/// learned/true column-norm ratio.
DictDiagnostics dict_diagnostics(const Matrix& W_hat, const Matrix& A);

}  // namespace sparselab
