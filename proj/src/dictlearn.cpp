#include "sparselab/dictlearn.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>

#include "sparselab/csv.hpp"
#include "sparselab/metrics.hpp"
#include "sparselab/rng.hpp"

namespace sparselab {

namespace {

Matrix random_unit_columns(int d_y, int d_h, std::uint64_t seed) {
  Rng rng(seed);
  Matrix W(d_y, d_h);
  for (int c = 0; c < d_h; ++c)
    for (int r = 0; r < d_y; ++r) W(r, c) = rng.normal();
  for (int c = 0; c < d_h; ++c) {
    const double n = W.col(c).norm();
    if (n > 0.0) W.col(c) /= n;
  }
  return W;
}

void project_columns_to_ball(Matrix& W) {
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    const double n = W.col(c).norm();
    if (n > 1.0) W.col(c) /= n;
  }
}

}  // namespace

Matrix update_dictionary(const Matrix& Y, const Matrix& H, const Matrix& W_prev) {
  if (Y.rows() != H.rows())
    throw std::invalid_argument("update_dictionary: sample count mismatch");
  if (W_prev.rows() != Y.cols() || W_prev.cols() != H.cols())
    throw std::invalid_argument("update_dictionary: dictionary shape mismatch");

  Matrix G = H.transpose() * H;
  G.diagonal().array() += 1e-8;
  Matrix W = G.ldlt().solve(H.transpose() * Y).transpose();  // d_y x d_h
  project_columns_to_ball(W);

  for (Eigen::Index j = 0; j < H.cols(); ++j) {
    if (H.col(j).cwiseAbs().maxCoeff() == 0.0) W.col(j) = W_prev.col(j);
  }
  if (!W.allFinite()) throw numeric_error("update_dictionary: non-finite solve");
  return W;
}

LearnedDictionary dl_fista(const Matrix& Y, const DlConfig& cfg,
                           const Matrix* truth,
                           const std::function<void(int, const Matrix&)>& on_round) {
  const int d_y = static_cast<int>(Y.cols());
  if (Y.rows() < 1) throw std::invalid_argument("dl_fista: empty data");
  if (cfg.rounds < 1) throw std::invalid_argument("dl_fista: rounds must be >= 1");
  if (cfg.d_h < d_y) throw std::invalid_argument("dl_fista: d_h must be >= d_y");

  LearnedDictionary out;
  if (cfg.init.kind == DlInit::Kind::Random) {
    out.W = random_unit_columns(d_y, cfg.d_h, cfg.init.seed);
  } else {
    if (cfg.init.W0.rows() != d_y || cfg.init.W0.cols() != cfg.d_h)
      throw std::invalid_argument("dl_fista: init dictionary shape mismatch");
    out.W = cfg.init.W0;
    project_columns_to_ball(out.W);
  }

  SolverConfig inner = cfg.inner;
  inner.lambda = cfg.lambda;
  if (on_round) on_round(0, out.W);

  for (int round = 1; round <= cfg.rounds; ++round) {
    const BatchCodes codes = fista_batch(Y, out.W, inner);
    out.W = update_dictionary(Y, codes.H, out.W);

    RoundStat stat;
    stat.round = round;
    stat.loss = (Y - codes.H * out.W.transpose()).squaredNorm();
    stat.cosine = truth ? dict_diagnostics(out.W, *truth).mean_cosine
                        : std::numeric_limits<double>::quiet_NaN();
    out.round_trace.push_back(stat);
    if (on_round) on_round(round, out.W);
  }
  return out;
}

void write_dictionary_checkpoint(const std::filesystem::path& base,
                                 const LearnedDictionary& dict) {
  std::filesystem::path csv = base;
  csv += ".csv";
  write_matrix_csv(csv, dict.W);

  std::filesystem::path json = base;
  json += ".json";
  std::ofstream out(json);
  if (!out) throw std::runtime_error("cannot open for writing: " + json.string());
  const RoundStat last = dict.round_trace.empty() ? RoundStat{} : dict.round_trace.back();
  out << "{\"round\": " << last.round << ", \"loss\": " << fmt_g17(last.loss)
      << ", \"cosine\": " << fmt_g17(last.cosine) << "}\n";
}

}  // namespace sparselab
