#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sparselab/solvers.hpp"
#include "sparselab/types.hpp"

namespace sparselab {

enum class SaeKind { Relu, JumpRelu, TopK, Mp };

std::string to_string(SaeKind kind);
SaeKind sae_kind_from_string(const std::string& name);

/// Shallow autoencoder with a single-pass encoder and linear decoder:
///   h = sigma(W_enc (y - b_pre) + b_enc),  y_hat = W_dec h + b_pre.
/// W_dec columns are kept at unit norm throughout training. The Mp kind
/// ignores W_enc/b_enc and encodes by unrolled matching pursuit on W_dec.
struct SaeModel {
  SaeKind kind = SaeKind::Relu;
  Matrix W_enc;  // d_h x d_y
  Vector b_enc;  // d_h
  Matrix W_dec;  // d_y x d_h
  Vector b_pre;  // d_y
  Vector theta;  // d_h, JumpRelu thresholds (empty otherwise)
  int top_k = 0;     // TopK
  int mp_steps = 0;  // Mp

  int d_y() const { return static_cast<int>(W_dec.rows()); }
  int d_h() const { return static_cast<int>(W_dec.cols()); }
};

struct SaeTrainConfig {
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double gamma_reg = 1e-4;  // l1 coefficient; applied to Relu/JumpRelu only
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct EpochStat {
  int epoch = 0;
  double loss = 0;
  double mean_cosine = 0;  // NaN when no truth is supplied
};

SaeModel init_sae(SaeKind kind, int d_y, int d_h, int k_or_steps,
                  std::uint64_t seed);

/// Single-pass encoding. `objective` on the returned code is the
/// reconstruction value 0.5*||y - decode(h)||^2.
SparseCode encode(const SaeModel& model, const Vector& y);
Matrix encode_batch(const SaeModel& model, const Matrix& Y);  // n x d_h

Vector decode(const SaeModel& model, const Vector& h);
Matrix decode_batch(const SaeModel& model, const Matrix& H);  // n x d_y

/// Mean-over-batch loss ||y - y_hat||^2 + gamma*||h||_1 and its analytic
/// parameter gradients. Exposed so finite-difference checks can run against
/// exactly what the trainer uses. For TopK/Mp the discrete selection is
/// treated as constant; for JumpRelu the threshold gradient uses a
/// straight-through rectangular kernel of bandwidth 0.001.
double sae_loss(const SaeModel& model, const Matrix& Y_batch, double gamma);

struct SaeGradients {
  Matrix W_enc, W_dec;
  Vector b_enc, b_pre, theta;
  double loss = 0;
};
SaeGradients sae_gradients(const SaeModel& model, const Matrix& Y_batch,
                           double gamma);

struct SaeTrainResult {
  SaeModel model;
  std::vector<EpochStat> trace;
};

/// Mini-batch training with adaptive moment estimation. Decoder gradients
/// have their radial component removed before the step and columns are
/// renormalised to unit length after it. Deterministic given cfg.seed.
/// Throws numeric_error if the loss becomes non-finite.
SaeTrainResult train_sae(const Matrix& Y, SaeKind kind, int k_or_steps, int d_h,
                         const SaeTrainConfig& cfg, const Matrix* truth = nullptr);

/// Checkpoint: one JSON header line (kind, dims, config), then labelled CSV
/// weight blocks.
void write_sae_checkpoint(const std::filesystem::path& path, const SaeModel& model,
                          const SaeTrainConfig& cfg);
SaeModel read_sae_checkpoint(const std::filesystem::path& path);

/// `epoch,loss,mean_cosine`
void write_sae_trace_csv(const std::filesystem::path& path,
                         const std::vector<EpochStat>& trace);

}  // namespace sparselab
