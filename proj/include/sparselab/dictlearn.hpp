#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sparselab/solvers.hpp"
#include "sparselab/types.hpp"

namespace sparselab {

struct DlInit {
  enum class Kind { Random, FromDictionary };
  Kind kind = Kind::Random;
  std::uint64_t seed = 0;
  Matrix W0;  // d_y x d_h when kind == FromDictionary

  static DlInit random(std::uint64_t seed) { return {Kind::Random, seed, {}}; }
  static DlInit from_dictionary(Matrix W) {
    return {Kind::FromDictionary, 0, std::move(W)};
  }
};

struct DlConfig {
  int d_h = 0;           // code dimension (>= d_y)
  double lambda = 0.1;   // l1 weight for the inner solves
  int rounds = 50;
  SolverConfig inner;    // lambda field is overridden by `lambda`
  DlInit init;
};

struct RoundStat {
  int round = 0;
  double loss = 0;    // sum_i ||y_i - W h_i||^2 after the round's update
  double cosine = 0;  // Hungarian-matched mean |cosine| to truth (NaN if none)
};

struct LearnedDictionary {
  Matrix W;  // d_y x d_h, column norms <= 1
  std::vector<RoundStat> round_trace;
};

/// One exact dictionary step: W = Y^T H (H^T H + eps I)^{-1} with eps = 1e-8,
/// then each column projected onto the unit ball. Columns never used by any
/// code keep their previous values.
Matrix update_dictionary(const Matrix& Y, const Matrix& H, const Matrix& W_prev);

/// Alternating minimisation: FISTA codes for all rows of Y under the current
/// dictionary, then update_dictionary, for cfg.rounds rounds. `on_round` (when
/// given) receives the initial dictionary as round 0 and the dictionary after
/// each update.
LearnedDictionary dl_fista(
    const Matrix& Y, const DlConfig& cfg, const Matrix* truth = nullptr,
    const std::function<void(int, const Matrix&)>& on_round = {});

/// CSV matrix at `<base>.csv` plus JSON sidecar `<base>.json` with
/// {round, loss, cosine} of the final round.
void write_dictionary_checkpoint(const std::filesystem::path& base,
                                 const LearnedDictionary& dict);

}  // namespace sparselab
