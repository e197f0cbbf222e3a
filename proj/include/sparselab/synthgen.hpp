#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sparselab/rng.hpp"
#include "sparselab/types.hpp"

namespace sparselab {

struct GenConfig {
  int d_z = 0;        // latent dimension
  int k = 0;          // active latents per sample
  int d_y = 0;        // observation dimension; 0 -> cs_bound_dim(k, d_z)
  long p = 0;         // sample count
  std::uint64_t seed = 0;
};

/// Ground-truth mixing A (d_y x d_z); rows scaled to unit Euclidean norm.
struct MixingMatrix {
  Matrix entries;
  int d_y() const { return static_cast<int>(entries.rows()); }
  int d_z() const { return static_cast<int>(entries.cols()); }
};

struct Dataset {
  Matrix Z;                 // p x d_z, each row <= k nonzeros in [0,1)
  Matrix Y;                 // p x d_y, Y.row(i) = A * Z.row(i)
  std::vector<int> labels;  // 1{z_1 > 0.5}
  Split split = Split::IdTrain;
  long p() const { return Z.rows(); }
};

/// Smallest observation dimension satisfying d_y >= 2 k ln(d_h / k).
int cs_bound_dim(int k, int d_h);

MixingMatrix gen_mixing(int d_y, int d_z, std::uint64_t seed);

/// Draws p samples for the requested split.
///
/// Supports (1-based index convention of the data model, 0-based in code):
///   ID, case (a) with prob 1/2: latent 1 active, k-1 more from [2, d_z/2];
///   ID, case (b) otherwise:     latent 1 inactive, k from [2, d_z];
///   OOD:                        latent 1 active, k-1 more from [d_z/2+1, d_z].
/// Active magnitudes are i.i.d. Uniform(0,1); every sample has exactly k
/// active latents; labels are 1{z_1 > 0.5} (strict).
Dataset sample_split(const GenConfig& cfg, const MixingMatrix& A, Split split);

/// `sample_id,split,z_1..z_dz,y_1..y_dy,label`, 17 significant digits.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
void write_mixing_csv(const std::filesystem::path& path, const MixingMatrix& A);

}  // namespace sparselab
