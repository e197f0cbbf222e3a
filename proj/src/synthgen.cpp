#include "sparselab/synthgen.hpp"

#include <cmath>
#include <fstream>

#include "sparselab/csv.hpp"

namespace sparselab {

std::string to_string(Split s) {
  switch (s) {
    case Split::IdTrain: return "id_train";
    case Split::IdTest: return "id_test";
    case Split::OodTest: return "ood_test";
  }
  return "unknown";
}

int cs_bound_dim(int k, int d_h) {
  if (k < 1 || k >= d_h)
    throw std::invalid_argument("cs_bound_dim: need 1 <= k < d_h");
  const double v = 2.0 * k * std::log(static_cast<double>(d_h) / k);
  return static_cast<int>(std::ceil(v));
}

MixingMatrix gen_mixing(int d_y, int d_z, std::uint64_t seed) {
  if (d_y < 1 || d_z < d_y)
    throw std::invalid_argument("gen_mixing: need 1 <= d_y <= d_z");
  Rng rng(seed);
  Matrix A(d_y, d_z);
  for (int r = 0; r < d_y; ++r)
    for (int c = 0; c < d_z; ++c) A(r, c) = rng.normal();
  for (int r = 0; r < d_y; ++r) {
    const double n = A.row(r).norm();
    if (n > 0.0) A.row(r) /= n;
  }
  return MixingMatrix{std::move(A)};
}

Dataset sample_split(const GenConfig& cfg, const MixingMatrix& A, Split split) {
  const int d_z = cfg.d_z;
  const int k = cfg.k;
  if (d_z < 2 || d_z % 2 != 0)
    throw std::invalid_argument("sample_split: d_z must be even and >= 2");
  if (k < 1 || k > d_z / 2)
    throw std::invalid_argument("sample_split: need 1 <= k <= d_z/2");
  if (k - 1 > d_z / 2 - 1)
    throw std::invalid_argument("sample_split: k-1 exceeds ID case-(a) pool");
  if (cfg.p < 1) throw std::invalid_argument("sample_split: p must be >= 1");
  if (A.d_z() != d_z)
    throw std::invalid_argument("sample_split: mixing matrix width != d_z");

  const int half = d_z / 2;
  Rng rng(cfg.seed);
  Dataset data;
  data.split = split;
  data.Z = Matrix::Zero(cfg.p, d_z);
  data.Y = Matrix(cfg.p, A.d_y());
  data.labels.resize(static_cast<size_t>(cfg.p));

  for (long i = 0; i < cfg.p; ++i) {
    std::vector<int> active;
    if (split == Split::OodTest) {
      active = rng.sample_without_replacement(half, d_z - 1, k - 1);
      active.insert(active.begin(), 0);
    } else if (rng.uniform() < 0.5) {  // case (a)
      active = rng.sample_without_replacement(1, half - 1, k - 1);
      active.insert(active.begin(), 0);
    } else {  // case (b)
      active = rng.sample_without_replacement(1, d_z - 1, k);
    }
    for (int j : active) data.Z(i, j) = rng.uniform();
    data.Y.row(i).noalias() = (A.entries * data.Z.row(i).transpose()).transpose();
    data.labels[static_cast<size_t>(i)] = data.Z(i, 0) > 0.5 ? 1 : 0;
  }
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  const int d_z = static_cast<int>(data.Z.cols());
  const int d_y = static_cast<int>(data.Y.cols());
  out << "sample_id,split";
  for (int j = 1; j <= d_z; ++j) out << ",z_" << j;
  for (int j = 1; j <= d_y; ++j) out << ",y_" << j;
  out << ",label\n";
  const std::string split_name = to_string(data.split);
  for (long i = 0; i < data.p(); ++i) {
    out << i << ',' << split_name;
    for (int j = 0; j < d_z; ++j) out << ',' << fmt_g17(data.Z(i, j));
    for (int j = 0; j < d_y; ++j) out << ',' << fmt_g17(data.Y(i, j));
    out << ',' << data.labels[static_cast<size_t>(i)] << '\n';
  }
}

void write_mixing_csv(const std::filesystem::path& path, const MixingMatrix& A) {
  write_matrix_csv(path, A.entries);
}

}  // namespace sparselab
