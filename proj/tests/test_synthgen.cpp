#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sparselab/csv.hpp"
#include "sparselab/synthgen.hpp"

using namespace sparselab;

TEST_SUITE("synthgen") {

TEST_CASE("cs_bound_dim pinned values") {
  // Fig. caption value and direct scalar evaluations of ceil(2 k ln(d_h/k)).
  CHECK(cs_bound_dim(10, 100) == 47);
  CHECK(cs_bound_dim(1, 3) == 3);
  CHECK(cs_bound_dim(5, 200) == 37);  // 2*5*ln(40) = 36.888... -> 37
  CHECK(cs_bound_dim(10, 1000) == 93);

  // Independent re-evaluation of the formula for a spread of arguments.
  for (auto [k, dh] : {std::pair{3, 30}, {5, 50}, {7, 500}, {20, 2000}}) {
    const double direct = 2.0 * k * std::log(double(dh) / k);
    CHECK(cs_bound_dim(k, dh) == int(std::ceil(direct)));
  }
  CHECK_THROWS_AS(cs_bound_dim(10, 10), std::invalid_argument);
  CHECK_THROWS_AS(cs_bound_dim(0, 10), std::invalid_argument);
}

TEST_CASE("gen_mixing basics") {
  const MixingMatrix one = gen_mixing(1, 1, 5);
  CHECK(std::abs(std::abs(one.entries(0, 0)) - 1.0) < 1e-12);

  const MixingMatrix a = gen_mixing(2, 3, 0);
  const MixingMatrix b = gen_mixing(2, 3, 0);
  CHECK(a.entries == b.entries);  // bitwise determinism

  const MixingMatrix big = gen_mixing(47, 100, 7);
  for (int r = 0; r < 47; ++r)
    CHECK(std::abs(big.entries.row(r).norm() - 1.0) <= 1e-9);

  CHECK_THROWS_AS(gen_mixing(3, 2, 0), std::invalid_argument);
}

TEST_CASE("ood split supports avoid the ID-only block") {
  GenConfig cfg{6, 2, 4, 500, 21};
  const MixingMatrix A = gen_mixing(4, 6, 3);
  const Dataset ood = sample_split(cfg, A, Split::OodTest);
  for (long i = 0; i < ood.p(); ++i) {
    CHECK(ood.Z(i, 0) > 0.0);  // first latent always active
    for (int j = 1; j < 3; ++j) CHECK(ood.Z(i, j) == 0.0);
    int actives = 0;
    for (int j = 0; j < 6; ++j) actives += ood.Z(i, j) != 0.0;
    CHECK(actives == 2);
  }
}

TEST_CASE("id split: first-latent samples avoid the OOD block") {
  GenConfig cfg{12, 3, 8, 2000, 77};
  const MixingMatrix A = gen_mixing(8, 12, 3);
  const Dataset id = sample_split(cfg, A, Split::IdTrain);
  for (long i = 0; i < id.p(); ++i) {
    int actives = 0;
    for (int j = 0; j < 12; ++j) actives += id.Z(i, j) != 0.0;
    CHECK(actives == 3);  // exactly k
    if (id.Z(i, 0) != 0.0) {
      for (int j = 6; j < 12; ++j) CHECK(id.Z(i, j) == 0.0);
    }
  }
}

TEST_CASE("labels and exact mixing") {
  GenConfig cfg{10, 3, 6, 300, 9};
  const MixingMatrix A = gen_mixing(6, 10, 4);
  for (Split split : {Split::IdTrain, Split::IdTest, Split::OodTest}) {
    const Dataset d = sample_split(cfg, A, split);
    for (long i = 0; i < d.p(); ++i) {
      CHECK(d.labels[size_t(i)] == (d.Z(i, 0) > 0.5 ? 1 : 0));
      const Vector expect = A.entries * d.Z.row(i).transpose();
      CHECK((d.Y.row(i).transpose() - expect).lpNorm<Eigen::Infinity>() == 0.0);
      CHECK(d.Z.row(i).minCoeff() >= 0.0);
      CHECK(d.Z.row(i).maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("first latent is active in about half of ID samples") {
  GenConfig cfg{20, 4, 12, 100000, 1234};
  const MixingMatrix A = gen_mixing(12, 20, 8);
  const Dataset id = sample_split(cfg, A, Split::IdTrain);
  long active = 0;
  for (long i = 0; i < id.p(); ++i) active += id.Z(i, 0) != 0.0;
  const double frac = double(active) / double(id.p());
  CHECK(std::abs(frac - 0.5) <= 0.01);
}

TEST_CASE("k=1 case (a) leaves only the first latent active") {
  GenConfig cfg{4, 1, 2, 400, 5};
  const MixingMatrix A = gen_mixing(2, 4, 5);
  const Dataset id = sample_split(cfg, A, Split::IdTrain);
  for (long i = 0; i < id.p(); ++i) {
    int actives = 0;
    for (int j = 0; j < 4; ++j) actives += id.Z(i, j) != 0.0;
    CHECK(actives == 1);
  }
}

TEST_CASE("determinism and validation") {
  GenConfig cfg{8, 2, 5, 50, 99};
  const MixingMatrix A = gen_mixing(5, 8, 2);
  const Dataset a = sample_split(cfg, A, Split::IdTest);
  const Dataset b = sample_split(cfg, A, Split::IdTest);
  CHECK(a.Z == b.Z);
  CHECK(a.Y == b.Y);
  CHECK(a.labels == b.labels);

  GenConfig odd = cfg;
  odd.d_z = 7;
  CHECK_THROWS_AS(sample_split(odd, gen_mixing(5, 7, 2), Split::IdTrain),
                  std::invalid_argument);
  GenConfig toomany = cfg;
  toomany.k = 5;  // > d_z/2
  CHECK_THROWS_AS(sample_split(toomany, A, Split::IdTrain), std::invalid_argument);
}

TEST_CASE("dataset csv export") {
  GenConfig cfg{4, 2, 3, 5, 17};
  const MixingMatrix A = gen_mixing(3, 4, 17);
  const Dataset d = sample_split(cfg, A, Split::OodTest);
  const auto path = std::filesystem::temp_directory_path() / "sparselab_ds.csv";
  write_dataset_csv(path, d);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "sample_id,split,z_1,z_2,z_3,z_4,y_1,y_2,y_3,label");
  std::string line;
  long rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
    if (rows == 1) {
      const auto cells = split_csv_line(line);
      REQUIRE(cells.size() == 10);
      CHECK(cells[1] == "ood_test");
      // 17-significant-digit output round-trips exactly
      CHECK(std::stod(cells[2]) == d.Z(0, 0));
      CHECK(std::stod(cells[6]) == d.Y(0, 0));
    }
  }
  CHECK(rows == 5);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
