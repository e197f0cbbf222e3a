#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sparselab/theory.hpp"

using namespace sparselab;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_SUITE("theory") {

TEST_CASE("triangle_area pinned values and symmetry") {
  CHECK(triangle_area(pi / 2, pi / 4) == doctest::Approx(0.5).epsilon(1e-12));
  // (3/4) / (2 * sqrt(3)/2) = sqrt(3)/4
  CHECK(triangle_area(pi / 3, pi / 3) ==
        doctest::Approx(0.43301270189221932).epsilon(1e-12));
  for (double a : {0.3, 0.7, 1.1})
    for (double b : {0.4, 0.9})
      CHECK(triangle_area(a, b) == doctest::Approx(triangle_area(b, a)));
  CHECK_THROWS_AS(triangle_area(2.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(triangle_area(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("classify_case") {
  // The ID boundary passes the corner when phi + theta/2 = pi; the paper's
  // printed inequality points the wrong way relative to its own geometry
  // (Monte-Carlo pins the orientation used here).
  CHECK(classify_case({0.6 * pi, 0.7 * pi}).value == ToyCase::Case2);   // 0.95 pi
  CHECK(classify_case({0.75 * pi, 0.75 * pi}).value == ToyCase::Case1);  // 1.125 pi
  const double eps = 1e-9;
  CHECK(classify_case({pi - eps, pi - eps}).value == ToyCase::Case1);
  CHECK_THROWS_AS(classify_case({0.2 * pi, 0.3 * pi}), std::invalid_argument);
}

TEST_CASE("analytic accuracy pinned values") {
  // Values frozen from the Monte-Carlo oracle (1e6+ samples agree to 4e-4):
  // 1 - sin(0.3pi) / (4 sin(0.6pi))
  CHECK(analytic_ood_accuracy({0.6 * pi, 0.7 * pi}) ==
        doctest::Approx(0.78733729791199).epsilon(1e-12));
  // 1/2 + sin(0.75pi) / (4 sin(0.5pi))
  CHECK(analytic_ood_accuracy({0.75 * pi, 0.75 * pi}) ==
        doctest::Approx(0.6767766952966369).epsilon(1e-12));
}

TEST_CASE("accuracy stays within (0.5, 1) on valid geometries") {
  for (double mp = 0.55; mp <= 0.96; mp += 0.05)
    for (double mt = 0.55; mt <= 0.96; mt += 0.05) {
      if ((mp + mt) * pi <= pi + 0.05) continue;
      const double acc = analytic_ood_accuracy({mp * pi, mt * pi});
      CHECK(acc > 0.5);
      CHECK(acc < 1.0);
    }
}

TEST_CASE("simulation matches the closed form") {
  const ToyGeometry g1{0.6 * pi, 0.7 * pi};
  CHECK(std::abs(simulate_ood_accuracy(g1, 1000000, 77) -
                 analytic_ood_accuracy(g1)) <= 0.002);
  const ToyGeometry g2{0.75 * pi, 0.75 * pi};
  CHECK(std::abs(simulate_ood_accuracy(g2, 1000000, 78) -
                 analytic_ood_accuracy(g2)) <= 0.002);
}

TEST_CASE("simulator edges") {
  const ToyGeometry g{0.7 * pi, 0.8 * pi};
  const double one = simulate_ood_accuracy(g, 1, 5);
  CHECK((one == 0.0 || one == 1.0));
  CHECK(simulate_ood_accuracy(g, 5000, 9) == simulate_ood_accuracy(g, 5000, 9));
  // mirrored embedding gives bit-identical results
  CHECK(simulate_ood_accuracy(g, 20000, 13) ==
        simulate_ood_accuracy(g, 20000, 13, /*mirrored=*/true));
  CHECK_THROWS_AS(simulate_ood_accuracy(g, 0, 1), std::invalid_argument);
}

TEST_CASE("degenerate geometry guard") {
  // phi + theta within 1e-6 of the pole at pi
  CHECK_THROWS_AS(analytic_ood_accuracy({0.5 * pi + 1e-9, 0.5 * pi}),
                  degenerate_geometry_error);
  CHECK_THROWS_AS(analytic_ood_accuracy({0.5 * pi, 0.5 * pi + 1e-8}),
                  degenerate_geometry_error);
  // invalid outright: phi + theta < pi
  CHECK_THROWS_AS(analytic_ood_accuracy({0.4 * pi, 0.5 * pi}), std::invalid_argument);
}

TEST_CASE("case-boundary continuity") {
  const double phi = 0.7 * pi;
  const double theta0 = 2.0 * (pi - phi);  // boundary: phi + theta/2 = pi
  const double acc_below = analytic_ood_accuracy({phi, theta0 - 2e-4});
  const double acc_above = analytic_ood_accuracy({phi, theta0 + 2e-4});
  CHECK(classify_case({phi, theta0 - 2e-4}).value == ToyCase::Case2);
  CHECK(classify_case({phi, theta0 + 2e-4}).value == ToyCase::Case1);
  CHECK(std::abs(acc_below - acc_above) <= 1e-3);
  CHECK(acc_below == doctest::Approx(0.75).epsilon(1e-3));
}

}  // TEST_SUITE
