#include "sparselab/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sparselab/rng.hpp"

namespace sparselab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenEps = 1e-6;

void check_geometry(const ToyGeometry& g) {
  if (!g.valid())
    throw std::invalid_argument(
        "toy geometry requires 0 < phi, theta < pi and phi + theta > pi");
}

}  // namespace

bool ToyGeometry::valid() const {
  return phi > 0.0 && phi < kPi && theta > 0.0 && theta < kPi &&
         phi + theta > kPi;
}

double triangle_area(double a, double b) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("triangle_area: angles must be positive");
  if (a + b >= kPi) throw std::invalid_argument("triangle_area: a + b must be < pi");
  return std::sin(a) * std::sin(b) / (2.0 * std::sin(a + b));
}

CaseResult classify_case(const ToyGeometry& g) {
  check_geometry(g);
  // The boundary crosses the corner A1 + A3 exactly when phi + theta/2 = pi;
  // beyond it (larger angles) the crossing moves down the right edge (Case1).
  const double s = g.phi + 0.5 * g.theta;
  CaseResult r;
  r.boundary = (s == kPi);
  r.value = s > kPi ? ToyCase::Case1 : ToyCase::Case2;
  return r;
}

double analytic_ood_accuracy(const ToyGeometry& g) {
  check_geometry(g);
  const double excess = g.phi + g.theta - kPi;
  const double s = std::sin(excess);
  const double sin_phi = std::sin(g.phi);
  const double alpha = std::sin(g.theta);
  if (excess < kDegenEps || s < kDegenEps || sin_phi < kDegenEps || alpha < kDegenEps)
    throw degenerate_geometry_error("analytic_ood_accuracy: near-degenerate geometry");

  if (classify_case(g).value == ToyCase::Case1) {
    const double alpha1 = sin_phi * alpha / (2.0 * s);
    return 0.5 + alpha1 / (2.0 * alpha);
  }
  const double alpha2 = alpha * s / (2.0 * sin_phi);
  return 1.0 - alpha2 / (2.0 * alpha);
}

double simulate_ood_accuracy(const ToyGeometry& g, long n, std::uint64_t seed,
                             bool mirrored) {
  check_geometry(g);
  if (n < 1) throw std::invalid_argument("simulate_ood_accuracy: n must be >= 1");

  const double flip = mirrored ? -1.0 : 1.0;
  const double a1x = 2.0, a1y = 0.0;
  const double a2x = std::cos(g.phi), a2y = flip * std::sin(g.phi);
  const double a3x = std::cos(g.theta), a3y = -flip * std::sin(g.theta);

  // Side of the boundary line through A1/2 with direction A2. The sign at A1
  // marks the "explicit" half-plane, so the classification is reflection-safe.
  auto side = [&](double yx, double yy) {
    return a2x * yy - a2y * (yx - 0.5 * a1x);
  };
  const double s_ref = side(a1x, a1y);

  Rng rng(seed);
  long correct = 0;
  for (long i = 0; i < n; ++i) {
    const double z1 = rng.uniform();
    const double z3 = rng.uniform();
    const double yx = z1 * a1x + z3 * a3x;
    const double yy = z1 * a1y + z3 * a3y;
    const int truth = z1 > 0.5 ? 1 : 0;
    const int pred = side(yx, yy) * s_ref > 0.0 ? 1 : 0;
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace sparselab
