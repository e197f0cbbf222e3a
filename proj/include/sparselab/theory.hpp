#pragma once

#include <cstdint>

#include "sparselab/types.hpp"

namespace sparselab {

/// Planar three-atom toy model: A1 = (2,0), unit A2 at angle phi above the
/// x-axis, unit A3 at angle theta below it. Valid when 0 < phi, theta < pi
/// and phi + theta > pi (non-overlapping cones).
struct ToyGeometry {
  double phi = 0;
  double theta = 0;
  bool valid() const;
};

enum class ToyCase { Case1, Case2 };

struct CaseResult {
  ToyCase value = ToyCase::Case1;
  bool boundary = false;  // phi + theta/2 == pi exactly
};

/// Area of a triangle with a unit side and adjacent angles (a, b):
/// sin(a) sin(b) / (2 sin(a+b)).
double triangle_area(double a, double b);

/// Case1: the ID boundary crosses the OOD parallelogram's right edge at or
/// below the far corner A1 + A3 (equivalently sin(phi) <= sin(phi+theta-pi),
/// i.e. phi + theta/2 >= pi). Case2: it exits through the far edge instead.
/// Exact equality is the shared boundary and classifies as Case2, flagged.
CaseResult classify_case(const ToyGeometry& g);

/// Closed-form OOD accuracy of the perfect ID linear classifier. With
/// s = sin(phi+theta-pi) and alpha = sin(theta):
///   Case1: 1/2 + alpha1/(2 alpha),  alpha1 = sin(phi) sin(theta) / (2 s)
///   Case2: 1  - alpha2/(2 alpha),   alpha2 = sin(theta) s / (2 sin(phi))
/// Always in (0.5, 1) on valid geometries; the two branches meet at 3/4 on
/// the case boundary. Throws degenerate_geometry_error within 1e-6 of the
/// phi+theta = pi pole.
double analytic_ood_accuracy(const ToyGeometry& g);

/// Monte-Carlo estimate: draws n OOD samples (z1, z3 ~ U(0,1)), forms
/// y = z1 A1 + z3 A3 and classifies with the ID boundary through A1/2
/// parallel to A2. Points exactly on the boundary classify as label 0.
/// `mirrored` reflects both A2 and A3 across the x-axis; results are
/// identical by construction.
double simulate_ood_accuracy(const ToyGeometry& g, long n, std::uint64_t seed,
                             bool mirrored = false);

}  // namespace sparselab
