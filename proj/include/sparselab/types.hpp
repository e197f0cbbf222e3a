#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace sparselab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a computation receives or produces non-finite values, or an
/// iterative routine diverges.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by the toy-model formulas near their poles.
class degenerate_geometry_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

enum class Split { IdTrain, IdTest, OodTest };

std::string to_string(Split s);

}  // namespace sparselab
