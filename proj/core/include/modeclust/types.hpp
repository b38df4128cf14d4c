#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace modeclust {

using Point = Eigen::VectorXd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bad input from the caller: dimension mismatch, non-finite values, malformed files.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Label used for points without a resolved cluster.
inline constexpr int kUnresolved = -1;

/// Densities below this are treated as zero when forming ratios.
inline constexpr double kDensityFloor = 1e-300;

inline void require(bool cond, const std::string& what) {
  if (!cond) throw UsageError(what);
}

inline void require_point(const Point& x, int dim, const char* who) {
  if (x.size() != dim) {
    throw UsageError(std::string(who) + ": point has dimension " + std::to_string(x.size()) +
                     ", expected " + std::to_string(dim));
  }
  if (!x.allFinite()) throw UsageError(std::string(who) + ": point has non-finite coordinates");
}

}  // namespace modeclust
