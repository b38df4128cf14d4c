#pragma once

#include "modeclust/assignment.hpp"
#include "modeclust/density.hpp"

#include <span>

namespace modeclust {

struct MeanShiftConfig {
  double bandwidth = 1.0;  // must match the KDE's bandwidth
  int max_iters = 500;
  double step_tol = 1e-7;
  double merge_tol = 0.0;  // <= 0 selects 0.1 * bandwidth
  double grad_tol = 1e-8;
  bool keep_trajectories = false;
  int threads = 1;

  double effective_merge_tol() const { return merge_tol > 0.0 ? merge_tol : 0.1 * bandwidth; }
  void validate() const;
};

struct ShiftResult {
  Point next;
  bool ok = true;  // false when every kernel weight underflowed
};

/// One fixed-point update: the kernel-weighted mean of the samples.
/// Satisfies next - x = h^2 grad p_hat(x) / p_hat(x).
ShiftResult mean_shift_step(const KernelDensityEstimate& kde, const Point& x);

/// Iterate every seed to convergence, merge endpoints into modes by
/// single linkage at merge_tol, and label each seed by its mode.
/// Modes are ordered lexicographically by coordinates.
ClusterAssignment run_mean_shift(const KernelDensityEstimate& kde, std::span<const Point> seeds,
                                 const MeanShiftConfig& cfg);

/// Seeds default to the KDE's own samples.
ClusterAssignment run_mean_shift(const KernelDensityEstimate& kde, const MeanShiftConfig& cfg);

}  // namespace modeclust
