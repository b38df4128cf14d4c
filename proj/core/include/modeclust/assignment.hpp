#pragma once

#include "modeclust/types.hpp"

#include <optional>
#include <vector>

namespace modeclust {

/// Distinct modes and the density at each.
struct ModeSet {
  std::vector<Point> modes;
  std::vector<double> densities;

  std::size_t size() const noexcept { return modes.size(); }
};

/// Per-point cluster labels and the modes they refer to. Produced both by the
/// flow oracle (true clusters) and by mean shift (estimated clusters).
struct ClusterAssignment {
  std::vector<int> labels;  // index into mode_set, or kUnresolved
  ModeSet mode_set;
  std::vector<std::vector<Point>> trajectories;  // empty unless requested
  std::vector<int> iterations;
  std::vector<bool> converged;
  /// Point needs attention: non-converged mean shift seed, or flow that ended
  /// on a cluster boundary or could not be resolved.
  std::vector<bool> flagged;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_flagged() const;
  std::size_t num_unresolved() const;
};

/// c(x_i, x_j): 1 if both points share a cluster. nullopt when either point
/// is unresolved.
std::optional<bool> clustering_function(const ClusterAssignment& a, std::size_t i, std::size_t j);

}  // namespace modeclust
