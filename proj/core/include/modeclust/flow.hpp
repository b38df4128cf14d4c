#pragma once

#include "modeclust/assignment.hpp"
#include "modeclust/critical_point.hpp"
#include "modeclust/density.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace modeclust {

enum class DestKind { mode, saddle, minimum, unresolved };

std::string_view to_string(DestKind kind) noexcept;

/// Parametrization of the ascent curve. Both trace the same curve; `natural`
/// integrates x' = grad p(x) with the true flow time, `log_density` integrates
/// x' = grad log p(x), which stays well scaled where p is tiny.
enum class FlowTime { natural, log_density };

struct FlowConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Terminal test on |grad log p|, which unlike |grad p| does not vanish in
  /// the tails.
  double grad_tol = 1e-9;
  double snap_tol = 1e-4;      // snap onto a known mode within this distance
  double boundary_tol = 1e-6;  // closer than this to a known non-mode critical point: boundary
  long max_evals = 1'000'000;
  bool record_path = false;
  FlowTime time = FlowTime::log_density;

  FlowConfig tightened() const;
};

struct PathSample {
  double t = 0.0;
  Point x;
  double density = 0.0;
};

struct FlowResult {
  Point destination;
  DestKind kind = DestKind::unresolved;
  std::vector<PathSample> path;
  double terminal_gradient_norm = 0.0;  // |grad p| at the destination
  double time = 0.0;
  long evaluations = 0;
  int critical_index = -1;  // index into the supplied critical points, if snapped
};

/// Follows the ascent flow from x until it reaches a critical point.
///
/// With `known` critical points the flow snaps to a mode once within
/// snap_tol, and stops as a boundary point once within boundary_tol of a
/// saddle or minimum. Budget exhaustion or step-size underflow gives
/// DestKind::unresolved, never a guessed label.
FlowResult integrate_flow(const DensityModel& model, const Point& x, const FlowConfig& cfg,
                          std::span<const CriticalPoint> known = {});

/// Flow in natural time until `max_time` or until `stop(x, density)` holds.
struct TimedFlow {
  Point end;
  double time = 0.0;
  bool stopped = false;  // predicate fired
  bool ok = true;        // false on budget exhaustion / underflow
  long evaluations = 0;
  /// Smallest |grad p| seen at any field evaluation along the way.
  double min_gradient_norm = std::numeric_limits<double>::infinity();
  std::vector<PathSample> path;
};

using FlowPredicate = std::function<bool(const Point&, double)>;

TimedFlow flow_until(const DensityModel& model, const Point& x, const FlowConfig& cfg,
                     double max_time, const FlowPredicate& stop = {});

/// pi_x(t) for the natural-time ascent flow.
TimedFlow flow_for_time(const DensityModel& model, const Point& x, double t,
                        const FlowConfig& cfg = {});

/// Labels every point by the mode its flow reaches. Modes are the entries of
/// `critical_points` with kind mode, in order. Points that end on a boundary,
/// at an unlisted critical point, or unresolved get kUnresolved and a flag.
ClusterAssignment true_labels(const DensityModel& model, std::span<const Point> points,
                              std::span<const CriticalPoint> critical_points,
                              const FlowConfig& cfg = {}, int threads = 1);

}  // namespace modeclust
