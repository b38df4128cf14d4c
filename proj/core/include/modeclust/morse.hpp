#pragma once

#include "modeclust/critical_point.hpp"
#include "modeclust/density.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace modeclust {

struct NewtonConfig {
  int max_iters = 100;
  /// A root needs |grad p| < grad_tol * min(1, p), so tails where p and its
  /// gradient both vanish are never mistaken for critical points.
  double grad_tol = 1e-9;
  /// ...and the Newton step must be shorter than step_tol * (1 + |x|).
  double step_tol = 1e-7;
  double dedup_tol = 1e-6;
  double degeneracy_tol = 1e-10;
  double max_step = 0.0;  // <= 0: a tenth of the seed bounding-box diagonal
  int threads = 1;
};

/// Evaluates the Hessian at x and fills in value, index and eigen-decomposition.
CriticalPoint classify_critical_point(const DensityModel& model, const Point& x,
                                      double degeneracy_tol = 1e-10);

/// Multi-start damped Newton on the gradient with backtracking on |grad p|.
/// Seeds that diverge or stall are skipped. Roots closer than dedup_tol are
/// merged. Output: modes first, then other critical points, each group in
/// lexicographic coordinate order.
std::vector<CriticalPoint> find_critical_points(const DensityModel& model,
                                                std::span<const Point> seeds,
                                                const NewtonConfig& cfg = {});

/// Data points, anchors (e.g. mixture means), nine points on every segment
/// between two anchors, and for d <= 3 a regular grid over the padded
/// bounding box.
std::vector<Point> default_critical_seeds(std::span<const Point> data, std::span<const Point> anchors,
                                          double pad);

/// Every KDE mode must be a fixed point of the mean-shift map. Returns the
/// largest displacement |step(m) - m| over the modes.
double mean_shift_fixed_point_gap(const KernelDensityEstimate& kde,
                                  std::span<const CriticalPoint> critical_points);

/// Maps a point to its cluster (a mode ordinal) or kUnresolved.
using LabelFn = std::function<int(const Point&)>;

/// Labels on a regular grid (d <= 2); first axis fastest.
struct LabelGrid {
  Vector lo;
  Vector hi;
  int per_axis = 0;
  std::vector<Point> points;
  std::vector<int> labels;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  double spacing(int axis) const { return (hi[axis] - lo[axis]) / (per_axis - 1); }
};

LabelGrid make_label_grid(const LabelFn& label, const Vector& lo, const Vector& hi, int per_axis,
                          int threads = 1);

/// Grid edges whose two ends carry different resolved labels, one of them
/// `cluster` (or any label when cluster < 0).
struct BoundaryEdge {
  std::size_t a = 0;
  std::size_t b = 0;
};
std::vector<BoundaryEdge> boundary_edges(const LabelGrid& grid, int cluster);

/// Boundary crossing on each edge located by bisection on the labels.
std::vector<Point> refine_boundary(const LabelGrid& grid, std::span<const BoundaryEdge> edges,
                                   const LabelFn& label, int bisection_steps = 40);

struct BoundaryLevel {
  double xi = 0.0;
  double from_critical = 0.0;
  std::optional<double> from_grid;
  bool no_boundary = false;   // single cluster: xi reported as 0
  bool grid_disagrees = false;  // grid and critical-point estimates differ beyond grid resolution
  std::vector<std::size_t> boundary_critical;  // indices of critical points on the cluster's closure
};

/// xi_j, the largest density on the boundary of cluster j (j is a mode
/// ordinal). Uses non-mode critical points whose unstable directions lead into
/// cluster j, cross-checked on a label grid when one is supplied (d <= 2).
BoundaryLevel boundary_level(const DensityModel& model, std::span<const CriticalPoint> critical_points,
                             const LabelFn& label, int cluster, const LabelGrid* grid = nullptr);

/// Cluster core C_j(a) = {x in C_j : p(x) >= xi_j + a}.
struct CoreSpec {
  int cluster_index = 0;
  double xi = 0.0;
  double offset = 0.0;
};

bool core_membership(const DensityModel& model, const CoreSpec& spec, const Point& x, int label);

struct LandscapeStats {
  double c_g = 0.0;     // sup |grad p| over the probe set
  double sigma_n = std::numeric_limits<double>::infinity();  // min distance between critical points
  double kappa2 = 0.0;  // sup spectral norm of the Hessian over the probe set
};

LandscapeStats landscape_stats(const DensityModel& model, std::span<const Point> probe,
                               std::span<const CriticalPoint> critical_points);

}  // namespace modeclust
