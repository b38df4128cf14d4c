#include "modeclust/morse.hpp"

#include "modeclust/mean_shift.hpp"
#include "modeclust/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace modeclust {

namespace {

bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-9) return a[i] < b[i];
  }
  return false;
}

bool is_root(double grad_norm, double density, double tol) {
  return grad_norm < tol * std::min(1.0, density);
}

std::optional<Point> newton_root(const DensityModel& model, const Point& seed, const NewtonConfig& cfg,
                                 double max_step, const Vector& lo, const Vector& hi) {
  Point x = seed;
  ModelEval e = model.eval(x);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double gnorm = e.gradient.stableNorm();
    if (!(e.density > kDensityFloor)) return std::nullopt;

    Eigen::SelfAdjointEigenSolver<Matrix> es(e.hessian);
    const Vector& lambda = es.eigenvalues();
    if (lambda.cwiseAbs().minCoeff() <= 0.0) return std::nullopt;
    Vector step = -(es.eigenvectors() * (es.eigenvectors().transpose() * e.gradient).cwiseQuotient(lambda));
    const double len = step.norm();
    if (!std::isfinite(len)) return std::nullopt;
    // A small gradient alone is not enough: near a flat (degenerate) critical
    // point it holds on a whole neighbourhood, while the Newton step is not small.
    if (is_root(gnorm, e.density, cfg.grad_tol) && len < cfg.step_tol * (1.0 + x.norm())) return x;
    if (len > max_step) step *= max_step / len;

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      const Point y = x + alpha * step;
      const ModelEval ey = model.eval(y);
      if (ey.gradient.stableNorm() < (1.0 - 1e-4 * alpha) * gnorm) {
        x = y;
        e = ey;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Stalled at roundoff level: accept only if already essentially a root.
      if (gnorm < cfg.grad_tol && gnorm < 1e-6 * e.density) return x;
      return std::nullopt;
    }
    if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any()) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

CriticalPoint classify_critical_point(const DensityModel& model, const Point& x, double degeneracy_tol) {
  const ModelEval e = model.eval(x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(e.hessian);
  CriticalPoint c;
  c.location = x;
  c.value = e.density;
  c.hessian_eigenvalues = es.eigenvalues();
  c.hessian_eigenvectors = es.eigenvectors();
  c.morse_index = static_cast<int>((c.hessian_eigenvalues.array() < 0.0).count());
  c.degenerate = (c.hessian_eigenvalues.cwiseAbs().array() < degeneracy_tol).any();
  return c;
}

std::vector<CriticalPoint> find_critical_points(const DensityModel& model, std::span<const Point> seeds,
                                                const NewtonConfig& cfg) {
  require(!seeds.empty(), "find_critical_points: no seeds");
  const int d = model.dim();
  Vector lo = seeds.front();
  Vector hi = seeds.front();
  for (const Point& s : seeds) {
    require_point(s, d, "find_critical_points");
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  const double diag = std::max((hi - lo).norm(), 1.0);
  const double max_step = cfg.max_step > 0.0 ? cfg.max_step : 0.1 * diag;
  lo.array() -= diag;
  hi.array() += diag;

  std::vector<std::optional<Point>> roots(seeds.size());
  parallel_for(seeds.size(), cfg.threads, [&](std::size_t i) {
    roots[i] = newton_root(model, seeds[i], cfg, max_step, lo, hi);
  });

  // Roundoff scatters the roots of a degenerate critical point over a small
  // plateau; two such roots are one point if the gradient stays at root level
  // on the segment between them.
  auto same_plateau = [&](const CriticalPoint& a, const CriticalPoint& b) {
    if (!a.degenerate || !b.degenerate) return false;
    if ((a.location - b.location).norm() > 1e3 * cfg.dedup_tol) return false;
    for (int k = 1; k < 8; ++k) {
      const Point y = a.location + (k / 8.0) * (b.location - a.location);
      const ModelEval e = model.eval(y);
      if (!is_root(e.gradient.stableNorm(), e.density, cfg.grad_tol)) return false;
    }
    return true;
  };
  std::vector<CriticalPoint> out;
  for (const auto& r : roots) {
    if (!r) continue;
    const CriticalPoint c = classify_critical_point(model, *r, cfg.degeneracy_tol);
    const bool seen = std::any_of(out.begin(), out.end(), [&](const CriticalPoint& u) {
      return (u.location - c.location).norm() < cfg.dedup_tol || same_plateau(u, c);
    });
    if (!seen) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (a.is_mode() != b.is_mode()) return a.is_mode();
    return lex_less(a.location, b.location);
  });
  return out;
}

std::vector<Point> default_critical_seeds(std::span<const Point> data, std::span<const Point> anchors,
                                          double pad) {
  std::vector<Point> seeds(data.begin(), data.end());
  seeds.insert(seeds.end(), anchors.begin(), anchors.end());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      for (int k = 1; k <= 9; ++k) {
        const double s = k / 10.0;
        seeds.push_back((1.0 - s) * anchors[i] + s * anchors[j]);
      }
    }
  }
  require(!seeds.empty(), "default_critical_seeds: no data or anchors");
  const auto d = seeds.front().size();
  if (d <= 3) {
    Vector lo = seeds.front();
    Vector hi = seeds.front();
    for (const Point& s : seeds) {
      lo = lo.cwiseMin(s);
      hi = hi.cwiseMax(s);
    }
    lo.array() -= pad;
    hi.array() += pad;
    const int per_axis = d == 1 ? 201 : d == 2 ? 41 : 13;
    auto grid = regular_grid(lo, hi, per_axis);
    seeds.insert(seeds.end(), grid.begin(), grid.end());
  }
  return seeds;
}

double mean_shift_fixed_point_gap(const KernelDensityEstimate& kde,
                                  std::span<const CriticalPoint> critical_points) {
  double gap = 0.0;
  for (const CriticalPoint& c : critical_points) {
    if (!c.is_mode()) continue;
    const ShiftResult s = mean_shift_step(kde, c.location);
    gap = std::max(gap, (s.next - c.location).norm());
  }
  return gap;
}

LabelGrid make_label_grid(const LabelFn& label, const Vector& lo, const Vector& hi, int per_axis,
                          int threads) {
  require(lo.size() >= 1 && lo.size() <= 2, "make_label_grid: only d <= 2 is supported");
  LabelGrid g;
  g.lo = lo;
  g.hi = hi;
  g.per_axis = per_axis;
  g.points = regular_grid(lo, hi, per_axis);
  g.labels.assign(g.points.size(), kUnresolved);
  parallel_for(g.points.size(), threads, [&](std::size_t i) { g.labels[i] = label(g.points[i]); });
  return g;
}

std::vector<BoundaryEdge> boundary_edges(const LabelGrid& grid, int cluster) {
  std::vector<BoundaryEdge> edges;
  const auto m = static_cast<std::size_t>(grid.per_axis);
  auto consider = [&](std::size_t a, std::size_t b) {
    const int la = grid.labels[a];
    const int lb = grid.labels[b];
    if (la == kUnresolved || lb == kUnresolved || la == lb) return;
    if (cluster >= 0 && la != cluster && lb != cluster) return;
    edges.push_back({a, b});
  };
  if (grid.dim() == 1) {
    for (std::size_t i = 0; i + 1 < m; ++i) consider(i, i + 1);
  } else {
    for (std::size_t row = 0; row < m; ++row) {
      for (std::size_t col = 0; col < m; ++col) {
        const std::size_t i = row * m + col;
        if (col + 1 < m) consider(i, i + 1);
        if (row + 1 < m) consider(i, i + m);
      }
    }
  }
  return edges;
}

std::vector<Point> refine_boundary(const LabelGrid& grid, std::span<const BoundaryEdge> edges,
                                   const LabelFn& label, int bisection_steps) {
  std::vector<Point> out;
  out.reserve(edges.size());
  for (const BoundaryEdge& e : edges) {
    Point a = grid.points[e.a];
    Point b = grid.points[e.b];
    const int la = grid.labels[e.a];
    for (int s = 0; s < bisection_steps; ++s) {
      const Point mid = 0.5 * (a + b);
      const int lm = label(mid);
      if (lm == la) {
        a = mid;
      } else if (lm == kUnresolved) {
        a = b = mid;
        break;
      } else {
        b = mid;
      }
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

BoundaryLevel boundary_level(const DensityModel& model, std::span<const CriticalPoint> critical_points,
                             const LabelFn& label, int cluster, const LabelGrid* grid) {
  BoundaryLevel out;
  std::size_t n_modes = 0;
  for (const auto& c : critical_points) n_modes += c.is_mode() ? 1 : 0;
  require(cluster >= 0 && static_cast<std::size_t>(cluster) < n_modes,
          "boundary_level: cluster index out of range");

  // A non-mode critical point lies on the closure of cluster j when one of
  // its unstable directions flows into j.
  bool found = false;
  for (std::size_t i = 0; i < critical_points.size(); ++i) {
    const CriticalPoint& c = critical_points[i];
    if (c.is_mode()) continue;
    const double eps = 1e-3 * std::max(1.0, c.location.norm() * 1e-2);
    bool touches = false;
    for (Eigen::Index k = 0; k < c.hessian_eigenvalues.size() && !touches; ++k) {
      if (c.hessian_eigenvalues[k] <= 0.0) continue;
      const Vector v = c.hessian_eigenvectors.col(k);
      touches = label(c.location + eps * v) == cluster || label(c.location - eps * v) == cluster;
    }
    if (touches) {
      out.boundary_critical.push_back(i);
      out.from_critical = found ? std::max(out.from_critical, c.value) : c.value;
      found = true;
    }
  }

  double resolution = 0.0;
  if (grid) {
    const auto edges = boundary_edges(*grid, cluster);
    if (!edges.empty()) {
      double spacing = 0.0;
      for (int k = 0; k < grid->dim(); ++k) spacing = std::max(spacing, grid->spacing(k));
      double best = 0.0;
      for (const BoundaryEdge& e : edges) {
        const double pa = model.density(grid->points[e.a]);
        const double pb = model.density(grid->points[e.b]);
        const Point mid = 0.5 * (grid->points[e.a] + grid->points[e.b]);
        best = std::max(best, model.density(mid));
        // Across the edge plus along the boundary to the next crossing.
        resolution = std::max(resolution, std::abs(pa - pb) + spacing * model.gradient(mid).stableNorm());
      }
      out.from_grid = best;
    }
  }

  if (!found && !out.from_grid) {
    out.no_boundary = true;
    out.xi = 0.0;
    return out;
  }
  out.xi = std::max(out.from_critical, out.from_grid.value_or(0.0));
  if (found && out.from_grid) {
    out.grid_disagrees = std::abs(*out.from_grid - out.from_critical) > resolution;
  }
  return out;
}

bool core_membership(const DensityModel& model, const CoreSpec& spec, const Point& x, int label) {
  if (label != spec.cluster_index) return false;
  return model.density(x) >= spec.xi + spec.offset;
}

LandscapeStats landscape_stats(const DensityModel& model, std::span<const Point> probe,
                               std::span<const CriticalPoint> critical_points) {
  require(!probe.empty(), "landscape_stats: probe set is empty");
  LandscapeStats s;
  for (const Point& x : probe) {
    const ModelEval e = model.eval(x);
    s.c_g = std::max(s.c_g, e.gradient.stableNorm());
    s.kappa2 = std::max(s.kappa2, spectral_norm_sym(e.hessian));
  }
  for (std::size_t i = 0; i < critical_points.size(); ++i) {
    for (std::size_t j = i + 1; j < critical_points.size(); ++j) {
      s.sigma_n = std::min(s.sigma_n, (critical_points[i].location - critical_points[j].location).norm());
    }
  }
  return s;
}

}  // namespace modeclust
