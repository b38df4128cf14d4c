#include "modeclust/mean_shift.hpp"

#include "modeclust/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace modeclust {

std::size_t ClusterAssignment::num_flagged() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

std::size_t ClusterAssignment::num_unresolved() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kUnresolved));
}

std::optional<bool> clustering_function(const ClusterAssignment& a, std::size_t i, std::size_t j) {
  require(i < a.size() && j < a.size(), "clustering_function: index out of range");
  if (a.labels[i] == kUnresolved || a.labels[j] == kUnresolved) return std::nullopt;
  return a.labels[i] == a.labels[j];
}

void MeanShiftConfig::validate() const {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, "MeanShiftConfig: bandwidth must be positive");
  require(max_iters >= 1, "MeanShiftConfig: max_iters must be at least 1");
  require(step_tol > 0.0 && grad_tol > 0.0, "MeanShiftConfig: tolerances must be positive");
  require(merge_tol >= 0.0, "MeanShiftConfig: merge_tol must be non-negative");
}

ShiftResult mean_shift_step(const KernelDensityEstimate& kde, const Point& x) {
  require_point(x, kde.dim(), "mean_shift_step");
  Vector w;
  const double shift = kde.shifted_weights(x, w);
  const double wsum = w.sum();
  if (kde.log_normalizer() + shift + std::log(wsum) < std::log(kDensityFloor)) {
    return {x, false};
  }
  return {(kde.samples() * w) / wsum, true};
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

bool lex_less(const Point& a, const Point& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-9) return a[i] < b[i];
  }
  return false;
}

// Newton refinement of a mean-shift endpoint onto the exact KDE maximum.
// Returns false (leaving x untouched) if the iteration leaves the merge radius
// or lands somewhere that is not a nondegenerate maximum.
bool polish_mode(const KernelDensityEstimate& kde, Point& x, double radius, double grad_tol) {
  Point y = x;
  for (int it = 0; it < 50; ++it) {
    const ModelEval e = kde.eval(y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(e.hessian);
    if (es.eigenvalues().maxCoeff() >= 0.0) return false;
    if (e.gradient.stableNorm() < 1e-3 * grad_tol) break;
    const Vector step = -(es.eigenvectors() *
                          (es.eigenvectors().transpose() * e.gradient).cwiseQuotient(es.eigenvalues()));
    y += step;
    if ((y - x).norm() > radius) return false;
    if (step.norm() < 1e-15 * (1.0 + y.norm())) break;
  }
  const ModelEval e = kde.eval(y);
  Eigen::SelfAdjointEigenSolver<Matrix> es(e.hessian, Eigen::EigenvaluesOnly);
  if (e.gradient.stableNorm() >= grad_tol || es.eigenvalues().maxCoeff() >= 0.0) return false;
  x = y;
  return true;
}

}  // namespace

ClusterAssignment run_mean_shift(const KernelDensityEstimate& kde, const MeanShiftConfig& cfg) {
  std::vector<Point> seeds;
  seeds.reserve(kde.num_samples());
  for (std::size_t i = 0; i < kde.num_samples(); ++i) seeds.push_back(kde.sample(i));
  return run_mean_shift(kde, seeds, cfg);
}

ClusterAssignment run_mean_shift(const KernelDensityEstimate& kde, std::span<const Point> seeds,
                                 const MeanShiftConfig& cfg) {
  cfg.validate();
  require(!seeds.empty(), "run_mean_shift: no seeds");
  const std::size_t n = seeds.size();
  const double merge_tol = cfg.effective_merge_tol();

  ClusterAssignment out;
  out.labels.assign(n, kUnresolved);
  out.iterations.assign(n, 0);
  out.converged.assign(n, false);
  out.flagged.assign(n, false);
  if (cfg.keep_trajectories) out.trajectories.resize(n);
  std::vector<Point> endpoints(n);

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    require_point(seeds[i], kde.dim(), "run_mean_shift");
    Point x = seeds[i];
    std::vector<Point>* path = cfg.keep_trajectories ? &out.trajectories[i] : nullptr;
    if (path) path->push_back(x);
    int it = 0;
    bool converged = false;
    while (it < cfg.max_iters) {
      const ShiftResult s = mean_shift_step(kde, x);
      if (!s.ok) break;
      ++it;
      const double moved = (s.next - x).norm();
      x = s.next;
      if (path) path->push_back(x);
      if (moved < cfg.step_tol) {
        converged = true;
        break;
      }
    }
    endpoints[i] = std::move(x);
    out.iterations[i] = it;
    out.converged[i] = converged;
  });

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.converged[i]) members.push_back(i);
  }
  // With nothing converged there is no trustworthy endpoint; fall back to all
  // of them so that a mode set still exists. Every seed stays flagged.
  if (members.empty()) {
    members.resize(n);
    std::iota(members.begin(), members.end(), 0);
  }

  UnionFind uf(members.size());
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      if ((endpoints[members[a]] - endpoints[members[b]]).norm() < merge_tol) uf.unite(a, b);
    }
  }

  // Representative per group: the endpoint with the highest density.
  std::vector<double> end_density(members.size());
  for (std::size_t a = 0; a < members.size(); ++a) end_density[a] = kde.density(endpoints[members[a]]);
  std::vector<std::size_t> reps;
  std::vector<std::size_t> group_index(members.size());
  std::vector<std::size_t> best_member;
  for (std::size_t a = 0; a < members.size(); ++a) {
    const std::size_t root = uf.find(a);
    if (root == a) {
      group_index[a] = reps.size();
      reps.push_back(a);
      best_member.push_back(a);
    }
  }
  for (std::size_t a = 0; a < members.size(); ++a) {
    const std::size_t g = group_index[uf.find(a)];
    group_index[a] = g;
    if (end_density[a] > end_density[best_member[g]]) best_member[g] = a;
  }
  std::vector<Point> mode_pts;
  for (std::size_t g = 0; g < reps.size(); ++g) {
    mode_pts.push_back(endpoints[members[best_member[g]]]);
    polish_mode(kde, mode_pts[g], merge_tol, cfg.grad_tol);
  }

  // Polishing can pull two groups onto one maximum; merge those.
  UnionFind modes_uf(mode_pts.size());
  for (std::size_t g = 0; g < mode_pts.size(); ++g) {
    for (std::size_t k = g + 1; k < mode_pts.size(); ++k) {
      if ((mode_pts[g] - mode_pts[k]).norm() < merge_tol) modes_uf.unite(g, k);
    }
  }
  std::vector<std::size_t> distinct;
  for (std::size_t g = 0; g < mode_pts.size(); ++g) {
    if (modes_uf.find(g) == g) distinct.push_back(g);
  }
  std::sort(distinct.begin(), distinct.end(),
            [&](std::size_t a, std::size_t b) { return lex_less(mode_pts[a], mode_pts[b]); });
  std::vector<int> final_index(mode_pts.size(), kUnresolved);
  for (std::size_t r = 0; r < distinct.size(); ++r) {
    out.mode_set.modes.push_back(mode_pts[distinct[r]]);
    out.mode_set.densities.push_back(kde.density(mode_pts[distinct[r]]));
  }
  for (std::size_t g = 0; g < mode_pts.size(); ++g) {
    const std::size_t root = modes_uf.find(g);
    const auto pos = std::find(distinct.begin(), distinct.end(), root) - distinct.begin();
    final_index[g] = static_cast<int>(pos);
  }

  for (std::size_t a = 0; a < members.size(); ++a) {
    out.labels[members[a]] = final_index[group_index[a]];
  }

  // Non-converged seeds take the nearest mode and keep a flag.
  for (std::size_t i = 0; i < n; ++i) {
    if (out.converged[i]) continue;
    out.flagged[i] = true;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < out.mode_set.size(); ++m) {
      const double dist = (endpoints[i] - out.mode_set.modes[m]).norm();
      if (dist < best) {
        best = dist;
        out.labels[i] = static_cast<int>(m);
      }
    }
  }
  return out;
}

}  // namespace modeclust
