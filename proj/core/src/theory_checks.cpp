#include "modeclust/theory_checks.hpp"

#include "modeclust/parallel.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace modeclust {

std::string_view to_string(CheckStatus s) noexcept {
  switch (s) {
    case CheckStatus::ok: return "ok";
    case CheckStatus::violated: return "violated";
    case CheckStatus::precondition_failed: return "precondition_failed";
  }
  return "unknown";
}

void BoundCheckResult::add(BoundCase c) {
  ++checked;
  double ratio = 0.0;
  if (c.rhs > 0.0) {
    ratio = c.lhs / c.rhs;
  } else if (c.lhs > 0.0) {
    ratio = std::numeric_limits<double>::infinity();
  }
  max_slack_ratio = std::max(max_slack_ratio, ratio);
  if (c.violation) {
    ++violations;
    if (status == CheckStatus::ok) status = CheckStatus::violated;
  }
  details.push_back(std::move(c));
}

std::optional<double> log_log_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "log_log_slope: length mismatch");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::nullopt;
  const double denom = static_cast<double>(m) * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return std::nullopt;
  return (static_cast<double>(m) * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------

double flow_perturbation_bound(double eta1, double kappa2, int dim, double t) {
  require(dim >= 1 && t >= 0.0, "flow_perturbation_bound: bad arguments");
  const double rate = kappa2 * std::sqrt(static_cast<double>(dim));
  if (eta1 == 0.0) return 0.0;
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return eta1 / rate * std::exp(rate * t);
}

BoundCheckResult check_flow_perturbation(const DensityModel& p, const DensityModel& q,
                                         std::span<const Point> starts, std::span<const double> times,
                                         std::span<const Point> probe, const FlowPerturbationConfig& cfg) {
  require(p.dim() == q.dim(), "check_flow_perturbation: dimension mismatch");
  require(!probe.empty(), "check_flow_perturbation: probe set is empty");
  for (double t : times) require(t >= 0.0, "check_flow_perturbation: negative time");

  const int d = p.dim();
  FlowConfig flow = cfg.flow;
  flow.time = FlowTime::natural;
  flow.record_path = true;

  struct Pair {
    Point a, b;
    std::vector<PathSample> path_a, path_b;
  };
  std::vector<Pair> runs(starts.size() * times.size());
  parallel_for(runs.size(), cfg.threads, [&](std::size_t k) {
    const Point& x = starts[k / times.size()];
    const double t = times[k % times.size()];
    TimedFlow fa = flow_for_time(p, x, t, flow);
    TimedFlow fb = flow_for_time(q, x, t, flow);
    runs[k] = {fa.end, fb.end, std::move(fa.path), std::move(fb.path)};
  });

  std::vector<Point> probe_set(probe.begin(), probe.end());
  double eta1 = sup_discrepancy(p, q, probe_set).eta1;
  double kappa2 = landscape_stats(p, probe_set, {}).kappa2;

  BoundCheckResult result;
  for (int round = 0;; ++round) {
    result = BoundCheckResult{};
    result.name = "flow_perturbation";
    std::size_t k = 0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
      for (std::size_t ti = 0; ti < times.size(); ++ti, ++k) {
        const double lhs = (runs[k].a - runs[k].b).norm();
        // The recorded rhs already includes the integrator slack.
        const double rhs = (1.0 + cfg.slack) * flow_perturbation_bound(eta1, kappa2, d, times[ti]);
        result.add({"x" + std::to_string(s) + "_t" + std::to_string(ti), lhs, rhs, lhs > rhs});
      }
    }
    if (result.violations == 0 || round >= cfg.max_refinements) break;
    // The sup is only approximated on the probe set; add the points the two
    // flows actually visited and re-evaluate.
    for (const Pair& r : runs) {
      for (const PathSample& ps : r.path_a) probe_set.push_back(ps.x);
      for (const PathSample& ps : r.path_b) probe_set.push_back(ps.x);
    }
    eta1 = std::max(eta1, sup_discrepancy(p, q, probe_set).eta1);
    kappa2 = std::max(kappa2, landscape_stats(p, probe_set, {}).kappa2);
  }
  result.note = "eta1=" + std::to_string(eta1) + " kappa2=" + std::to_string(kappa2);
  return result;
}

// ---------------------------------------------------------------------------

double gaussian_epsilon_cap(std::span<const double> weights, double sigma, int dim) {
  require(!weights.empty() && sigma > 0.0 && dim >= 1, "gaussian_epsilon_cap: bad arguments");
  const double d = dim;
  double log_cap = std::numeric_limits<double>::infinity();
  for (double w : weights) {
    require(w > 0.0, "gaussian_epsilon_cap: weights must be positive");
    log_cap = std::min(log_cap, std::log(w) - d * (0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma) + 16.0));
  }
  return std::exp(log_cap);
}

double gaussian_required_separation(std::span<const double> weights, double sigma, int dim, double eps) {
  require(!weights.empty() && sigma > 0.0 && dim >= 1 && eps > 0.0,
          "gaussian_required_separation: bad arguments");
  const double d = dim;
  const double base = 2.0 * d * std::log(1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi))) +
                      2.0 * std::log(1.0 / eps);
  double worst = 0.0;
  for (double w : weights) worst = std::max(worst, base - 2.0 * std::log(1.0 / w));
  return 2.0 * sigma * std::sqrt(std::max(worst, 0.0));
}

ProportionInterval clopper_pearson(std::size_t events, std::size_t trials, double one_sided_alpha) {
  require(trials > 0 && events <= trials, "clopper_pearson: bad counts");
  require(one_sided_alpha > 0.0 && one_sided_alpha < 0.5, "clopper_pearson: alpha out of range");
  using boost::math::binomial_distribution;
  const auto n = static_cast<double>(trials);
  const auto k = static_cast<double>(events);
  ProportionInterval ci;
  ci.lower = binomial_distribution<>::find_lower_bound_on_p(n, k, one_sided_alpha);
  ci.upper = binomial_distribution<>::find_upper_bound_on_p(n, k, one_sided_alpha);
  return ci;
}

BoundCheckResult check_gaussian_low_density(const GaussianMixture& gm, double epsilon, std::size_t n_mc,
                                            RngStream& rng) {
  require(epsilon >= 0.0, "check_gaussian_low_density: epsilon must be non-negative");
  require(n_mc > 0, "check_gaussian_low_density: need at least one draw");
  BoundCheckResult result;
  result.name = "gaussian_low_density";
  double sigma = 0.0;
  require(gm.is_spherical(&sigma), "check_gaussian_low_density: mixture must be spherical with common sigma");

  const int d = gm.dim();
  const double bound = std::exp(-8.0 * d);
  if (epsilon == 0.0) {
    // Gaussian densities are positive everywhere.
    result.add({"eps0", 0.0, bound, false});
    result.note = "epsilon = 0: probability is zero";
    return result;
  }

  const auto weights = gm.weights();
  const double cap = gaussian_epsilon_cap(weights, sigma, d);
  const double need = gaussian_required_separation(weights, sigma, d, epsilon);
  double min_sep = std::numeric_limits<double>::infinity();
  const auto means = gm.means();
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) min_sep = std::min(min_sep, (means[i] - means[j]).norm());
  }
  if (epsilon > cap || !(min_sep > need)) {
    result.status = CheckStatus::precondition_failed;
    result.note = "precondition failed: eps=" + std::to_string(epsilon) + " cap=" + std::to_string(cap) +
                  " separation=" + std::to_string(min_sep) + " required=" + std::to_string(need);
    return result;
  }

  const double log_eps = std::log(epsilon);
  std::size_t events = 0;
  for (Point& x : gm.sample(n_mc, rng)) {
    if (gm.log_density(x) < log_eps) ++events;
  }
  // lhs is the 99% lower confidence bound on the probability, so lhs > rhs is
  // a statistically confirmed violation.
  const ProportionInterval ci = clopper_pearson(events, n_mc, 0.01);
  result.add({"cp99_lower", ci.lower, bound, ci.lower > bound});
  result.note = "events=" + std::to_string(events) + " draws=" + std::to_string(n_mc) +
                " cp99_upper=" + std::to_string(ci.upper);
  return result;
}

// ---------------------------------------------------------------------------

ChiSquareBound chi_square_tail_bound(double t, int d) {
  require(d >= 1, "chi_square_tail_bound: d must be positive");
  if (!(t >= 2.0 * d)) throw UsageError("chi_square_tail_bound: t must be at least 2d");
  ChiSquareBound b;
  b.bound = std::exp(-(t / 2.0) * (1.0 - 2.0 * std::sqrt(2.0 * d / t)));
  if (t >= 32.0 * d) b.simplified = std::exp(-t / 4.0);
  return b;
}

BoundCheckResult check_chi_square_bound(std::span<const ChiSquareCase> cases, std::size_t n_mc,
                                        RngStream& rng) {
  require(n_mc > 0, "check_chi_square_bound: need at least one draw");
  BoundCheckResult result;
  result.name = "chi_square_tail";
  for (const ChiSquareCase& c : cases) {
    const ChiSquareBound b = chi_square_tail_bound(c.t, c.d);
    std::size_t events = 0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      double s = 0.0;
      for (int k = 0; k < c.d; ++k) {
        const double z = rng.normal();
        s += z * z;
      }
      if (s > c.t) ++events;
    }
    const ProportionInterval ci = clopper_pearson(events, n_mc, 0.01);
    const std::string id = "d" + std::to_string(c.d) + "_t" + std::to_string(c.t);
    result.add({id, ci.lower, b.bound, ci.lower > b.bound});
    result.note += id + ": events=" + std::to_string(events) + " ";
    if (b.simplified) result.add({id + "_simplified", b.bound, *b.simplified, b.bound > *b.simplified});
  }
  return result;
}

// ---------------------------------------------------------------------------

CoreFlow flow_time_to_core(const DensityModel& model, const Point& x, double core_level,
                           const FlowConfig& cfg) {
  CoreFlow out;
  const ModelEval e = model.eval(x);
  out.start_density = e.density;
  if (e.density >= core_level) {
    out.time = 0.0;
    out.delta = e.gradient.stableNorm();
    out.end_density = e.density;
    return out;
  }
  FlowConfig c = cfg;
  c.record_path = false;
  const TimedFlow f = flow_until(model, x, c, std::numeric_limits<double>::infinity(),
                                 [&](const Point&, double p) { return p >= core_level; });
  out.time = f.time;
  out.delta = f.min_gradient_norm;
  out.end_density = model.density(f.end);
  out.ok = f.ok && f.stopped;
  return out;
}

namespace {

// Unit normal to the cluster boundary at b, oriented towards `inside`.
Vector boundary_normal(const DensityModel& model, const Point& b, const Point& inside) {
  const int d = model.dim();
  Vector towards = inside - b;
  if (d == 1) return towards.normalized();
  const Vector g = model.gradient(b);
  Vector n = towards;
  // The boundary is a union of flow lines, so the gradient is tangent to it.
  if (g.norm() > 1e-12 * std::max(1.0, model.density(b))) {
    n = Vector(2);
    n << -g[1], g[0];
    n.normalize();
    if (n.dot(towards) < 0.0) n = -n;
    return n;
  }
  return n.normalized();
}

}  // namespace

DeltaProfile delta_profile(const DensityModel& model, std::span<const CriticalPoint> critical_points,
                           const LabelFn& label, const LabelGrid* grid, int cluster,
                           const DeltaProfileConfig& cfg) {
  if (model.dim() > 2 || grid == nullptr) {
    throw UsageError("delta_profile: unsupported dimension (needs d <= 2 and a label grid)");
  }
  DeltaProfile out;
  out.cluster = cluster;
  const BoundaryLevel level = boundary_level(model, critical_points, label, cluster, grid);
  out.xi = level.xi;

  int seen = 0;
  for (const CriticalPoint& c : critical_points) {
    if (!c.is_mode()) continue;
    if (seen++ == cluster) out.mode_density = c.value;
  }
  out.core_offset = cfg.core_offset_fraction * (out.mode_density - out.xi);
  const double core_level = out.xi + out.core_offset;

  const auto edges = boundary_edges(*grid, cluster);
  const auto crossings = refine_boundary(*grid, edges, label);
  std::vector<std::pair<Point, Point>> anchors;  // boundary point, grid end inside the cluster
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (model.density(crossings[i]) < cfg.min_boundary_density_ratio * out.xi) continue;
    const std::size_t inside = grid->labels[edges[i].a] == cluster ? edges[i].a : edges[i].b;
    anchors.emplace_back(crossings[i], grid->points[inside]);
  }
  if (anchors.size() > cfg.max_boundary_points) {
    std::vector<std::pair<Point, Point>> thinned;
    const double stride = static_cast<double>(anchors.size()) / static_cast<double>(cfg.max_boundary_points);
    for (std::size_t k = 0; k < cfg.max_boundary_points; ++k) {
      thinned.push_back(anchors[static_cast<std::size_t>(k * stride)]);
    }
    anchors = std::move(thinned);
  }

  out.lemma7.name = "flow_time_gradient";
  std::vector<Vector> normals;
  for (const auto& [b, inside] : anchors) normals.push_back(boundary_normal(model, b, inside));

  std::vector<double> xs, ys;
  for (double delta : cfg.deltas) {
    DeltaProfileRow row;
    row.delta = delta;
    row.min_gradient_norm = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      const Point x = anchors[k].first + delta * normals[k];
      if (label(x) != cluster) {
        ++out.lemma7.skipped;
        continue;
      }
      const CoreFlow f = flow_time_to_core(model, x, core_level, cfg.flow);
      if (!f.ok) {
        ++out.lemma7.skipped;
        continue;
      }
      ++row.points;
      row.min_gradient_norm = std::min(row.min_gradient_norm, f.delta);
      row.max_flow_time = std::max(row.max_flow_time, f.time);
      const double lhs = f.time * f.delta * f.delta;
      const double rhs = out.mode_density + 1e-6;
      out.lemma7.add({"delta" + std::to_string(delta) + "_b" + std::to_string(k), lhs, rhs, lhs > rhs});
    }
    if (row.points == 0) row.min_gradient_norm = 0.0;
    out.rows.push_back(row);
    if (row.points > 0) {
      xs.push_back(delta);
      ys.push_back(row.min_gradient_norm);
    }
  }

  // Rows are compared in order of shrinking delta.
  std::vector<DeltaProfileRow> sorted = out.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.delta > b.delta; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].points == 0 || sorted[i - 1].points == 0) continue;
    if (sorted[i].min_gradient_norm > sorted[i - 1].min_gradient_norm * (1.0 + 1e-9)) out.monotone = false;
  }
  out.gamma = log_log_slope(xs, ys);
  return out;
}

// ---------------------------------------------------------------------------

LowNoiseEstimate estimate_low_noise_exponent(const GaussianMixture& gm, std::span<const double> epsilons,
                                             std::size_t n_mc, RngStream& rng) {
  require(n_mc > 0, "estimate_low_noise_exponent: need at least one draw");
  LowNoiseEstimate out;
  out.epsilons.assign(epsilons.begin(), epsilons.end());
  std::vector<double> log_p;
  log_p.reserve(n_mc);
  for (const Point& x : gm.sample(n_mc, rng)) log_p.push_back(gm.log_density(x));
  for (double eps : epsilons) {
    require(eps > 0.0, "estimate_low_noise_exponent: epsilon must be positive");
    const double le = std::log(eps);
    const auto events = std::count_if(log_p.begin(), log_p.end(), [&](double v) { return v < le; });
    out.probabilities.push_back(static_cast<double>(events) / static_cast<double>(n_mc));
  }
  out.beta = log_log_slope(out.epsilons, out.probabilities);
  return out;
}

CriticalMatch match_critical_points(std::span<const CriticalPoint> a, std::span<const CriticalPoint> b) {
  CriticalMatch m;
  m.same_count = a.size() == b.size();
  m.same_indices = m.same_count;
  std::vector<bool> used(b.size(), false);
  for (const CriticalPoint& c : a) {
    std::size_t best = b.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double dist = (b[j].location - c.location).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best == b.size()) {
      m.same_indices = false;
      m.max_displacement = std::numeric_limits<double>::infinity();
      continue;
    }
    used[best] = true;
    m.max_displacement = std::max(m.max_displacement, best_dist);
    if (b[best].morse_index != c.morse_index) m.same_indices = false;
  }
  return m;
}

}  // namespace modeclust
