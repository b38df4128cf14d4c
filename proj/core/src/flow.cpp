#include "modeclust/flow.hpp"

#include "modeclust/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace modeclust {

std::string_view to_string(CriticalKind kind) noexcept {
  switch (kind) {
    case CriticalKind::mode: return "mode";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::minimum: return "minimum";
  }
  return "unknown";
}

std::string_view to_string(DestKind kind) noexcept {
  switch (kind) {
    case DestKind::mode: return "mode";
    case DestKind::saddle: return "saddle";
    case DestKind::minimum: return "minimum";
    case DestKind::unresolved: return "unresolved";
  }
  return "unknown";
}

FlowConfig FlowConfig::tightened() const {
  FlowConfig c = *this;
  c.rel_tol *= 0.01;
  c.abs_tol *= 0.01;
  c.max_evals *= 4;
  return c;
}

namespace {

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes c_i are not needed.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Accepted-step callback: return true to stop.
using AcceptFn = std::function<bool(const Point& x, double t, double log_p, const Vector& field)>;

struct RunOutcome {
  Point x;
  double t = 0.0;
  bool ok = true;
  bool stopped = false;
  long evals = 0;
  double min_gradient_norm = std::numeric_limits<double>::infinity();
};

class AscentIntegrator {
 public:
  AscentIntegrator(const DensityModel& model, const FlowConfig& cfg) : model_(model), cfg_(cfg) {}

  RunOutcome run(const Point& x0, double max_time, const AcceptFn& on_accept) {
    RunOutcome out;
    Point x = x0;
    double t = 0.0;
    double log_p = model_.log_density(x);
    Vector k1 = field(x, out);
    if (!k1.allFinite() || !std::isfinite(log_p)) {
      out.ok = false;
      out.x = x;
      return out;
    }
    if (on_accept(x, t, log_p, k1)) {
      out.stopped = true;
      out.x = x;
      out.evals = evals_;
      return out;
    }
    const double fnorm = k1.norm();
    double h = fnorm > 0.0 ? 0.05 * (1.0 + x.norm()) / fnorm : 1.0;
    h = std::min(h, max_time);

    Vector k2, k3, k4, k5, k6, k7;
    while (true) {
      if (evals_ >= cfg_.max_evals) {
        out.ok = false;
        break;
      }
      if (t >= max_time) break;
      h = std::min(h, max_time - t);
      const double h_min = 1e-13 * (1.0 + t);
      if (h < h_min && max_time - t > h_min) {
        out.ok = false;
        break;
      }

      k2 = field(x + h * (a21 * k1), out);
      k3 = field(x + h * (a31 * k1 + a32 * k2), out);
      k4 = field(x + h * (a41 * k1 + a42 * k2 + a43 * k3), out);
      k5 = field(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), out);
      k6 = field(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), out);
      const Point xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double log_pn = model_.log_density(xn);
      k7 = field(xn, out);
      const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err_norm = 0.0;
      for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double scale = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
        err_norm = std::max(err_norm, std::abs(err[i]) / scale);
      }
      if (!std::isfinite(err_norm) || !xn.allFinite()) {
        h *= 0.2;
        continue;
      }
      if (err_norm > 1.0) {
        h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
        continue;
      }
      // Ascent: reject steps that lose density beyond roundoff.
      if (log_pn < log_p - 1e-13 && h > 4.0 * h_min) {
        h *= 0.5;
        continue;
      }

      x = xn;
      t += h;
      log_p = std::max(log_p, log_pn);
      k1 = k7;
      if (on_accept(x, t, log_pn, k1)) {
        out.stopped = true;
        break;
      }
      const double grow = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    }
    out.x = x;
    out.t = t;
    out.evals = evals_;
    return out;
  }

 private:
  Vector field(const Point& x, RunOutcome& out) {
    ++evals_;
    if (cfg_.time == FlowTime::log_density) return model_.log_gradient(x);
    Vector g = model_.gradient(x);
    out.min_gradient_norm = std::min(out.min_gradient_norm, g.stableNorm());
    return g;
  }

  const DensityModel& model_;
  const FlowConfig& cfg_;
  long evals_ = 0;
};

DestKind dest_kind_of(CriticalKind k) {
  switch (k) {
    case CriticalKind::mode: return DestKind::mode;
    case CriticalKind::saddle: return DestKind::saddle;
    case CriticalKind::minimum: return DestKind::minimum;
  }
  return DestKind::unresolved;
}

}  // namespace

FlowResult integrate_flow(const DensityModel& model, const Point& x, const FlowConfig& cfg,
                          std::span<const CriticalPoint> known) {
  require_point(x, model.dim(), "integrate_flow");
  FlowResult result;
  const int d = model.dim();

  auto on_accept = [&](const Point& y, double t, double log_p, const Vector& field) {
    if (cfg.record_path) result.path.push_back({t, y, std::exp(log_p)});
    if (!known.empty()) {
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < known.size(); ++i) {
        const double dist = (known[i].location - y).norm();
        if (dist < best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      const CriticalPoint& c = known[best];
      if ((c.is_mode() && best_dist < cfg.snap_tol) || (!c.is_mode() && best_dist < cfg.boundary_tol)) {
        result.destination = c.location;
        result.kind = dest_kind_of(c.kind());
        result.critical_index = static_cast<int>(best);
        return true;
      }
    }
    const double log_grad_norm =
        cfg.time == FlowTime::log_density ? field.norm() : field.norm() / std::exp(log_p);
    if (log_grad_norm < cfg.grad_tol) {
      const ModelEval e = model.eval(y);
      Eigen::SelfAdjointEigenSolver<Matrix> es(e.hessian, Eigen::EigenvaluesOnly);
      const int index = static_cast<int>((es.eigenvalues().array() < 0.0).count());
      result.destination = y;
      result.kind = index == d ? DestKind::mode : index == 0 ? DestKind::minimum : DestKind::saddle;
      for (std::size_t i = 0; i < known.size(); ++i) {
        if ((known[i].location - y).norm() < cfg.snap_tol) {
          result.destination = known[i].location;
          result.critical_index = static_cast<int>(i);
          break;
        }
      }
      return true;
    }
    return false;
  };

  AscentIntegrator integrator(model, cfg);
  const RunOutcome run = integrator.run(x, std::numeric_limits<double>::infinity(), on_accept);
  result.time = run.t;
  result.evaluations = run.evals;
  if (!run.stopped || !run.ok) {
    result.kind = DestKind::unresolved;
    result.destination = run.x;
    result.critical_index = -1;
  }
  result.terminal_gradient_norm = model.gradient(result.destination).stableNorm();
  return result;
}

TimedFlow flow_until(const DensityModel& model, const Point& x, const FlowConfig& cfg,
                     double max_time, const FlowPredicate& stop) {
  require_point(x, model.dim(), "flow_until");
  require(max_time >= 0.0, "flow_until: negative time horizon");
  FlowConfig natural = cfg;
  natural.time = FlowTime::natural;
  TimedFlow out;
  auto on_accept = [&](const Point& y, double t, double log_p, const Vector&) {
    const double p = std::exp(log_p);
    if (cfg.record_path) out.path.push_back({t, y, p});
    return stop && stop(y, p);
  };
  AscentIntegrator integrator(model, natural);
  const RunOutcome run = integrator.run(x, max_time, on_accept);
  out.end = run.x;
  out.time = run.t;
  out.stopped = run.stopped;
  out.ok = run.ok;
  out.evaluations = run.evals;
  out.min_gradient_norm = run.min_gradient_norm;
  return out;
}

TimedFlow flow_for_time(const DensityModel& model, const Point& x, double t, const FlowConfig& cfg) {
  return flow_until(model, x, cfg, t);
}

ClusterAssignment true_labels(const DensityModel& model, std::span<const Point> points,
                              std::span<const CriticalPoint> critical_points, const FlowConfig& cfg,
                              int threads) {
  ClusterAssignment out;
  std::vector<int> mode_ordinal(critical_points.size(), kUnresolved);
  for (std::size_t i = 0; i < critical_points.size(); ++i) {
    if (!critical_points[i].is_mode()) continue;
    mode_ordinal[i] = static_cast<int>(out.mode_set.modes.size());
    out.mode_set.modes.push_back(critical_points[i].location);
    out.mode_set.densities.push_back(critical_points[i].value);
  }
  const std::size_t n = points.size();
  out.labels.assign(n, kUnresolved);
  out.iterations.assign(n, 0);
  out.converged.assign(n, false);
  out.flagged.assign(n, false);

  parallel_for(n, threads, [&](std::size_t i) {
    const FlowResult r = integrate_flow(model, points[i], cfg, critical_points);
    out.iterations[i] = static_cast<int>(std::min<long>(r.evaluations, std::numeric_limits<int>::max()));
    out.converged[i] = r.kind != DestKind::unresolved;
    if (r.kind == DestKind::mode && r.critical_index >= 0) {
      out.labels[i] = mode_ordinal[static_cast<std::size_t>(r.critical_index)];
    } else {
      out.flagged[i] = true;
    }
  });
  return out;
}

}  // namespace modeclust
