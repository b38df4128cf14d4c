#pragma once

#include "modeclust/critical_point.hpp"
#include "modeclust/density.hpp"
#include "modeclust/flow.hpp"
#include "modeclust/morse.hpp"
#include "modeclust/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modeclust {

struct BoundCase {
  std::string case_id;
  double lhs = 0.0;
  double rhs = 0.0;
  bool violation = false;
};

enum class CheckStatus { ok, violated, precondition_failed };

std::string_view to_string(CheckStatus s) noexcept;

/// Uniform record for every bound check.
struct BoundCheckResult {
  std::string name;
  CheckStatus status = CheckStatus::ok;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double max_slack_ratio = 0.0;  // largest lhs / rhs seen (0/0 counts as 0)
  std::string note;
  std::vector<BoundCase> details;

  void add(BoundCase c);
};

// ---------------------------------------------------------------------------
// Flow perturbation: |pi~_x(t) - pi_x(t)| <= eta1 / (k sqrt d) * exp(k sqrt d t)
// with k = sup |hess p| and eta1 = sup |grad p - grad p~|.
// ---------------------------------------------------------------------------

struct FlowPerturbationConfig {
  double slack = 0.01;          // relative allowance for integrator error
  int max_refinements = 2;      // probe refinements along computed paths on violation
  FlowConfig flow{};
  int threads = 1;
};

/// Records rhs = (1 + slack) * bound, so lhs > rhs is a violation beyond slack.
BoundCheckResult check_flow_perturbation(const DensityModel& p, const DensityModel& q,
                                         std::span<const Point> starts, std::span<const double> times,
                                         std::span<const Point> probe,
                                         const FlowPerturbationConfig& cfg = {});

/// Right-hand side of the flow perturbation bound.
double flow_perturbation_bound(double eta1, double kappa2, int dim, double t);

// ---------------------------------------------------------------------------
// Gaussian low-density lemma: P(p(X) < eps) <= exp(-8d) for spherical mixtures.
// ---------------------------------------------------------------------------

/// min_j (pi_j^{1/d} / (sqrt(2 pi) sigma e^16))^d
double gaussian_epsilon_cap(std::span<const double> weights, double sigma, int dim);

/// 2 sigma max_j sqrt(2d log(1/(sigma sqrt(2 pi))) + 2 log(1/eps) - 2 log(1/pi_j))
double gaussian_required_separation(std::span<const double> weights, double sigma, int dim, double eps);

/// Exact Clopper-Pearson interval for a binomial proportion.
struct ProportionInterval {
  double lower = 0.0;
  double upper = 1.0;
};
ProportionInterval clopper_pearson(std::size_t events, std::size_t trials, double one_sided_alpha);

/// Checks the preconditions first; if either fails the result has status
/// precondition_failed and no Monte Carlo is run. Otherwise records the 99%
/// Clopper-Pearson lower bound on P(p(X) < eps) against exp(-8d); the event
/// count is in the note.
BoundCheckResult check_gaussian_low_density(const GaussianMixture& gm, double epsilon, std::size_t n_mc,
                                            RngStream& rng);

// ---------------------------------------------------------------------------
// Chi-square tail bound P(chi2_d > t) <= exp(-(t/2)(1 - 2 sqrt(2d/t))), t >= 2d.
// ---------------------------------------------------------------------------

struct ChiSquareBound {
  double bound = 0.0;
  std::optional<double> simplified;  // exp(-t/4), only for t >= 32d
};

/// Throws UsageError when t < 2d.
ChiSquareBound chi_square_tail_bound(double t, int d);

struct ChiSquareCase {
  int d = 1;
  double t = 0.0;
};

/// Compares the bound with a Monte Carlo tail estimate. Each case records
/// the 99% one-sided Clopper-Pearson lower confidence bound on the tail as
/// lhs; a violation is lhs above the bound. Cases with t >= 32d add a row
/// comparing the main bound with exp(-t/4).
BoundCheckResult check_chi_square_bound(std::span<const ChiSquareCase> cases, std::size_t n_mc,
                                        RngStream& rng);

// ---------------------------------------------------------------------------
// Condition (B): Delta(x) = inf_{0<=t<=t(x)} |grad p(pi_x(t))|, where t(x) is
// the first time the flow enters the cluster core.
// ---------------------------------------------------------------------------

struct CoreFlow {
  double time = 0.0;   // t(x)
  double delta = 0.0;  // Delta(x)
  double start_density = 0.0;
  double end_density = 0.0;
  bool ok = true;
};

/// Natural-time flow from x until p >= core_level.
CoreFlow flow_time_to_core(const DensityModel& model, const Point& x, double core_level,
                           const FlowConfig& cfg = {});

struct DeltaProfileConfig {
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};
  /// Core offset a as a fraction of p(m) - xi.
  double core_offset_fraction = 0.25;
  /// Boundary points kept only where p >= this fraction of xi.
  double min_boundary_density_ratio = 0.1;
  std::size_t max_boundary_points = 24;
  FlowConfig flow{};
};

struct DeltaProfileRow {
  double delta = 0.0;
  double min_gradient_norm = 0.0;  // min over starting points of Delta(x)
  double max_flow_time = 0.0;      // max over starting points of t(x)
  std::size_t points = 0;
};

struct DeltaProfile {
  int cluster = 0;
  double xi = 0.0;
  double core_offset = 0.0;
  double mode_density = 0.0;
  std::vector<DeltaProfileRow> rows;
  std::optional<double> gamma;  // log-log slope of min Delta against delta
  bool monotone = true;         // min Delta non-increasing as delta shrinks
  BoundCheckResult lemma7;      // t(x) Delta(x)^2 <= p(m) + 1e-6 per flow
};

/// Requires d <= 2 and a label grid for boundary extraction; otherwise throws
/// UsageError (unsupported dimension).
DeltaProfile delta_profile(const DensityModel& model, std::span<const CriticalPoint> critical_points,
                           const LabelFn& label, const LabelGrid* grid, int cluster,
                           const DeltaProfileConfig& cfg = {});

// ---------------------------------------------------------------------------
// Empirical low-noise exponent and critical-point stability.
// ---------------------------------------------------------------------------

struct LowNoiseEstimate {
  std::vector<double> epsilons;
  std::vector<double> probabilities;
  std::optional<double> beta;  // log-log slope, from levels with at least one event
};

/// Monte Carlo P(p(X) < eps) on a grid of eps and the fitted exponent beta.
LowNoiseEstimate estimate_low_noise_exponent(const GaussianMixture& gm, std::span<const double> epsilons,
                                             std::size_t n_mc, RngStream& rng);

struct CriticalMatch {
  bool same_count = false;
  bool same_indices = false;  // after nearest-neighbour matching
  double max_displacement = 0.0;
};

/// Pairs each critical point of `a` with its nearest unused critical point of `b`.
CriticalMatch match_critical_points(std::span<const CriticalPoint> a, std::span<const CriticalPoint> b);

/// Least-squares slope of log y against log x (pairs with non-positive values are skipped).
std::optional<double> log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace modeclust
