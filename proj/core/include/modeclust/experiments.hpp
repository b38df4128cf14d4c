#pragma once

#include "modeclust/assignment.hpp"
#include "modeclust/critical_point.hpp"
#include "modeclust/density.hpp"
#include "modeclust/flow.hpp"
#include "modeclust/io.hpp"
#include "modeclust/risk.hpp"
#include "modeclust/theory_checks.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modeclust {

enum class ExperimentKind { basins2d, highdim_sweep, separation_sweep, custom };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view name);

/// How the two-component generator draws covariances.
enum class CovarianceLaw { identity, random_spd };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::custom;
  int dim = 2;
  std::vector<std::size_t> n_grid{25, 50, 100, 200, 400};
  std::vector<double> h_grid;  // empty: 8 log-spaced values in [0.3, 3.0]
  std::vector<double> separations{5.0};
  std::size_t replications = 1;
  std::uint64_t master_seed = 1;

  /// Explicit mixture (basins2d, custom). Sweeps use the generator instead.
  std::optional<GaussianMixture> mixture;
  CovarianceLaw covariance = CovarianceLaw::random_spd;
  double eig_min = 0.5;
  double eig_max = 2.0;

  std::optional<std::filesystem::path> data_path;  // custom: cluster this file

  std::size_t tv_draws = 100'000;
  bool compute_core = true;
  /// Core offset a = core_constant * C_g * eta + 2 eta0.
  double core_constant = 1.0;
  int threads = 1;
  FlowConfig flow{};

  const std::vector<double>& bandwidths() const;
  void validate() const;

  /// Defaults for one of the named experiments.
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Starts from defaults(experiment) and applies every key in `kv`. Relative
  /// paths are resolved against `base_dir`. Unknown keys are a ParseError.
  static ExperimentConfig from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir = {});
};

/// The curved-basin 2-d stand-in density: two anisotropic Gaussians, rotated
/// in opposite directions so the boundary between them bends.
GaussianMixture basins2d_mixture();

/// Equal-weight two-component mixture with means at -s/2 e_1 and +s/2 e_1.
/// random_spd draws eigenvalues uniformly in [eig_min, eig_max] and a
/// Haar-random orthogonal eigenbasis per component.
GaussianMixture two_component_mixture(int dim, double separation, CovarianceLaw law, double eig_min,
                                      double eig_max, RngStream& rng);

/// Haar-distributed random orthogonal matrix.
Matrix random_orthogonal(int dim, RngStream& rng);

// ---------------------------------------------------------------------------
// Pipeline pieces
// ---------------------------------------------------------------------------

/// Critical points of a mixture and the boundary level of every cluster.
struct TruthLandscape {
  std::vector<CriticalPoint> critical_points;
  std::vector<double> xi;  // per mode, in mode order
  std::size_t num_modes = 0;
};

TruthLandscape analyze_landscape(const GaussianMixture& gm, const FlowConfig& flow, int threads = 1);

/// Flow-oracle labels; if more than 1% of points are unresolved the labels
/// are recomputed once with a tightened flow configuration.
ClusterAssignment oracle_labels(const GaussianMixture& gm, const TruthLandscape& land,
                                std::span<const Point> points, const FlowConfig& flow, int threads = 1);

/// Core membership of each sample under the offset a = A C_g eta + 2 eta0,
/// where eta compares the mixture with the KDE on a probe set.
struct CoreFlags {
  std::vector<bool> flags;
  double offset = 0.0;
  Discrepancy discrepancy;
  double c_g = 0.0;
};

CoreFlags core_flags(const GaussianMixture& gm, const TruthLandscape& land, const KernelDensityEstimate& kde,
                     std::span<const Point> sample, const ClusterAssignment& truth, double core_constant);

struct PipelineRun {
  ClusterAssignment truth;
  ClusterAssignment estimate;
  RiskReport risk;
  std::optional<CoreFlags> core;
};

/// Mean shift on `sample` at bandwidth h, scored against `truth`.
PipelineRun score_sample(const GaussianMixture& gm, const TruthLandscape& land, std::span<const Point> sample,
                         const ClusterAssignment& truth, double h, bool compute_core, double core_constant,
                         int threads = 1);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct Basins2dRun {
  std::size_t replication = 0;
  double loss = 0.0;
  double tv = 0.0;
  double tv_stderr = 0.0;
  std::size_t estimated_modes = 0;
  std::size_t unresolved_truth = 0;
  std::optional<double> core_loss;
};

struct Basins2dReport {
  explicit Basins2dReport(GaussianMixture m) : mixture(std::move(m)) {}

  GaussianMixture mixture;
  std::size_t n = 0;
  double h = 0.0;
  std::vector<Basins2dRun> runs;
  /// Details of replication 0.
  std::vector<Point> sample;
  ClusterAssignment truth;
  ClusterAssignment estimate;
  std::vector<std::size_t> misclustered;
  std::vector<CriticalPoint> true_critical;
  bool two_modes = true;
};

/// Total variation distance E_p (1 - q(X)/p(X))_+ by sampling from p. The
/// positive part keeps every term in [0, 1], unlike 1/2 E_p |1 - q/p|.
std::pair<double, double> total_variation_mc(const GaussianMixture& p, const DensityModel& q, std::size_t draws,
                                             RngStream& rng);

Basins2dReport run_basins2d(const ExperimentConfig& cfg);

struct SweepRow {
  std::size_t n = 0;
  double h = 0.0;
  double separation = 0.0;
  double mean_loss = 0.0;
  std::optional<double> stderr_loss;
  std::optional<double> core_loss;  // mean over replications with a core-core pair
  double core_fraction = 0.0;
  std::size_t replications = 0;
  std::size_t flagged_replications = 0;
  double unresolved_fraction = 0.0;
  bool cell_flagged = false;  // more than 10% of truth points unresolved
  double runtime_seconds = 0.0;
  std::vector<double> losses;  // per replication
};

/// One row per (separation, n, h), ordered by n, then h, then separation.
struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Grid over separations x n_grid x bandwidths with the two-component generator.
/// Replication r of a cell draws its mixture from
/// derive(seed, kMixture, {r, separation}) and its sample from
/// derive(seed, kSample, {r, n, separation}), so cells never share or
/// perturb each other's streams.
SweepResult run_sweep(const ExperimentConfig& cfg);
SweepResult run_highdim_sweep(const ExperimentConfig& cfg);
SweepResult run_separation_sweep(const ExperimentConfig& cfg);

/// Row with the smallest mean loss among rows with the given n and separation.
const SweepRow* best_row(const SweepResult& result, std::size_t n, double separation);

struct CustomReport {
  std::vector<Point> data;
  double h = 0.0;
  ClusterAssignment estimate;
  std::optional<ClusterAssignment> truth;
  std::optional<RiskReport> risk;
  std::vector<CriticalPoint> true_critical;
  std::optional<ReplicatedRisk> replicated;  // mixture without data and replications > 1
};

/// Clusters cfg.data_path (or a sample of size n_grid[0] from cfg.mixture)
/// at bandwidth h_grid[0]. With a mixture, also computes true labels and risk.
CustomReport run_custom(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Theory-check battery
// ---------------------------------------------------------------------------

struct CheckSuiteConfig {
  std::uint64_t master_seed = 1;
  std::size_t chi_square_draws = 1'000'000;
  std::size_t low_density_draws = 1'000'000;
  std::size_t flow_starts = 50;
  std::vector<double> flow_times{0.5, 1.0, 2.0};
  std::vector<double> smoothing_levels{0.05, 0.15, 0.3};
  int threads = 1;
};

/// Two unit-covariance Gaussians at (+-2.5, 0), equal weights.
GaussianMixture symmetric_test_mixture();

BoundCheckResult run_flow_perturbation_suite(const CheckSuiteConfig& cfg);
BoundCheckResult run_chi_square_suite(const CheckSuiteConfig& cfg);
/// The two low-density cases: preconditions met (expects zero events) and
/// separation below the requirement (expects precondition_failed).
std::pair<BoundCheckResult, BoundCheckResult> run_low_density_suite(const CheckSuiteConfig& cfg);
/// Delta profiles for both clusters of the symmetric test mixture.
std::vector<DeltaProfile> run_delta_profile_suite(const CheckSuiteConfig& cfg);

/// Everything above, in a fixed order.
std::vector<BoundCheckResult> run_check_battery(const CheckSuiteConfig& cfg);

}  // namespace modeclust
