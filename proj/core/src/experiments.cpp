#include "modeclust/experiments.hpp"

#include "modeclust/mean_shift.hpp"
#include "modeclust/morse.hpp"
#include "modeclust/parallel.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

namespace modeclust {

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::basins2d: return "basins2d";
    case ExperimentKind::highdim_sweep: return "highdim_sweep";
    case ExperimentKind::separation_sweep: return "separation_sweep";
    case ExperimentKind::custom: return "custom";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "basins2d") return ExperimentKind::basins2d;
  if (name == "highdim_sweep" || name == "highdim") return ExperimentKind::highdim_sweep;
  if (name == "separation_sweep" || name == "separation") return ExperimentKind::separation_sweep;
  if (name == "custom") return ExperimentKind::custom;
  throw UsageError("unknown experiment '" + std::string(name) + "'");
}

namespace {

const std::vector<double>& default_bandwidths() {
  static const std::vector<double> grid = logspace(0.3, 3.0, 8);
  return grid;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

Matrix rotation2d(double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  Matrix r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

}  // namespace

const std::vector<double>& ExperimentConfig::bandwidths() const {
  return h_grid.empty() ? default_bandwidths() : h_grid;
}

void ExperimentConfig::validate() const {
  require(dim >= 1, "experiment config: dim must be at least 1");
  require(!n_grid.empty(), "experiment config: n_grid is empty");
  require(!separations.empty(), "experiment config: separations is empty");
  require(replications >= 1, "experiment config: replications must be at least 1");
  for (std::size_t n : n_grid) require(n >= 2, "experiment config: sample sizes must be at least 2");
  for (double h : bandwidths()) require(std::isfinite(h) && h > 0.0, "experiment config: bandwidths must be positive");
  for (double s : separations) require(std::isfinite(s) && s >= 0.0, "experiment config: separations must be >= 0");
  require(eig_min > 0.0 && eig_max >= eig_min, "experiment config: need 0 < eig_min <= eig_max");
  require(tv_draws >= 1, "experiment config: tv_draws must be positive");
  require(threads >= 1, "experiment config: threads must be at least 1");
  if (mixture) require(mixture->dim() == dim, "experiment config: mixture dimension differs from dim");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::basins2d:
      c.dim = 2;
      c.n_grid = {1000};
      c.h_grid = {1.0};
      c.mixture = basins2d_mixture();
      break;
    case ExperimentKind::highdim_sweep:
      c.dim = 10;
      c.separations = {5.0};
      c.replications = 75;
      c.covariance = CovarianceLaw::random_spd;
      break;
    case ExperimentKind::separation_sweep:
      c.dim = 2;
      c.n_grid = {300};
      c.h_grid = {0.6};
      c.separations = {0.0, 1.0, 1.5, 2.5, 3.0, 4.0, 5.0};
      c.replications = 35;
      c.covariance = CovarianceLaw::identity;
      break;
    case ExperimentKind::custom:
      c.dim = 2;
      c.n_grid = {500};
      c.h_grid = {1.0};
      break;
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  ExperimentConfig c = defaults(parse_experiment_kind(kv.get_string("experiment", "custom")));
  auto path_of = [&](const std::string& key) {
    std::filesystem::path p = kv.get_string(key, "");
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  auto exclusive = [&](const std::string& a, const std::string& b) {
    if (kv.has(a) && kv.has(b)) {
      throw ParseError("<config>", kv.line_of(b), "'" + a + "' and '" + b + "' are mutually exclusive");
    }
  };
  exclusive("n_grid", "n");
  exclusive("h_grid", "bandwidth");
  exclusive("separations", "separation");

  auto sizes = [&](const std::string& key) {
    std::vector<std::size_t> out;
    for (double v : kv.get_doubles(key, {})) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw ParseError("<config>", kv.line_of(key), key + ": sample sizes must be positive integers");
      }
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  };

  if (kv.has("mixture")) {
    c.mixture = load_mixture_spec(path_of("mixture"));
    c.dim = c.mixture->dim();
  }
  c.dim = static_cast<int>(kv.get_int("dim", c.dim));
  if (kv.has("data")) c.data_path = path_of("data");
  if (kv.has("n_grid")) c.n_grid = sizes("n_grid");
  if (kv.has("n")) c.n_grid = sizes("n");
  if (kv.has("h_grid")) c.h_grid = kv.get_doubles("h_grid", {});
  if (kv.has("bandwidth")) c.h_grid = {kv.get_double("bandwidth", 1.0)};
  if (kv.has("separations")) c.separations = kv.get_doubles("separations", {});
  if (kv.has("separation")) c.separations = {kv.get_double("separation", 5.0)};
  const long long reps = kv.get_int("replications", static_cast<long long>(c.replications));
  if (reps < 1) throw ParseError("<config>", kv.line_of("replications"), "replications must be at least 1");
  c.replications = static_cast<std::size_t>(reps);
  c.master_seed = kv.get_u64("seed", c.master_seed);
  if (kv.has("covariance")) {
    const std::string law = kv.get_string("covariance", "");
    if (law == "identity") {
      c.covariance = CovarianceLaw::identity;
    } else if (law == "random_spd") {
      c.covariance = CovarianceLaw::random_spd;
    } else {
      throw ParseError("<config>", kv.line_of("covariance"), "covariance must be identity or random_spd");
    }
  }
  c.eig_min = kv.get_double("eig_min", c.eig_min);
  c.eig_max = kv.get_double("eig_max", c.eig_max);
  const long long tv = kv.get_int("tv_draws", static_cast<long long>(c.tv_draws));
  if (tv < 1) throw ParseError("<config>", kv.line_of("tv_draws"), "tv_draws must be positive");
  c.tv_draws = static_cast<std::size_t>(tv);
  c.compute_core = kv.get_bool("compute_core", c.compute_core);
  c.core_constant = kv.get_double("core_constant", c.core_constant);
  c.threads = static_cast<int>(kv.get_int("threads", c.threads));
  c.flow.rel_tol = kv.get_double("flow_rel_tol", c.flow.rel_tol);
  c.flow.abs_tol = kv.get_double("flow_abs_tol", c.flow.abs_tol);

  for (const std::string& key : kv.unused_keys()) {
    throw ParseError("<config>", kv.line_of(key), "unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

GaussianMixture basins2d_mixture() {
  const Matrix d = Eigen::Vector2d(2.0, 0.35).asDiagonal();
  const Matrix r1 = rotation2d(35.0);
  const Matrix r2 = rotation2d(-35.0);
  Vector m1(2), m2(2);
  m1 << -2.0, 0.0;
  m2 << 2.0, 0.0;
  return GaussianMixture({0.5, 0.5}, {m1, m2}, {r1 * d * r1.transpose(), r2 * d * r2.transpose()});
}

Matrix random_orthogonal(int dim, RngStream& rng) {
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j) g.col(j) = rng.normal_vector(dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

GaussianMixture two_component_mixture(int dim, double separation, CovarianceLaw law, double eig_min,
                                      double eig_max, RngStream& rng) {
  require(dim >= 1 && separation >= 0.0, "two_component_mixture: bad arguments");
  Vector m1 = Vector::Zero(dim);
  Vector m2 = Vector::Zero(dim);
  m1[0] = -separation / 2.0;
  m2[0] = separation / 2.0;
  std::vector<Matrix> covs;
  for (int j = 0; j < 2; ++j) {
    if (law == CovarianceLaw::identity) {
      covs.push_back(Matrix::Identity(dim, dim));
      continue;
    }
    Vector eig(dim);
    for (int i = 0; i < dim; ++i) eig[i] = eig_min + (eig_max - eig_min) * rng.uniform();
    const Matrix q = random_orthogonal(dim, rng);
    Matrix c = q * eig.asDiagonal() * q.transpose();
    covs.push_back(0.5 * (c + c.transpose()));
  }
  return GaussianMixture({0.5, 0.5}, {m1, m2}, std::move(covs));
}

// ---------------------------------------------------------------------------

TruthLandscape analyze_landscape(const GaussianMixture& gm, const FlowConfig& flow, int threads) {
  double spread = 0.0;
  for (const auto& c : gm.components()) spread = std::max(spread, std::sqrt(c.covariance.diagonal().maxCoeff()));
  const auto means = gm.means();
  const auto seeds = default_critical_seeds({}, means, 3.0 * spread);
  NewtonConfig ncfg;
  ncfg.threads = threads;
  TruthLandscape land;
  land.critical_points = find_critical_points(gm, seeds, ncfg);
  for (const auto& c : land.critical_points) land.num_modes += c.is_mode() ? 1 : 0;
  if (land.num_modes == 0) throw NumericalError("analyze_landscape: no mode found");

  std::vector<int> ordinal(land.critical_points.size(), kUnresolved);
  int next = 0;
  for (std::size_t i = 0; i < land.critical_points.size(); ++i) {
    if (land.critical_points[i].is_mode()) ordinal[i] = next++;
  }
  const LabelFn label = [&](const Point& x) {
    const FlowResult r = integrate_flow(gm, x, flow, land.critical_points);
    if (r.kind != DestKind::mode || r.critical_index < 0) return kUnresolved;
    return ordinal[static_cast<std::size_t>(r.critical_index)];
  };
  for (std::size_t j = 0; j < land.num_modes; ++j) {
    land.xi.push_back(boundary_level(gm, land.critical_points, label, static_cast<int>(j)).xi);
  }
  return land;
}

ClusterAssignment oracle_labels(const GaussianMixture& gm, const TruthLandscape& land,
                                std::span<const Point> points, const FlowConfig& flow, int threads) {
  ClusterAssignment truth = true_labels(gm, points, land.critical_points, flow, threads);
  if (static_cast<double>(truth.num_unresolved()) > 0.01 * static_cast<double>(points.size())) {
    truth = true_labels(gm, points, land.critical_points, flow.tightened(), threads);
  }
  return truth;
}

CoreFlags core_flags(const GaussianMixture& gm, const TruthLandscape& land, const KernelDensityEstimate& kde,
                     std::span<const Point> sample, const ClusterAssignment& truth, double core_constant) {
  const auto means = gm.means();
  const auto probe = make_probe_set(sample, means, 3.0 * kde.bandwidth());
  CoreFlags out;
  out.discrepancy = sup_discrepancy(gm, kde, probe);
  out.c_g = landscape_stats(gm, probe, {}).c_g;
  out.offset = core_constant * out.c_g * out.discrepancy.eta + 2.0 * out.discrepancy.eta0;
  out.flags.assign(sample.size(), false);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const int l = truth.labels[i];
    if (l == kUnresolved) continue;
    const CoreSpec spec{l, land.xi[static_cast<std::size_t>(l)], out.offset};
    out.flags[i] = core_membership(gm, spec, sample[i], l);
  }
  return out;
}

PipelineRun score_sample(const GaussianMixture& gm, const TruthLandscape& land, std::span<const Point> sample,
                         const ClusterAssignment& truth, double h, bool compute_core, double core_constant,
                         int threads) {
  PipelineRun run;
  run.truth = truth;
  const KernelDensityEstimate kde(sample, h);
  MeanShiftConfig ms;
  ms.bandwidth = h;
  ms.threads = threads;
  run.estimate = run_mean_shift(kde, ms);
  std::vector<bool> flags(sample.size(), false);
  if (compute_core) {
    run.core = core_flags(gm, land, kde, sample, truth, core_constant);
    flags = run.core->flags;
  }
  run.risk = core_risk_decomposition(truth, run.estimate, flags);
  if (!compute_core) run.risk.core_loss.reset();
  return run;
}

// ---------------------------------------------------------------------------

std::pair<double, double> total_variation_mc(const GaussianMixture& p, const DensityModel& q, std::size_t draws,
                                             RngStream& rng) {
  require(draws >= 2, "total_variation_mc: need at least two draws");
  require(p.dim() == q.dim(), "total_variation_mc: dimension mismatch");
  double sum = 0.0, sum_sq = 0.0;
  for (const Point& x : p.sample(draws, rng)) {
    const double v = std::max(0.0, 1.0 - std::exp(q.log_density(x) - p.log_density(x)));
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

namespace {

// Points whose estimated cluster, mapped to its majority true cluster,
// differs from their true cluster.
std::vector<std::size_t> misclustered_points(const ClusterAssignment& truth, const ClusterAssignment& est) {
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) ++counts[est.labels[i]][truth.labels[i]];
  std::map<int, int> majority;
  for (const auto& [e, row] : counts) {
    majority[e] = std::max_element(row.begin(), row.end(), [](const auto& a, const auto& b) {
                    return a.second < b.second;
                  })->first;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.labels[i] != kUnresolved && majority[est.labels[i]] != truth.labels[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

Basins2dReport run_basins2d(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.dim == 2, "run_basins2d: dim must be 2");
  Basins2dReport report(cfg.mixture ? *cfg.mixture : basins2d_mixture());
  report.n = cfg.n_grid.front();
  report.h = cfg.bandwidths().front();
  const GaussianMixture& gm = report.mixture;
  const TruthLandscape land = analyze_landscape(gm, cfg.flow, cfg.threads);
  report.true_critical = land.critical_points;

  for (std::size_t r = 0; r < cfg.replications; ++r) {
    RngStream sample_rng = RngStream::derive(cfg.master_seed, Stage::kSample, {r, report.n});
    const std::vector<Point> sample = gm.sample(report.n, sample_rng);
    const ClusterAssignment truth = oracle_labels(gm, land, sample, cfg.flow, cfg.threads);
    const PipelineRun run = score_sample(gm, land, sample, truth, report.h, cfg.compute_core, cfg.core_constant,
                                         cfg.threads);
    RngStream tv_rng = RngStream::derive(cfg.master_seed, Stage::kMonteCarlo, {r, report.n});
    const KernelDensityEstimate kde(sample, report.h);
    const auto [tv, tv_se] = total_variation_mc(gm, kde, cfg.tv_draws, tv_rng);

    Basins2dRun row;
    row.replication = r;
    row.loss = run.risk.loss;
    row.tv = tv;
    row.tv_stderr = tv_se;
    row.estimated_modes = run.estimate.mode_set.size();
    row.unresolved_truth = truth.num_unresolved();
    row.core_loss = run.risk.core_loss;
    report.runs.push_back(row);
    if (r == 0) {
      report.sample = sample;
      report.truth = truth;
      report.estimate = run.estimate;
      report.misclustered = misclustered_points(truth, run.estimate);
      report.two_modes = run.estimate.mode_set.size() == 2;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct CellOutcome {
  double loss = 0.0;
  std::optional<double> core_loss;
  double core_fraction = 0.0;
  std::size_t unresolved = 0;
  std::size_t points = 0;
  bool flagged = false;
  double seconds = 0.0;
};

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& hs = cfg.bandwidths();
  const std::size_t S = cfg.separations.size();
  const std::size_t N = cfg.n_grid.size();
  const std::size_t H = hs.size();
  const std::size_t R = cfg.replications;
  auto at = [&](std::size_t s, std::size_t n, std::size_t h, std::size_t r) { return ((s * N + n) * H + h) * R + r; };
  std::vector<CellOutcome> outcomes(S * N * H * R);

  // With identity covariances the mixture depends on the separation only.
  std::vector<std::optional<GaussianMixture>> shared_mixture(S);
  std::vector<std::optional<TruthLandscape>> shared_land(S);
  if (cfg.covariance == CovarianceLaw::identity) {
    for (std::size_t s = 0; s < S; ++s) {
      RngStream unused(0);
      shared_mixture[s] = two_component_mixture(cfg.dim, cfg.separations[s], cfg.covariance, cfg.eig_min,
                                                cfg.eig_max, unused);
      shared_land[s] = analyze_landscape(*shared_mixture[s], cfg.flow, cfg.threads);
    }
  }

  parallel_for(S * R, cfg.threads, [&](std::size_t job) {
    const std::size_t s = job / R;
    const std::size_t r = job % R;
    const double sep = cfg.separations[s];
    const auto t_mix = Clock::now();
    std::optional<GaussianMixture> own_mixture;
    std::optional<TruthLandscape> own_land;
    if (!shared_mixture[s]) {
      RngStream mix_rng = RngStream::derive(cfg.master_seed, Stage::kMixture, {r, bits_of(sep)});
      own_mixture = two_component_mixture(cfg.dim, sep, cfg.covariance, cfg.eig_min, cfg.eig_max, mix_rng);
      own_land = analyze_landscape(*own_mixture, cfg.flow, 1);
    }
    const GaussianMixture& gm = shared_mixture[s] ? *shared_mixture[s] : *own_mixture;
    const TruthLandscape& land = shared_land[s] ? *shared_land[s] : *own_land;
    const double mix_seconds = seconds_since(t_mix);

    for (std::size_t ni = 0; ni < N; ++ni) {
      const std::size_t n = cfg.n_grid[ni];
      const auto t_truth = Clock::now();
      RngStream sample_rng = RngStream::derive(cfg.master_seed, Stage::kSample, {r, n, bits_of(sep)});
      const std::vector<Point> sample = gm.sample(n, sample_rng);
      const ClusterAssignment truth = oracle_labels(gm, land, sample, cfg.flow, 1);
      const bool flagged = static_cast<double>(truth.num_unresolved()) > 0.01 * static_cast<double>(n);
      // Shared work is charged evenly to the cells that use it.
      const double shared_seconds = (seconds_since(t_truth) + mix_seconds / static_cast<double>(N)) / static_cast<double>(H);
      for (std::size_t hi = 0; hi < H; ++hi) {
        const auto t0 = Clock::now();
        const PipelineRun run = score_sample(gm, land, sample, truth, hs[hi], cfg.compute_core, cfg.core_constant, 1);
        CellOutcome& o = outcomes[at(s, ni, hi, r)];
        o.loss = run.risk.loss;
        o.core_loss = run.risk.core_loss;
        o.core_fraction = run.risk.core_fraction;
        o.unresolved = truth.num_unresolved();
        o.points = n;
        o.flagged = flagged;
        o.seconds = seconds_since(t0) + shared_seconds;
      }
    }
  });

  SweepResult result;
  for (std::size_t ni = 0; ni < N; ++ni) {
    for (std::size_t hi = 0; hi < H; ++hi) {
      for (std::size_t s = 0; s < S; ++s) {
        SweepRow row;
        row.n = cfg.n_grid[ni];
        row.h = hs[hi];
        row.separation = cfg.separations[s];
        row.replications = R;
        std::vector<double> core_losses;
        double core_fraction = 0.0;
        std::size_t unresolved = 0, points = 0;
        for (std::size_t r = 0; r < R; ++r) {
          const CellOutcome& o = outcomes[at(s, ni, hi, r)];
          row.losses.push_back(o.loss);
          if (o.core_loss) core_losses.push_back(*o.core_loss);
          core_fraction += o.core_fraction;
          unresolved += o.unresolved;
          points += o.points;
          row.flagged_replications += o.flagged ? 1 : 0;
          row.runtime_seconds += o.seconds;
        }
        std::tie(row.mean_loss, row.stderr_loss) = mean_and_stderr(row.losses);
        if (!core_losses.empty()) row.core_loss = mean_and_stderr(core_losses).first;
        row.core_fraction = core_fraction / static_cast<double>(R);
        row.unresolved_fraction = static_cast<double>(unresolved) / static_cast<double>(points);
        row.cell_flagged = row.unresolved_fraction > 0.1;
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

SweepResult run_highdim_sweep(const ExperimentConfig& cfg) { return run_sweep(cfg); }

SweepResult run_separation_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  require(c.dim == 2, "run_separation_sweep: dim must be 2");
  c.covariance = CovarianceLaw::identity;
  return run_sweep(c);
}

const SweepRow* best_row(const SweepResult& result, std::size_t n, double separation) {
  const SweepRow* best = nullptr;
  for (const SweepRow& row : result.rows) {
    if (row.n != n || row.separation != separation) continue;
    if (!best || row.mean_loss < best->mean_loss) best = &row;
  }
  return best;
}

// ---------------------------------------------------------------------------

CustomReport run_custom(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.data_path || cfg.mixture, "run_custom: need a dataset or a mixture spec");
  CustomReport report;
  report.h = cfg.bandwidths().front();
  const std::size_t n = cfg.n_grid.front();

  std::optional<TruthLandscape> land;
  if (cfg.mixture) {
    land = analyze_landscape(*cfg.mixture, cfg.flow, cfg.threads);
    report.true_critical = land->critical_points;
  }

  if (cfg.data_path) {
    report.data = load_dataset(*cfg.data_path);
    require(static_cast<int>(report.data.front().size()) == cfg.dim || !cfg.mixture,
            "run_custom: dataset dimension differs from the mixture");
  } else {
    RngStream rng = RngStream::derive(cfg.master_seed, Stage::kSample, {0, n});
    report.data = cfg.mixture->sample(n, rng);
  }

  if (!cfg.mixture) {
    const KernelDensityEstimate kde(report.data, report.h);
    MeanShiftConfig ms;
    ms.bandwidth = report.h;
    ms.threads = cfg.threads;
    report.estimate = run_mean_shift(kde, ms);
    return report;
  }

  const GaussianMixture& gm = *cfg.mixture;
  const ClusterAssignment truth = oracle_labels(gm, *land, report.data, cfg.flow, cfg.threads);
  const bool scoreable = report.data.size() >= 2;
  if (scoreable) {
    PipelineRun run = score_sample(gm, *land, report.data, truth, report.h, cfg.compute_core, cfg.core_constant,
                                   cfg.threads);
    report.estimate = std::move(run.estimate);
    report.risk = run.risk;
  } else {
    const KernelDensityEstimate kde(report.data, report.h);
    MeanShiftConfig ms;
    ms.bandwidth = report.h;
    report.estimate = run_mean_shift(kde, ms);
  }
  report.truth = truth;

  if (!cfg.data_path && cfg.replications > 1) {
    const ReplicationFn pipeline = [&](std::size_t, RngStream& rng, bool tighten) {
      const std::vector<Point> sample = gm.sample(n, rng);
      const FlowConfig flow = tighten ? cfg.flow.tightened() : cfg.flow;
      const ClusterAssignment t = true_labels(gm, sample, land->critical_points, flow);
      const PipelineRun run = score_sample(gm, *land, sample, t, report.h, cfg.compute_core, cfg.core_constant);
      ReplicationOutcome o;
      o.loss = run.risk.loss;
      o.core_loss = run.risk.core_loss;
      o.core_fraction = run.risk.core_fraction;
      o.n_points = n;
      o.excluded = run.risk.excluded;
      o.unresolved_truth = t.num_unresolved();
      o.true_modes = land->num_modes;
      o.estimated_modes = run.estimate.mode_set.size();
      return o;
    };
    report.replicated = replicate_risk(cfg.replications, cfg.master_seed, pipeline, cfg.threads,
                                       static_cast<std::uint64_t>(Stage::kSample));
  }
  return report;
}

// ---------------------------------------------------------------------------

GaussianMixture symmetric_test_mixture() {
  Vector m1(2), m2(2);
  m1 << -2.5, 0.0;
  m2 << 2.5, 0.0;
  return GaussianMixture({0.5, 0.5}, {m1, m2}, {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
}

BoundCheckResult run_flow_perturbation_suite(const CheckSuiteConfig& cfg) {
  const GaussianMixture p = symmetric_test_mixture();
  RngStream rng = RngStream::derive(cfg.master_seed, Stage::kCheck, {1});
  const std::vector<Point> starts = p.sample(cfg.flow_starts, rng);
  const auto means = p.means();
  const auto probe = make_probe_set(starts, means, 2.0);
  FlowPerturbationConfig fcfg;
  fcfg.threads = cfg.threads;

  BoundCheckResult merged;
  merged.name = "flow_perturbation";
  for (double h : cfg.smoothing_levels) {
    const GaussianMixture q = gm_smooth(p, h);
    const BoundCheckResult r = check_flow_perturbation(p, q, starts, cfg.flow_times, probe, fcfg);
    for (BoundCase c : r.details) {
      c.case_id = "h" + format_number(h) + "_" + c.case_id;
      merged.add(std::move(c));
    }
    merged.skipped += r.skipped;
    merged.note += (merged.note.empty() ? "" : "; ") + ("h=" + format_number(h) + " " + r.note);
  }
  return merged;
}

BoundCheckResult run_chi_square_suite(const CheckSuiteConfig& cfg) {
  RngStream rng = RngStream::derive(cfg.master_seed, Stage::kCheck, {2});
  const std::vector<ChiSquareCase> cases{{1, 4.0}, {3, 96.0}, {10, 320.0}};
  return check_chi_square_bound(cases, cfg.chi_square_draws, rng);
}

std::pair<BoundCheckResult, BoundCheckResult> run_low_density_suite(const CheckSuiteConfig& cfg) {
  const double sigma = 0.5;
  const std::vector<double> weights{0.5, 0.5};
  const double eps = gaussian_epsilon_cap(weights, sigma, 2);
  const double need = gaussian_required_separation(weights, sigma, 2, eps);
  auto mixture_at = [&](double sep) {
    Vector a = Vector::Zero(2), b = Vector::Zero(2);
    a[0] = -sep / 2.0;
    b[0] = sep / 2.0;
    return GaussianMixture::spherical(weights, {a, b}, sigma);
  };
  RngStream rng = RngStream::derive(cfg.master_seed, Stage::kCheck, {3});
  BoundCheckResult met = check_gaussian_low_density(mixture_at(need + 1.0), eps, cfg.low_density_draws, rng);
  met.name = "gaussian_low_density";
  BoundCheckResult unmet = check_gaussian_low_density(mixture_at(0.5 * need), eps, cfg.low_density_draws, rng);
  unmet.name = "gaussian_low_density_narrow";
  return {met, unmet};
}

std::vector<DeltaProfile> run_delta_profile_suite(const CheckSuiteConfig& cfg) {
  const GaussianMixture p = symmetric_test_mixture();
  const FlowConfig flow;
  const TruthLandscape land = analyze_landscape(p, flow, cfg.threads);
  std::vector<int> ordinal(land.critical_points.size(), kUnresolved);
  int next = 0;
  for (std::size_t i = 0; i < land.critical_points.size(); ++i) {
    if (land.critical_points[i].is_mode()) ordinal[i] = next++;
  }
  const LabelFn label = [&](const Point& x) {
    const FlowResult r = integrate_flow(p, x, flow, land.critical_points);
    if (r.kind != DestKind::mode || r.critical_index < 0) return kUnresolved;
    return ordinal[static_cast<std::size_t>(r.critical_index)];
  };
  const Vector lo = Vector::Constant(2, -6.0);
  const Vector hi = Vector::Constant(2, 6.0);
  // An even grid size keeps grid points off the symmetry axis.
  const LabelGrid grid = make_label_grid(label, lo, hi, 60, cfg.threads);
  std::vector<DeltaProfile> out;
  for (std::size_t j = 0; j < land.num_modes; ++j) {
    out.push_back(delta_profile(p, land.critical_points, label, &grid, static_cast<int>(j)));
  }
  return out;
}

std::vector<BoundCheckResult> run_check_battery(const CheckSuiteConfig& cfg) {
  std::vector<BoundCheckResult> out;
  out.push_back(run_chi_square_suite(cfg));
  auto [met, unmet] = run_low_density_suite(cfg);
  out.push_back(std::move(met));
  out.push_back(std::move(unmet));
  out.push_back(run_flow_perturbation_suite(cfg));
  for (DeltaProfile& prof : run_delta_profile_suite(cfg)) {
    prof.lemma7.name = "flow_time_gradient_cluster" + std::to_string(prof.cluster);
    out.push_back(std::move(prof.lemma7));
  }
  return out;
}

}  // namespace modeclust
