#include "commands.hpp"

#include "modeclust/experiments.hpp"
#include "modeclust/plots.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>

namespace modeclust::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw UsageError("cannot write " + (dir / name).string());
  return out;
}

std::filesystem::path base_dir(const CommonOptions& opts) {
  return opts.config ? opts.config->parent_path() : std::filesystem::path{};
}

void write_timing(const CommonOptions& opts, const std::vector<std::pair<std::string, double>>& stages) {
  auto out = open_output(opts.out, "timing.csv");
  out << "stage,seconds\n";
  for (const auto& [stage, s] : stages) out << stage << "," << format_number(s) << "\n";
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_scatter(const CommonOptions& opts, const std::string& name, const std::string& title,
                   const std::vector<Point>& points, const ClusterAssignment& est,
                   const std::vector<std::size_t>& highlight = {}) {
  if (!opts.emit_plots || points.empty() || points.front().size() != 2) return;
  auto out = open_output(opts.out, name);
  svg::scatter_plot(out, title, points, est.labels, highlight, est.mode_set.modes);
}

}  // namespace

KeyValueConfig load_config(const CommonOptions& opts, const std::string& experiment) {
  KeyValueConfig kv = opts.config ? KeyValueConfig::load(*opts.config) : KeyValueConfig{};
  if (!experiment.empty()) {
    if (kv.has("experiment")) {
      const std::string given = kv.get_string("experiment", "");
      if (parse_experiment_kind(given) != parse_experiment_kind(experiment)) {
        throw UsageError("config experiment '" + given + "' does not match '" + experiment + "'");
      }
    } else {
      kv.set("experiment", experiment);
    }
  }
  for (const std::string& o : opts.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  if (opts.seed) kv.set("seed", std::to_string(*opts.seed));
  if (opts.threads) kv.set("threads", std::to_string(*opts.threads));
  return kv;
}

// ---------------------------------------------------------------------------

namespace {

int report_custom(const CommonOptions& opts, const ExperimentConfig& cfg, const std::string& name) {
  const auto t0 = Clock::now();
  const CustomReport rep = run_custom(cfg);
  const double seconds = elapsed(t0);

  {
    auto out = open_output(opts.out, "labels.csv");
    write_labels(out, rep.estimate, rep.truth ? &*rep.truth : nullptr);
  }
  {
    auto out = open_output(opts.out, "modes.csv");
    write_modes(out, rep.estimate.mode_set);
  }
  if (!rep.true_critical.empty()) {
    auto out = open_output(opts.out, "critical_points.csv");
    write_critical_points(out, rep.true_critical);
  }
  auto out = open_output(opts.out, "results.csv");
  if (rep.replicated) {
    const ReplicatedRisk& rr = *rep.replicated;
    std::vector<double> core;
    for (const auto& o : rr.outcomes) {
      if (o.core_loss) core.push_back(*o.core_loss);
    }
    out << "experiment,n,h,replications,mean_loss,stderr,core_loss,flagged_replications\n";
    out << name << "," << rep.data.size() << "," << format_number(rep.h) << "," << rr.losses.size() << ","
        << format_number(rr.mean_loss) << "," << format_optional(rr.stderr_loss) << ","
        << format_optional(core.empty() ? std::nullopt : std::optional(mean_and_stderr(core).first)) << ","
        << rr.flagged << "\n";
    auto reps = open_output(opts.out, "replications.csv");
    reps << "replication,loss,core_loss,core_fraction,true_modes,estimated_modes,unresolved_truth,flagged\n";
    for (std::size_t r = 0; r < rr.outcomes.size(); ++r) {
      const auto& o = rr.outcomes[r];
      reps << r << "," << format_number(o.loss) << "," << format_optional(o.core_loss) << ","
           << format_number(o.core_fraction) << "," << o.true_modes << "," << o.estimated_modes << ","
           << o.unresolved_truth << "," << (o.flagged ? 1 : 0) << "\n";
    }
  } else if (rep.risk) {
    out << "experiment,n,h,loss,core_loss,core_fraction,excluded,true_modes,estimated_modes,flagged\n";
    std::size_t true_modes = 0;
    for (const auto& c : rep.true_critical) true_modes += c.is_mode() ? 1 : 0;
    out << name << "," << rep.data.size() << "," << format_number(rep.h) << "," << format_number(rep.risk->loss)
        << "," << format_optional(rep.risk->core_loss) << "," << format_number(rep.risk->core_fraction) << ","
        << rep.risk->excluded << "," << true_modes << "," << rep.estimate.mode_set.size() << ","
        << rep.estimate.num_flagged() << "\n";
  } else {
    out << "experiment,n,h,estimated_modes,flagged\n";
    out << name << "," << rep.data.size() << "," << format_number(rep.h) << "," << rep.estimate.mode_set.size()
        << "," << rep.estimate.num_flagged() << "\n";
  }
  write_timing(opts, {{"total", seconds}});
  write_scatter(opts, "clusters.svg", "mean shift clusters", rep.data, rep.estimate);

  std::cout << "points " << rep.data.size() << ", modes " << rep.estimate.mode_set.size();
  if (rep.risk) std::cout << ", loss " << format_number(rep.risk->loss);
  if (rep.replicated) std::cout << ", mean loss " << format_number(rep.replicated->mean_loss);
  std::cout << "\n";
  return 0;
}

void write_sweep(const CommonOptions& opts, const ExperimentConfig& cfg, const SweepResult& result) {
  {
    auto out = open_output(opts.out, "results.csv");
    out << "experiment,dim,n,h,separation,replications,mean_loss,stderr,core_loss,core_fraction,"
           "unresolved_fraction,flagged_replications,cell_flagged\n";
    for (const SweepRow& r : result.rows) {
      out << to_string(cfg.experiment) << "," << cfg.dim << "," << r.n << "," << format_number(r.h) << ","
          << format_number(r.separation) << "," << r.replications << "," << format_number(r.mean_loss) << ","
          << format_optional(r.stderr_loss) << "," << format_optional(r.core_loss) << ","
          << format_number(r.core_fraction) << "," << format_number(r.unresolved_fraction) << ","
          << r.flagged_replications << "," << (r.cell_flagged ? 1 : 0) << "\n";
    }
  }
  {
    auto out = open_output(opts.out, "replications.csv");
    out << "n,h,separation,replication,loss\n";
    for (const SweepRow& r : result.rows) {
      for (std::size_t k = 0; k < r.losses.size(); ++k) {
        out << r.n << "," << format_number(r.h) << "," << format_number(r.separation) << "," << k << ","
            << format_number(r.losses[k]) << "\n";
      }
    }
  }
  {
    auto out = open_output(opts.out, "timing.csv");
    out << "n,h,separation,runtime_seconds\n";
    for (const SweepRow& r : result.rows) {
      out << r.n << "," << format_number(r.h) << "," << format_number(r.separation) << ","
          << format_number(r.runtime_seconds) << "\n";
    }
  }
  if (!opts.emit_plots) return;

  const auto& hs = cfg.bandwidths();
  if (cfg.n_grid.size() > 1 || hs.size() > 1) {
    for (double sep : cfg.separations) {
      std::vector<std::string> rows, cols;
      for (std::size_t n : cfg.n_grid) rows.push_back("n=" + std::to_string(n));
      for (double h : hs) cols.push_back("h=" + format_number(std::round(h * 1000) / 1000));
      std::vector<double> values;
      for (std::size_t n : cfg.n_grid) {
        for (double h : hs) {
          for (const SweepRow& r : result.rows) {
            if (r.n == n && r.h == h && r.separation == sep) values.push_back(r.mean_loss);
          }
        }
      }
      auto out = open_output(opts.out, "loss_heatmap_sep" + format_number(sep) + ".svg");
      svg::heatmap(out, "mean loss, separation " + format_number(sep), rows, cols, values);
    }
  }
  if (cfg.separations.size() > 1) {
    std::vector<svg::Series> series;
    for (std::size_t n : cfg.n_grid) {
      for (double h : hs) {
        svg::Series s{"n=" + std::to_string(n) + " h=" + format_number(h), {}, {}};
        for (const SweepRow& r : result.rows) {
          if (r.n == n && r.h == h) {
            s.x.push_back(r.separation);
            s.y.push_back(r.mean_loss);
          }
        }
        series.push_back(std::move(s));
      }
    }
    auto out = open_output(opts.out, "loss_vs_separation.svg");
    svg::line_plot(out, "mean loss against separation", "separation", "mean loss", series);
  }
}

int report_sweep(const CommonOptions& opts, const ExperimentConfig& cfg) {
  const SweepResult result = cfg.experiment == ExperimentKind::separation_sweep ? run_separation_sweep(cfg)
                                                                                 : run_highdim_sweep(cfg);
  write_sweep(opts, cfg, result);
  for (const SweepRow& r : result.rows) {
    std::cout << "n=" << r.n << " h=" << format_number(r.h) << " sep=" << format_number(r.separation)
              << " mean_loss=" << format_number(r.mean_loss) << (r.cell_flagged ? " [flagged]" : "") << "\n";
  }
  return 0;
}

int report_basins(const CommonOptions& opts, const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Basins2dReport rep = run_basins2d(cfg);
  const double seconds = elapsed(t0);
  {
    auto out = open_output(opts.out, "results.csv");
    out << "experiment,replication,n,h,loss,tv,tv_stderr,estimated_modes,unresolved_truth,core_loss\n";
    for (const Basins2dRun& r : rep.runs) {
      out << "basins2d," << r.replication << "," << rep.n << "," << format_number(rep.h) << ","
          << format_number(r.loss) << "," << format_number(r.tv) << "," << format_number(r.tv_stderr) << ","
          << r.estimated_modes << "," << r.unresolved_truth << "," << format_optional(r.core_loss) << "\n";
    }
  }
  {
    auto out = open_output(opts.out, "modes.csv");
    write_modes(out, rep.estimate.mode_set);
  }
  {
    auto out = open_output(opts.out, "critical_points.csv");
    write_critical_points(out, rep.true_critical);
  }
  {
    auto out = open_output(opts.out, "misclustered.csv");
    out << "index,x1,x2,true_label,label\n";
    for (std::size_t i : rep.misclustered) {
      out << i << "," << format_number(rep.sample[i][0]) << "," << format_number(rep.sample[i][1]) << ","
          << rep.truth.labels[i] << "," << rep.estimate.labels[i] << "\n";
    }
  }
  {
    auto out = open_output(opts.out, "points.csv");
    out << "x1,x2,true_label,label\n";
    for (std::size_t i = 0; i < rep.sample.size(); ++i) {
      out << format_number(rep.sample[i][0]) << "," << format_number(rep.sample[i][1]) << ","
          << rep.truth.labels[i] << "," << rep.estimate.labels[i] << "\n";
    }
  }
  {
    auto out = open_output(opts.out, "mixture.txt");
    write_mixture_spec(out, rep.mixture);
  }
  write_timing(opts, {{"total", seconds}});
  write_scatter(opts, "basins2d.svg", "mean shift clusters (misclustered circled)", rep.sample, rep.estimate,
                rep.misclustered);
  if (!rep.two_modes) {
    std::cout << "note: the KDE has " << rep.estimate.mode_set.size() << " modes, not 2\n";
  }
  for (const Basins2dRun& r : rep.runs) {
    std::cout << "replication " << r.replication << ": loss " << format_number(r.loss) << ", tv "
              << format_number(r.tv) << ", modes " << r.estimated_modes << "\n";
  }
  return 0;
}

}  // namespace

int run_cluster(const CommonOptions& opts) {
  const KeyValueConfig kv = load_config(opts, "custom");
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv, base_dir(opts));
  if (!cfg.data_path && !cfg.mixture) throw UsageError("cluster: set 'data' (a dataset file) or 'mixture'");
  return report_custom(opts, cfg, "cluster");
}

int run_risk(const CommonOptions& opts) {
  const KeyValueConfig kv = load_config(opts, "custom");
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv, base_dir(opts));
  if (!cfg.mixture) throw UsageError("risk: set 'mixture' to a mixture spec file");
  return report_custom(opts, cfg, "risk");
}

int run_sweep_command(const CommonOptions& opts) {
  KeyValueConfig kv = load_config(opts, "");
  if (!kv.has("experiment")) kv.set("experiment", "highdim_sweep");
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv, base_dir(opts));
  if (cfg.experiment != ExperimentKind::highdim_sweep && cfg.experiment != ExperimentKind::separation_sweep) {
    throw UsageError("sweep: experiment must be highdim_sweep or separation_sweep");
  }
  return report_sweep(opts, cfg);
}

int run_check(const CommonOptions& opts) {
  const KeyValueConfig kv = load_config(opts, "");
  CheckSuiteConfig cfg;
  cfg.master_seed = kv.get_u64("seed", cfg.master_seed);
  cfg.threads = static_cast<int>(kv.get_int("threads", cfg.threads));
  cfg.chi_square_draws = static_cast<std::size_t>(kv.get_int("chi_square_draws", 1'000'000));
  cfg.low_density_draws = static_cast<std::size_t>(kv.get_int("low_density_draws", 1'000'000));
  cfg.flow_starts = static_cast<std::size_t>(kv.get_int("flow_starts", 50));
  kv.get_string("experiment", "");
  for (const std::string& key : kv.unused_keys()) throw UsageError("check: unknown key '" + key + "'");
  require(cfg.chi_square_draws > 0 && cfg.low_density_draws > 0 && cfg.flow_starts > 0,
          "check: draw counts must be positive");

  const auto t0 = Clock::now();
  const auto results = run_check_battery(cfg);
  auto out = open_output(opts.out, "checks.csv");
  write_checks_header(out);
  bool violated = false;
  for (const BoundCheckResult& r : results) {
    write_checks(out, r);
    std::cout << r.name << ": " << to_string(r.status) << " (" << r.checked << " cases, " << r.violations
              << " violations, max ratio " << format_number(r.max_slack_ratio) << ")\n";
    violated = violated || r.violations > 0;
  }
  write_timing(opts, {{"total", elapsed(t0)}});
  return violated ? 2 : 0;
}

int run_repro(const CommonOptions& opts, const std::string& name) {
  const ExperimentKind kind = parse_experiment_kind(name);
  if (kind == ExperimentKind::custom) throw UsageError("repro: choose basins2d, highdim_sweep or separation_sweep");
  const KeyValueConfig kv = load_config(opts, std::string(to_string(kind)));
  const ExperimentConfig cfg = ExperimentConfig::from_config(kv, base_dir(opts));
  if (kind == ExperimentKind::basins2d) return report_basins(opts, cfg);
  return report_sweep(opts, cfg);
}

}  // namespace modeclust::cli
