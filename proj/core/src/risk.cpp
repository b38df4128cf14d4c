#include "modeclust/risk.hpp"

#include "modeclust/parallel.hpp"

#include <cmath>
#include <unordered_map>

namespace modeclust {

namespace {

std::uint64_t choose2(std::uint64_t c) { return c * (c - 1) / 2; }

std::uint64_t pair_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

PairCounts pair_disagreements(std::span<const int> truth, std::span<const int> estimate,
                              const std::vector<bool>& mask) {
  require(truth.size() == estimate.size(), "pair_disagreements: labelings differ in length");
  require(mask.empty() || mask.size() == truth.size(), "pair_disagreements: mask length mismatch");
  std::unordered_map<int, std::uint64_t> rows;
  std::unordered_map<int, std::uint64_t> cols;
  std::unordered_map<std::uint64_t, std::uint64_t> cells;
  PairCounts out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (truth[i] == kUnresolved || estimate[i] == kUnresolved) {
      ++out.excluded;
      continue;
    }
    ++rows[truth[i]];
    ++cols[estimate[i]];
    ++cells[pair_key(truth[i], estimate[i])];
    ++out.points;
  }
  std::uint64_t same_truth = 0, same_est = 0, same_both = 0;
  for (const auto& [k, c] : rows) same_truth += choose2(c);
  for (const auto& [k, c] : cols) same_est += choose2(c);
  for (const auto& [k, c] : cells) same_both += choose2(c);
  out.pairs = choose2(out.points);
  out.disagreements = same_truth + same_est - 2 * same_both;
  return out;
}

double pairwise_loss(std::span<const int> truth, std::span<const int> estimate) {
  require(truth.size() == estimate.size(), "pairwise_loss: labelings differ in length");
  require(truth.size() >= 2, "pairwise_loss: need at least two points");
  return pair_disagreements(truth, estimate).loss();
}

RiskReport core_risk_decomposition(const ClusterAssignment& truth, const ClusterAssignment& estimate,
                                   const std::vector<bool>& core_flags) {
  require(truth.size() == estimate.size(), "core_risk_decomposition: assignments differ in length");
  require(core_flags.size() == truth.size(), "core_risk_decomposition: core flag length mismatch");
  require(truth.size() >= 2, "core_risk_decomposition: need at least two points");
  const PairCounts all = pair_disagreements(truth.labels, estimate.labels);
  const PairCounts core = pair_disagreements(truth.labels, estimate.labels, core_flags);

  RiskReport r;
  r.loss = all.loss();
  r.rand_index = 1.0 - r.loss;
  r.n_points = all.points;
  r.n_pairs = all.pairs;
  r.excluded = all.excluded;
  if (core.pairs > 0) r.core_loss = core.loss();
  std::size_t in_core = 0;
  for (bool f : core_flags) in_core += f ? 1 : 0;
  r.core_fraction = static_cast<double>(in_core) / static_cast<double>(core_flags.size());
  return r;
}

std::pair<double, std::optional<double>> mean_and_stderr(std::span<const double> values) {
  require(!values.empty(), "mean_and_stderr: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nullopt};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

ReplicatedRisk replicate_risk(std::size_t replications, std::uint64_t master_seed,
                              const ReplicationFn& pipeline, int threads, std::uint64_t stream_tag) {
  require(replications >= 1, "replicate_risk: replications must be at least 1");
  ReplicatedRisk out;
  out.outcomes.resize(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    auto too_many_unresolved = [](const ReplicationOutcome& o) {
      return static_cast<double>(o.unresolved_truth) > 0.01 * static_cast<double>(o.n_points);
    };
    RngStream rng = RngStream::derive(master_seed, {stream_tag, r});
    ReplicationOutcome o = pipeline(r, rng, false);
    if (too_many_unresolved(o)) {
      RngStream again = RngStream::derive(master_seed, {stream_tag, r});
      o = pipeline(r, again, true);
      if (too_many_unresolved(o)) o.flagged = true;
    }
    out.outcomes[r] = o;
  });
  for (const auto& o : out.outcomes) {
    out.losses.push_back(o.loss);
    out.flagged += o.flagged ? 1 : 0;
  }
  std::tie(out.mean_loss, out.stderr_loss) = mean_and_stderr(out.losses);
  return out;
}

}  // namespace modeclust
