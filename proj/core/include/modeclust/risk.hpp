#pragma once

#include "modeclust/assignment.hpp"
#include "modeclust/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace modeclust {

/// Co-membership disagreement counts between two labelings.
struct PairCounts {
  std::uint64_t pairs = 0;
  std::uint64_t disagreements = 0;
  std::size_t points = 0;    // points that entered the count
  std::size_t excluded = 0;  // points dropped because either label is kUnresolved

  double loss() const { return pairs == 0 ? 0.0 : static_cast<double>(disagreements) / static_cast<double>(pairs); }
};

/// Counts from the contingency table of the two labelings in O(n + K K').
/// Labels are opaque identifiers; only co-membership matters. `mask`, when
/// non-empty, restricts the count to points whose mask entry is true.
PairCounts pair_disagreements(std::span<const int> truth, std::span<const int> estimate,
                              const std::vector<bool>& mask = {});

/// L: the fraction of unordered pairs whose co-membership differs, i.e. one
/// minus the Rand index. Throws UsageError for n < 2 or unequal lengths.
double pairwise_loss(std::span<const int> truth, std::span<const int> estimate);

struct RiskReport {
  double loss = 0.0;
  double rand_index = 1.0;
  std::size_t n_points = 0;
  std::uint64_t n_pairs = 0;
  std::optional<double> core_loss;  // nullopt when fewer than one core-core pair
  double core_fraction = 0.0;
  std::size_t excluded = 0;
};

/// Overall loss plus the loss restricted to pairs with both points in cluster cores.
RiskReport core_risk_decomposition(const ClusterAssignment& truth, const ClusterAssignment& estimate,
                                   const std::vector<bool>& core_flags);

/// Result of one sample -> cluster -> score replication.
struct ReplicationOutcome {
  double loss = 0.0;
  std::optional<double> core_loss;
  double core_fraction = 0.0;
  std::size_t n_points = 0;
  std::size_t excluded = 0;
  std::size_t unresolved_truth = 0;
  std::size_t true_modes = 0;
  std::size_t estimated_modes = 0;
  bool flagged = false;
};

/// One replication. `tighten` asks for a stricter flow oracle on the rerun.
using ReplicationFn = std::function<ReplicationOutcome(std::size_t rep, RngStream& rng, bool tighten)>;

struct ReplicatedRisk {
  double mean_loss = 0.0;
  std::optional<double> stderr_loss;  // nullopt for a single replication
  std::vector<double> losses;
  std::vector<ReplicationOutcome> outcomes;
  std::size_t flagged = 0;
};

/// Runs `replications` independent replications; replication r draws from the
/// substream derive(master_seed, {stream_tag, r}). A replication whose ground
/// truth leaves more than 1% of points unresolved is rerun once with
/// tighten = true, then flagged if still above 1%.
ReplicatedRisk replicate_risk(std::size_t replications, std::uint64_t master_seed,
                              const ReplicationFn& pipeline, int threads = 1,
                              std::uint64_t stream_tag = 0);

/// Mean and standard error of the mean (nullopt for fewer than two values).
std::pair<double, std::optional<double>> mean_and_stderr(std::span<const double> values);

}  // namespace modeclust
