#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"
#include "biasbench/linear_svm.hpp"

namespace biasbench {

struct DomainAssignment {
  std::vector<int> local_cluster;  // per sample, in [0, K*S)
  std::vector<int> domain;         // per sample, in [0, S)
  int n_classes = 0;
  int n_domains = 0;
  int rounds = 0;  // alternation rounds executed
};

// Latent-domain discovery: samples are grouped into K*S local clusters (S
// per class, so every local cluster is single-class), then the cluster means
// are matched one-to-one per class onto S domain centroids. The two stages
// alternate until assignments stabilize or max_rounds is hit. Farthest-point
// seeding per class with the seeded generator; deterministic throughout.
// Every class must have at least S samples.
DomainAssignment reshape_discover(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                  int s_domains, std::uint64_t seed, int max_rounds = 100);

enum class ReshapeCombineMode { kBestSubdomainSa, kWeightedDam };

struct ReshapeCombineEntry {
  std::string config;            // "source=1" or "gamma1=0.3"
  double accuracy = 0.0;         // recognition rate on the target, percent
  std::vector<int> predictions;  // per target sample
};

struct ReshapeCombineResult {
  std::vector<ReshapeCombineEntry> table;
  std::size_t best_index = 0;
};

// Combines discovered sub-domains against a labeled target (the target
// labels are used only to score configurations; this mirrors the
// oracle-selection protocol). SA mode adapts each sub-domain separately as
// the sole source; DAM mode uses the sub-domains jointly as weighted sources
// sweeping gamma_grid (gamma2 = 1 - gamma1; requires exactly 2 domains).
// The full per-configuration table is returned along with the best entry.
ReshapeCombineResult reshape_combine(const Eigen::MatrixXd& source_x,
                                     const std::vector<int>& source_y,
                                     const DomainAssignment& assignment, const Dataset& target,
                                     ReshapeCombineMode mode,
                                     const std::vector<double>& gamma_grid,
                                     const std::vector<double>& c_grid, std::uint64_t seed);

}  // namespace biasbench
