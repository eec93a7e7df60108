#pragma once

// Penalized maximum-likelihood order estimator, the consistency experiment
// harness, and the analytic underestimation gap.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "morder/counts.hpp"
#include "morder/model.hpp"
#include "morder/penalty.hpp"

namespace morder {

struct ScoreRow {
    std::uint32_t order = 0;
    double loglik = 0.0;
    double penalty = 0.0;
    double score = 0.0;  // loglik - penalty
};

struct EstimateResult {
    std::uint32_t chosen_order = 0;
    std::vector<ScoreRow> table;  // orders 0 .. kappa_used - 1
    std::uint32_t kappa_used = 0;
    bool tie_broken = false;      // another order attained the same maximal score
};

// argmax over 0 <= r < kappa(n) of max_loglik(r) - pen(n, r), smallest r on ties.
// Requires depth cap >= kappa(n) - 1 and n >= kMinLength.
EstimateResult estimate_order(const ContextCounts& counts, const PenaltySpec& pen, const CutoffSpec& cut,
                              std::uint32_t alphabet_size);

// Argmax over externally supplied per-order log-likelihoods and penalties.
EstimateResult select_order(std::span<const double> loglik, std::span<const double> penalty);

struct RecoveryRow {
    std::size_t penalty_index = 0;
    std::uint64_t n = 0;
    std::uint32_t kappa = 0;
    std::uint32_t replications = 0;
    std::uint32_t recovered = 0;
    std::uint32_t under = 0;
    std::uint32_t over = 0;

    double recovery_rate() const { return replications ? static_cast<double>(recovered) / replications : 0.0; }
};

struct ReplicationRow {
    std::size_t penalty_index = 0;
    std::uint64_t n = 0;
    std::uint32_t replication = 0;
    std::uint32_t chosen_order = 0;
    std::uint32_t true_order = 0;
    double lil_stat = 0.0;
    std::uint64_t seed = 0;
    EstimateResult estimate;
};

struct ConsistencyResult {
    std::vector<std::string> penalty_labels;
    std::string cutoff_label;
    std::uint32_t true_order = 0;
    std::vector<RecoveryRow> recovery;      // ordered by (penalty, n)
    std::vector<ReplicationRow> rows;       // ordered by (n, penalty, replication)
};

// Replication k uses seed derive_seed(seed, k) and one path of length max(n_grid);
// every n in the grid is evaluated on the prefix of that path. All penalties share
// the same paths. n_grid must be strictly increasing with n >= 3.
ConsistencyResult consistency_experiment(const MarkovModel& model, const std::vector<PenaltySpec>& pens,
                                         const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                                         std::uint32_t replications, std::uint64_t seed, unsigned jobs = 1);

inline ConsistencyResult consistency_experiment(const MarkovModel& model, const PenaltySpec& pen,
                                                const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                                                std::uint32_t replications, std::uint64_t seed,
                                                unsigned jobs = 1) {
    return consistency_experiment(model, std::vector<PenaltySpec>{pen}, cut, n_grid, replications, seed, jobs);
}

// Rows for one path evaluated on its prefixes at every n of the grid, ordered by
// (n, penalty). The path must be at least max(n_grid) long.
std::vector<ReplicationRow> evaluate_path(std::span<const Symbol> path, std::uint32_t alphabet_size,
                                          std::uint32_t true_order, const std::vector<PenaltySpec>& pens,
                                          const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                                          std::uint32_t replication, std::uint64_t seed);

// Merges per-replication rows from evaluate_path into a recovery table.
ConsistencyResult assemble_consistency(std::vector<std::vector<ReplicationRow>> per_replication,
                                       const std::vector<PenaltySpec>& pens, const CutoffSpec& cut,
                                       const std::vector<std::uint64_t>& n_grid, std::uint32_t true_order,
                                       std::uint32_t alphabet_size);

// Throws InvalidArgument unless n_grid is nonempty, strictly increasing and >= 3.
void validate_grid(const std::vector<std::uint64_t>& n_grid);

// Depth cap needed to evaluate estimate_order and the LIL statistic at every n.
std::uint32_t required_depth(const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                             std::uint32_t alphabet_size);

// E*[log P*(X | last r* symbols)] - E*[log Q_r(X | last r symbols)], Q_r the
// stationary conditional law given r symbols. 0 for r >= true order.
double underestimation_gap(const MarkovModel& model, std::uint32_t r);

}  // namespace morder
