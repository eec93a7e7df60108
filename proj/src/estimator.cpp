#include "morder/estimator.hpp"

#include <cmath>

#include "morder/error.hpp"
#include "morder/likelihood.hpp"
#include "morder/parallel.hpp"

namespace morder {

EstimateResult select_order(std::span<const double> loglik, std::span<const double> penalty) {
    if (loglik.empty() || loglik.size() != penalty.size()) {
        throw InvalidArgument("score table needs equal, nonzero numbers of log-likelihoods and penalties");
    }
    EstimateResult out;
    out.kappa_used = static_cast<std::uint32_t>(loglik.size());
    for (std::uint32_t r = 0; r < loglik.size(); ++r) {
        out.table.push_back({r, loglik[r], penalty[r], loglik[r] - penalty[r]});
    }
    double best = out.table[0].score;
    for (const auto& row : out.table) {
        if (row.score > best) {
            best = row.score;
            out.chosen_order = row.order;
        }
    }
    for (const auto& row : out.table) {
        if (row.order != out.chosen_order && row.score == best) out.tie_broken = true;
    }
    return out;
}

EstimateResult estimate_order(const ContextCounts& counts, const PenaltySpec& pen, const CutoffSpec& cut,
                              std::uint32_t alphabet_size) {
    if (alphabet_size != counts.alphabet_size()) throw InvalidArgument("alphabet size does not match the counts");
    const double n = static_cast<double>(counts.length());
    if (n < kMinLength) throw InvalidArgument("path too short for estimation (n < 3)");
    const std::uint32_t kappa = cutoff_value(cut, n, alphabet_size);
    if (counts.depth_cap() + 1 < kappa) {
        throw InvalidArgument("depth cap " + std::to_string(counts.depth_cap()) + " too small; cutoff needs depth cap " +
                              std::to_string(kappa - 1));
    }
    std::vector<double> ll(kappa);
    std::vector<double> pn(kappa);
    for (std::uint32_t r = 0; r < kappa; ++r) {
        ll[r] = max_loglik(counts, r);
        pn[r] = penalty_value(pen, n, r, alphabet_size);
    }
    return select_order(ll, pn);
}

std::uint32_t required_depth(const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                             std::uint32_t alphabet_size) {
    std::uint32_t kappa = 1;
    for (std::uint64_t n : n_grid) kappa = std::max(kappa, cutoff_value(cut, static_cast<double>(n), alphabet_size));
    return kappa - 1;
}

void validate_grid(const std::vector<std::uint64_t>& n_grid) {
    if (n_grid.empty()) throw InvalidArgument("n grid is empty");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
        if (static_cast<double>(n_grid[k]) < kMinLength) throw InvalidArgument("grid lengths must be at least 3");
        if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw InvalidArgument("n grid must be strictly increasing");
    }
}

std::vector<ReplicationRow> evaluate_path(std::span<const Symbol> path, std::uint32_t alphabet_size,
                                          std::uint32_t true_order, const std::vector<PenaltySpec>& pens,
                                          const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                                          std::uint32_t replication, std::uint64_t seed) {
    validate_grid(n_grid);
    if (path.size() < n_grid.back()) throw InvalidArgument("path shorter than the largest grid length");
    const std::uint32_t depth = required_depth(cut, n_grid, alphabet_size);
    if (depth >= n_grid.front()) throw InvalidArgument("cutoff exceeds the shortest grid length");

    ContextCounts counts(alphabet_size, depth);
    std::vector<ReplicationRow> rows;
    std::uint64_t done = 0;
    for (std::uint64_t n : n_grid) {
        counts.append(path.subspan(done, n - done));
        done = n;
        const std::uint32_t kappa = cutoff_value(cut, static_cast<double>(n), alphabet_size);
        const double lil = true_order < kappa ? lil_statistic(counts, true_order, kappa).value : 0.0;
        for (std::size_t p = 0; p < pens.size(); ++p) {
            ReplicationRow row;
            row.penalty_index = p;
            row.n = n;
            row.replication = replication;
            row.estimate = estimate_order(counts, pens[p], cut, alphabet_size);
            row.chosen_order = row.estimate.chosen_order;
            row.true_order = true_order;
            row.lil_stat = lil;
            row.seed = seed;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

ConsistencyResult assemble_consistency(std::vector<std::vector<ReplicationRow>> per_replication,
                                       const std::vector<PenaltySpec>& pens, const CutoffSpec& cut,
                                       const std::vector<std::uint64_t>& n_grid, std::uint32_t true_order,
                                       std::uint32_t alphabet_size) {
    ConsistencyResult out;
    for (const auto& p : pens) out.penalty_labels.push_back(p.label());
    out.cutoff_label = cut.label();
    out.true_order = true_order;
    const auto replications = static_cast<std::uint32_t>(per_replication.size());
    for (std::size_t p = 0; p < pens.size(); ++p) {
        for (std::uint64_t n : n_grid) {
            RecoveryRow rec;
            rec.penalty_index = p;
            rec.n = n;
            rec.kappa = cutoff_value(cut, static_cast<double>(n), alphabet_size);
            rec.replications = replications;
            out.recovery.push_back(rec);
        }
    }
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
        for (std::size_t p = 0; p < pens.size(); ++p) {
            RecoveryRow& rec = out.recovery[p * n_grid.size() + j];
            for (std::uint32_t k = 0; k < replications; ++k) {
                ReplicationRow& row = per_replication[k].at(j * pens.size() + p);
                if (row.chosen_order == true_order) {
                    ++rec.recovered;
                } else if (row.chosen_order < true_order) {
                    ++rec.under;
                } else {
                    ++rec.over;
                }
                out.rows.push_back(std::move(row));
            }
        }
    }
    return out;
}

ConsistencyResult consistency_experiment(const MarkovModel& model, const std::vector<PenaltySpec>& pens,
                                         const CutoffSpec& cut, const std::vector<std::uint64_t>& n_grid,
                                         std::uint32_t replications, std::uint64_t seed, unsigned jobs) {
    if (pens.empty()) throw InvalidArgument("at least one penalty is required");
    if (replications == 0) throw InvalidArgument("replications must be at least 1");
    validate_grid(n_grid);
    if (!has_unique_stationary_law(model)) throw ReducibleChain("model is not irreducible");

    const std::uint32_t m = model.alphabet_size();
    const std::uint32_t r_star = true_order(model);
    std::vector<std::vector<ReplicationRow>> per_rep(replications);
    parallel_for(replications, jobs, [&](std::size_t k) {
        const std::uint64_t rep_seed = derive_seed(seed, k);
        const PathSample path = sample_path(model, n_grid.back(), rep_seed);
        per_rep[k] = evaluate_path(path.symbols, m, r_star, pens, cut, n_grid, static_cast<std::uint32_t>(k),
                                   rep_seed);
    });
    return assemble_consistency(std::move(per_rep), pens, cut, n_grid, r_star, m);
}

double underestimation_gap(const MarkovModel& model, std::uint32_t r) {
    const std::uint32_t r_star = true_order(model);
    if (r >= r_star) return 0.0;
    const std::uint32_t m = model.alphabet_size();

    // E*[log P*(X | last r* symbols)]
    const std::vector<double> pi_star = block_probabilities(model, r_star);
    const std::vector<double> kernel = kernel_at_order(model, r_star);
    double truth_term = 0.0;
    for (std::size_t c = 0; c < pi_star.size(); ++c) {
        if (pi_star[c] <= 0.0) continue;
        for (Symbol b = 0; b < m; ++b) {
            const double p = kernel[c * m + b];
            if (p > 0.0) truth_term += pi_star[c] * p * std::log(p);
        }
    }

    // E*[log Q_r(X | last r symbols)] from the stationary (r+1)- and r-block laws.
    const std::vector<double> joint = block_probabilities(model, r + 1);
    const std::vector<double> marginal = block_probabilities(model, r);
    double reduced_term = 0.0;
    for (std::size_t k = 0; k < joint.size(); ++k) {
        if (joint[k] > 0.0) reduced_term += joint[k] * std::log(joint[k] / marginal[k / m]);
    }
    return std::max(0.0, truth_term - reduced_term);
}

}  // namespace morder
