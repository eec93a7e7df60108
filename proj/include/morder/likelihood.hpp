#pragma once

// Maximized log-likelihoods per order, likelihood-ratio and LIL statistics,
// the excess-likelihood statistic Delta, and the martingale decomposition of
// the log-likelihood ratio against an equal-mixture kernel.

#include <cstdint>
#include <span>
#include <vector>

#include "morder/counts.hpp"
#include "morder/model.hpp"

namespace morder {

// Transition table (P(b|a) + P*(b|a)) / 2 at a common order.
struct MixtureKernel {
    std::uint32_t alphabet_size = 0;
    std::uint32_t order = 0;
    std::vector<double> table;  // row-major, context * m + b

    std::span<const double> row(std::uint64_t context) const {
        return std::span<const double>(table).subspan(context * alphabet_size, alphabet_size);
    }
    double at(std::uint64_t context, Symbol b) const { return table[context * alphabet_size + b]; }
};

// sup over order-r chains of log P(x_{1:n}), with the initial segment given
// unit mass: sum_{a,b} N(a,b) log(N(a,b)/N(a)), 0 log 0 = 0.
double max_loglik(const ContextCounts& counts, std::uint32_t r);

// max_loglik(r) - max_loglik(r_star); requires r_star <= r.
double lr_statistic(const ContextCounts& counts, std::uint32_t r, std::uint32_t r_star);

struct LilStatistic {
    double value = 0.0;        // 0 when the range is empty
    bool empty_range = true;
    std::uint32_t argmax = 0;  // maximizing order when the range is nonempty
};

// max over r_star < r < kappa_n of lr_statistic(r, r_star) / m^r.
LilStatistic lil_statistic(const ContextCounts& counts, std::uint32_t r_star, std::uint32_t kappa_n);

// max_loglik(counts, r) - log P*(x_{1:n} | x_{1:r}); counts must be built from path.
double delta_statistic(const MarkovModel& truth, const ContextCounts& counts,
                       std::span<const Symbol> path, std::uint32_t r);

// max over i in [from, to] of the Delta statistic of the prefix x_{1:i}.
// Requires r < from <= to <= path length.
double delta_running_max(const MarkovModel& truth, std::span<const Symbol> path, std::uint32_t r,
                         std::uint64_t from, std::uint64_t to);

MixtureKernel mixture_kernel(const MarkovModel& candidate, const MarkovModel& truth, std::uint32_t r);

// Per-context quantities of the decomposition M = (log-ratio sum) + D for a
// fixed truth and mixture: log(P~/P*), the conditional KL term and the
// Bernstein-norm term sum_a P*(a|c) phi(|log(P~(a|c)/P*(a|c))| / 2).
class MartingaleTerms {
public:
    MartingaleTerms(const MarkovModel& truth, const MixtureKernel& mix);

    std::uint32_t order() const noexcept { return order_; }
    std::uint32_t alphabet_size() const noexcept { return m_; }
    std::uint64_t num_contexts() const noexcept { return compensator_.size(); }

    double truth_prob(std::uint64_t c, Symbol b) const { return truth_[c * m_ + b]; }
    // Throws InvalidArgument when the transition has zero probability under the truth.
    double log_ratio(std::uint64_t c, Symbol b) const;
    double compensator(std::uint64_t c) const { return compensator_[c]; }
    double bernstein(std::uint64_t c) const { return bernstein_[c]; }

private:
    std::uint32_t m_;
    std::uint32_t order_;
    std::vector<double> truth_;
    std::vector<double> log_ratio_;
    std::vector<double> compensator_;
    std::vector<double> bernstein_;
};

// D = -sum_{i=r+1}^{up_to} sum_a P*(a|ctx_i) log(P~(a|ctx_i)/P*(a|ctx_i)), r = mix.order.
double kl_compensator(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path,
                      std::uint64_t up_to);

// M_0..M_n with M_i = sum_{l=r+1}^{i} log(P~(x_l|ctx)/P*(x_l|ctx)) + D_i; M_i = 0 for i <= r.
std::vector<double> martingale_path(const MarkovModel& truth, const MixtureKernel& mix,
                                    std::span<const Symbol> path, std::uint32_t r);

// max_loglik for one order, updated in O(1) per appended symbol.
class IncrementalLoglik {
public:
    IncrementalLoglik(std::uint32_t alphabet_size, std::uint32_t r);

    void push(Symbol s);
    void reset();
    double value() const noexcept { return pair_sum_ - context_sum_; }
    std::uint64_t length() const noexcept { return n_; }

private:
    double xlogx(std::uint64_t k);

    std::uint32_t m_;
    std::uint32_t r_;
    std::uint64_t size_;
    std::uint64_t n_ = 0;
    std::uint64_t ctx_ = 0;
    std::vector<std::uint64_t> context_counts_;
    std::vector<std::uint64_t> pair_counts_;
    std::vector<double> xlogx_;
    double pair_sum_ = 0.0;
    double context_sum_ = 0.0;
};

}  // namespace morder
