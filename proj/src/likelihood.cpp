#include "morder/likelihood.hpp"

#include <cmath>
#include <limits>

#include "morder/numerics.hpp"

namespace morder {

double max_loglik(const ContextCounts& counts, std::uint32_t r) {
    if (r > counts.depth_cap()) throw InvalidArgument("order exceeds the depth cap");
    if (r >= counts.length()) throw InvalidArgument("order must be below the path length");
    const std::uint32_t m = counts.alphabet_size();
    const CountTable& ctx = counts.contexts(r);
    double total = 0.0;
    counts.transitions(r).for_each_nonzero([&](std::uint64_t key, std::uint64_t n_ab) {
        const std::uint64_t n_a = ctx.get(key / m);
        if (n_ab != n_a) {
            total += static_cast<double>(n_ab) * std::log(static_cast<double>(n_ab) / static_cast<double>(n_a));
        }
    });
    return total;
}

double lr_statistic(const ContextCounts& counts, std::uint32_t r, std::uint32_t r_star) {
    if (r_star > r) throw InvalidArgument("lr_statistic requires r_star <= r");
    if (r == r_star) return 0.0;
    return max_loglik(counts, r) - max_loglik(counts, r_star);
}

LilStatistic lil_statistic(const ContextCounts& counts, std::uint32_t r_star, std::uint32_t kappa_n) {
    if (kappa_n > counts.depth_cap() + 1) throw InvalidArgument("cutoff exceeds depth cap + 1");
    LilStatistic out;
    const double base = max_loglik(counts, r_star);
    double scale = std::pow(static_cast<double>(counts.alphabet_size()), r_star);
    for (std::uint32_t r = r_star + 1; r < kappa_n; ++r) {
        scale *= counts.alphabet_size();
        const double v = (max_loglik(counts, r) - base) / scale;
        if (out.empty_range || v > out.value) {
            out.value = v;
            out.argmax = r;
        }
        out.empty_range = false;
    }
    return out;
}

double delta_statistic(const MarkovModel& truth, const ContextCounts& counts, std::span<const Symbol> path,
                       std::uint32_t r) {
    if (counts.length() != path.size()) throw InvalidArgument("counts were not built from this path");
    const LogValue true_ll = log_true_conditional_likelihood(truth, path, r);
    if (true_ll.is_neg_infinity()) throw InvalidArgument("path has zero probability under the truth");
    return max_loglik(counts, r) - true_ll.value();
}

double delta_running_max(const MarkovModel& truth, std::span<const Symbol> path, std::uint32_t r,
                         std::uint64_t from, std::uint64_t to) {
    if (!(r < from && from <= to && to <= path.size())) {
        throw InvalidArgument("delta_running_max requires r < from <= to <= n");
    }
    const std::uint32_t rs = true_order(truth);
    if (r < rs) throw InvalidArgument("order below the true order");
    const std::uint32_t m = truth.alphabet_size();
    const std::vector<double> kernel = kernel_at_order(truth, rs);
    const std::uint64_t size = checked_pow(m, rs);

    IncrementalLoglik ml(m, r);
    double true_ll = 0.0;
    std::uint64_t ctx = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < to; ++i) {
        const Symbol s = path[i];
        if (s >= m) throw InvalidArgument("path symbol outside the alphabet");
        if (i >= r) {
            const double p = kernel[ctx * m + s];
            if (p <= 0.0) throw InvalidArgument("path has zero probability under the truth");
            true_ll += std::log(p);
        }
        ml.push(s);
        ctx = (ctx * m + s) % size;
        if (i + 1 >= from) best = std::max(best, ml.value() - true_ll);
    }
    return best;
}

MixtureKernel mixture_kernel(const MarkovModel& candidate, const MarkovModel& truth, std::uint32_t r) {
    if (candidate.alphabet_size() != truth.alphabet_size()) {
        throw InvalidArgument("candidate and truth alphabets differ");
    }
    const std::vector<double> p = kernel_at_order(candidate, r);
    const std::vector<double> q = kernel_at_order(truth, r);
    MixtureKernel mix{truth.alphabet_size(), r, std::vector<double>(p.size())};
    for (std::size_t k = 0; k < p.size(); ++k) mix.table[k] = 0.5 * (p[k] + q[k]);
    return mix;
}

MartingaleTerms::MartingaleTerms(const MarkovModel& truth, const MixtureKernel& mix)
    : m_(truth.alphabet_size()), order_(mix.order), truth_(kernel_at_order(truth, mix.order)) {
    if (mix.alphabet_size != m_ || mix.table.size() != truth_.size()) {
        throw InvalidArgument("mixture kernel does not match the truth's alphabet/order");
    }
    const std::uint64_t contexts = truth_.size() / m_;
    log_ratio_.assign(truth_.size(), std::numeric_limits<double>::quiet_NaN());
    compensator_.assign(contexts, 0.0);
    bernstein_.assign(contexts, 0.0);
    for (std::uint64_t c = 0; c < contexts; ++c) {
        for (Symbol b = 0; b < m_; ++b) {
            const std::uint64_t k = c * m_ + b;
            const double ps = truth_[k];
            if (ps <= 0.0) continue;
            const double lr = std::log(mix.table[k] / ps);
            log_ratio_[k] = lr;
            compensator_[c] -= ps * lr;
            bernstein_[c] += ps * phi(0.5 * std::abs(lr));
        }
    }
}

double MartingaleTerms::log_ratio(std::uint64_t c, Symbol b) const {
    const double v = log_ratio_[c * m_ + b];
    if (std::isnan(v)) throw InvalidArgument("transition has zero probability under the truth");
    return v;
}

double kl_compensator(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path,
                      std::uint64_t up_to) {
    if (up_to > path.size()) throw InvalidArgument("up_to exceeds the path length");
    const MartingaleTerms terms(truth, mix);
    const std::uint32_t m = terms.alphabet_size();
    const std::uint32_t r = terms.order();
    const std::uint64_t size = terms.num_contexts();
    std::uint64_t ctx = 0;
    double total = 0.0;
    for (std::uint64_t i = 0; i < up_to; ++i) {
        if (i >= r) total += terms.compensator(ctx);
        ctx = (ctx * m + path[i]) % size;
    }
    return total;
}

std::vector<double> martingale_path(const MarkovModel& truth, const MixtureKernel& mix,
                                    std::span<const Symbol> path, std::uint32_t r) {
    if (r != mix.order) throw InvalidArgument("order does not match the mixture kernel");
    const MartingaleTerms terms(truth, mix);
    const std::uint32_t m = terms.alphabet_size();
    const std::uint64_t size = terms.num_contexts();
    std::vector<double> out(path.size() + 1, 0.0);
    std::uint64_t ctx = 0;
    for (std::uint64_t i = 0; i < path.size(); ++i) {
        out[i + 1] = out[i];
        if (i >= r) out[i + 1] += terms.log_ratio(ctx, path[i]) + terms.compensator(ctx);
        ctx = (ctx * m + path[i]) % size;
    }
    return out;
}

IncrementalLoglik::IncrementalLoglik(std::uint32_t alphabet_size, std::uint32_t r)
    : m_(alphabet_size), r_(r), size_(checked_pow(alphabet_size, r)) {
    if (size_ * m_ > (std::uint64_t{1} << 26)) throw InvalidArgument("order too large for dense tracking");
    context_counts_.assign(size_, 0);
    pair_counts_.assign(size_ * m_, 0);
    xlogx_ = {0.0};
}

double IncrementalLoglik::xlogx(std::uint64_t k) {
    while (xlogx_.size() <= k) {
        const double x = static_cast<double>(xlogx_.size());
        xlogx_.push_back(x * std::log(x));
    }
    return xlogx_[k];
}

void IncrementalLoglik::push(Symbol s) {
    if (s >= m_) throw InvalidArgument("symbol outside the alphabet");
    if (n_ >= r_) {
        std::uint64_t& na = context_counts_[ctx_];
        std::uint64_t& nab = pair_counts_[ctx_ * m_ + s];
        context_sum_ += xlogx(na + 1) - xlogx(na);
        pair_sum_ += xlogx(nab + 1) - xlogx(nab);
        ++na;
        ++nab;
    }
    ctx_ = (ctx_ * m_ + s) % size_;
    ++n_;
}

void IncrementalLoglik::reset() {
    std::fill(context_counts_.begin(), context_counts_.end(), 0);
    std::fill(pair_counts_.begin(), pair_counts_.end(), 0);
    n_ = 0;
    ctx_ = 0;
    pair_sum_ = context_sum_ = 0.0;
}

}  // namespace morder
