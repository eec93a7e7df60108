#include "morder/diagnostics.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "morder/error.hpp"
#include "morder/parallel.hpp"

namespace morder {

namespace {

constexpr double kRelTol = 1e-9;

// Stationary block laws for r = 0 .. rho - 1, shared across repeated typicality checks.
struct BlockLaws {
    std::vector<std::vector<double>> laws;

    BlockLaws(const MarkovModel& truth, std::uint32_t rho) {
        for (std::uint32_t r = 0; r < rho; ++r) laws.push_back(block_probabilities(truth, r));
    }
};

TypicalityReport typicality_with(const BlockLaws& blocks, const ContextCounts& counts, double eta) {
    TypicalityReport rep;
    rep.eta = eta;
    rep.rho_n = static_cast<std::uint32_t>(blocks.laws.size());
    rep.holds = true;
    const double n = static_cast<double>(counts.length());
    for (std::uint32_t r = 0; r < rep.rho_n; ++r) {
        const auto& pi = blocks.laws[r];
        const CountTable& ctx = counts.contexts(r);
        double dev = 0.0;
        for (std::uint64_t a = 0; a < pi.size(); ++a) {
            if (pi[a] <= 0.0) continue;
            const double freq = static_cast<double>(ctx.get(a)) / ((n - r) * pi[a]);
            dev = std::max(dev, std::abs(freq - 1.0));
        }
        rep.deviation.push_back(dev);
        if (!(dev < eta)) rep.holds = false;
    }
    return rep;
}

void check_eta(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0,1)");
}

bool event_F_with(const BlockLaws& blocks, std::uint32_t m, std::span<const Symbol> path, double eta) {
    const std::uint64_t n = path.size() / 2;
    const std::uint32_t rho = static_cast<std::uint32_t>(blocks.laws.size());
    ContextCounts counts(m, rho > 0 ? rho - 1 : 0);
    counts.append(path.first(n));
    if (!typicality_with(blocks, counts, eta).holds) return false;
    counts.append(path.subspan(n));
    return typicality_with(blocks, counts, eta).holds;
}

void check_event_F_args(std::span<const Symbol> path, std::uint32_t rho) {
    if (path.size() % 2 != 0) throw InvalidArgument("event_F needs a path of even length 2n");
    if (rho > path.size() / 4) throw InvalidArgument("event_F needs rho <= n/2");
}

void check_same_shape(const MixtureKernel& a, const MixtureKernel& b) {
    if (a.order != b.order) throw InvalidArgument("kernels have different orders");
    if (a.alphabet_size != b.alphabet_size || a.table.size() != b.table.size()) {
        throw InvalidArgument("kernels have different alphabets");
    }
}

// sum_b (sqrt(A(b|c)) - sqrt(B(b|c)))^2 per context.
std::vector<double> row_distances(const MixtureKernel& a, const MixtureKernel& b) {
    const std::uint32_t m = a.alphabet_size;
    std::vector<double> out(a.table.size() / m, 0.0);
    for (std::size_t k = 0; k < a.table.size(); ++k) {
        const double d = std::sqrt(a.table[k]) - std::sqrt(b.table[k]);
        out[k / m] += d * d;
    }
    return out;
}

bool le_with_tol(double lhs, double rhs) { return lhs <= rhs * (1.0 + kRelTol) + 1e-300; }

}  // namespace

BoundParams BoundParams::from_eta(double eta) {
    check_eta(eta);
    BoundParams p;
    p.eta = eta;
    p.C3 = 4.0 * (1.0 + eta) / (1.0 - eta);
    p.C4 = 1.0 / (1.0 - eta);
    p.c = std::sqrt(8.0 * p.C3 / p.C4);
    p.C5 = (8.0 * std::sqrt(p.C4) + p.c) * std::sqrt(2.0 * std::numbers::pi * std::numbers::e);
    return p;
}

void BoundParams::validate() const {
    check_eta(eta);
    for (double v : {K, C_universal, c0, c1, C0, C1, C1_prime, C2, C6, C3, C4, c, C5}) {
        if (!(v > 0.0)) throw InvalidArgument("bound constants must be positive");
    }
}

TypicalityReport typicality_check(const MarkovModel& truth, const ContextCounts& counts, double eta,
                                  std::uint32_t rho_n) {
    check_eta(eta);
    if (counts.alphabet_size() != truth.alphabet_size()) throw InvalidArgument("alphabet size mismatch");
    if (rho_n > counts.depth_cap() + 1) throw InvalidArgument("rho exceeds depth cap + 1");
    if (rho_n > counts.length()) throw InvalidArgument("rho exceeds the path length");
    return typicality_with(BlockLaws(truth, rho_n), counts, eta);
}

bool event_F(const MarkovModel& truth, std::span<const Symbol> path, double eta, std::uint32_t rho) {
    check_eta(eta);
    check_event_F_args(path, rho);
    return event_F_with(BlockLaws(truth, rho), truth.alphabet_size(), path, eta);
}

double hellinger_path_distance(const ContextCounts& counts, const MixtureKernel& a, const MixtureKernel& b) {
    check_same_shape(a, b);
    if (a.alphabet_size != counts.alphabet_size()) throw InvalidArgument("alphabet size mismatch");
    const std::vector<double> d = row_distances(a, b);
    double total = 0.0;
    counts.contexts(a.order).for_each_nonzero(
        [&](std::uint64_t c, std::uint64_t n_a) { total += static_cast<double>(n_a) * d[c]; });
    return total;
}

double hellinger_stationary_distance(const MarkovModel& truth, const MixtureKernel& a, const MixtureKernel& b) {
    check_same_shape(a, b);
    if (a.alphabet_size != truth.alphabet_size()) throw InvalidArgument("alphabet size mismatch");
    const std::vector<double> pi = block_probabilities(truth, a.order);
    const std::vector<double> d = row_distances(a, b);
    double total = 0.0;
    for (std::size_t c = 0; c < pi.size(); ++c) total += pi[c] * d[c];
    return total;
}

MixtureKernel truth_kernel(const MarkovModel& truth, std::uint32_t r) {
    return MixtureKernel{truth.alphabet_size(), r, kernel_at_order(truth, r)};
}

double bernstein_norm(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path,
                      std::uint64_t up_to) {
    if (up_to > path.size()) throw InvalidArgument("up_to exceeds the path length");
    const MartingaleTerms terms(truth, mix);
    const std::uint32_t m = terms.alphabet_size();
    const std::uint64_t size = terms.num_contexts();
    std::uint64_t ctx = 0;
    double total = 0.0;
    for (std::uint64_t i = 0; i < up_to; ++i) {
        if (i >= terms.order()) total += terms.bernstein(ctx);
        ctx = (ctx * m + path[i]) % size;
    }
    return 8.0 * total;
}

BracketGrid bracket_grid(const MarkovModel& truth, std::span<const double> candidate_kernel, std::uint32_t r,
                         double beta) {
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    const std::uint32_t m = truth.alphabet_size();
    const std::vector<double> pi = block_probabilities(truth, r);
    if (candidate_kernel.size() != pi.size() * m) throw InvalidArgument("candidate kernel has the wrong size");

    BracketGrid g;
    g.alphabet_size = m;
    g.order = r;
    g.beta = beta;
    g.lower.assign(candidate_kernel.size(), 0.0);
    g.upper.assign(candidate_kernel.size(), 1.0);
    g.cell_lo.assign(candidate_kernel.size(), -1);
    g.cell_hi.assign(candidate_kernel.size(), -1);
    g.supported.assign(pi.size(), false);
    for (std::uint64_t c = 0; c < pi.size(); ++c) {
        if (pi[c] <= 0.0) continue;
        g.supported[c] = true;
        const double scale = std::sqrt(pi[c]) / beta;
        for (Symbol b = 0; b < m; ++b) {
            const std::uint64_t k = c * m + b;
            const double p = candidate_kernel[k];
            const double x = scale * std::sqrt(p);
            const double nearest = std::round(x);
            if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) {
                g.lower[k] = g.upper[k] = p;
                g.cell_lo[k] = g.cell_hi[k] = static_cast<std::int64_t>(nearest);
                continue;
            }
            const double lo = std::floor(x);
            const double hi = std::ceil(x);
            g.lower[k] = std::min(p, (lo / scale) * (lo / scale));
            g.upper[k] = std::max(p, (hi / scale) * (hi / scale));
            g.cell_lo[k] = static_cast<std::int64_t>(lo);
            g.cell_hi[k] = static_cast<std::int64_t>(hi);
        }
    }
    return g;
}

double bracket_beta(double delta, std::uint64_t n, std::uint32_t r, std::uint32_t alphabet_size, double C4) {
    if (!(delta > 0.0) || !(C4 > 0.0)) throw InvalidArgument("delta and C4 must be positive");
    if (2 * n <= r) throw InvalidArgument("bracket_beta needs 2n > r");
    const double cells = static_cast<double>(checked_pow(alphabet_size, r + 1));
    return delta / std::sqrt(4.0 * C4 * static_cast<double>(2 * n - r) * cells);
}

PathBracketCheck check_path_brackets(const MarkovModel& truth, const BracketGrid& grid,
                                     std::span<const double> candidate_kernel, std::span<const Symbol> path) {
    const std::uint32_t m = grid.alphabet_size;
    const std::uint32_t r = grid.order;
    if (m != truth.alphabet_size() || candidate_kernel.size() != grid.lower.size()) {
        throw InvalidArgument("bracket grid does not match the truth or candidate");
    }
    const std::vector<double> truth_k = kernel_at_order(truth, r);
    const std::vector<double> pi = block_probabilities(truth, r);
    const std::uint64_t size = pi.size();

    // Per-context 8 sum_b P*(b|a) phi((Upsilon - Lambda) / 2).
    std::vector<double> gap(size, 0.0);
    for (std::uint64_t c = 0; c < size; ++c) {
        for (Symbol b = 0; b < m; ++b) {
            const std::uint64_t k = c * m + b;
            const double ps = truth_k[k];
            if (ps <= 0.0) continue;
            const double lam = std::log(0.5 * (grid.lower[k] + ps) / ps);
            const double ups = std::log(0.5 * (grid.upper[k] + ps) / ps);
            gap[c] += 8.0 * ps * phi(0.5 * (ups - lam));
        }
    }

    PathBracketCheck out;
    std::vector<std::uint64_t> visits(size, 0);
    std::uint64_t ctx = 0;
    for (std::uint64_t i = 0; i < path.size(); ++i) {
        const Symbol b = path[i];
        if (b >= m) throw InvalidArgument("path symbol outside the alphabet");
        if (i >= r) {
            const std::uint64_t k = ctx * m + b;
            const double ps = truth_k[k];
            if (ps <= 0.0) throw InvalidArgument("path has zero probability under the truth");
            const double xi = std::log(0.5 * (candidate_kernel[k] + ps) / ps);
            const double lam = std::log(0.5 * (grid.lower[k] + ps) / ps);
            const double ups = std::log(0.5 * (grid.upper[k] + ps) / ps);
            if (!(lam <= xi && xi <= ups)) ++out.violations;
            out.phi_gap += gap[ctx];
            ++visits[ctx];
            ++out.steps;
        }
        ctx = (ctx * m + b) % size;
    }
    double weight = 0.0;
    for (std::uint64_t c = 0; c < size; ++c) {
        if (visits[c] == 0) continue;
        weight += pi[c] > 0.0 ? static_cast<double>(visits[c]) / pi[c] : std::numeric_limits<double>::infinity();
    }
    out.phi_gap_bound = 4.0 * grid.beta * grid.beta * m * weight;
    return out;
}

BracketCount bracket_count_check(const MarkovModel& truth, std::uint32_t r, std::uint64_t n, double sigma,
                                 const BoundParams& params, std::uint64_t samples, std::uint64_t seed) {
    params.validate();
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    const std::uint32_t m = truth.alphabet_size();
    const double delta = params.c * std::sqrt(static_cast<double>(2 * n - r) * sigma);
    const double beta = bracket_beta(delta, n, r, m, params.C4);
    const MixtureKernel truth_k = truth_kernel(truth, r);

    BracketCount out;
    out.entropy = entropy_bound(n, r, sigma, delta, m, params.C5);
    std::set<std::vector<std::int64_t>> seen;
    Xoshiro256 rng(seed);
    for (std::uint64_t draw = 0; draw < 200 * samples && out.samples < samples; ++draw) {
        const MarkovModel cand = random_model(m, r, rng);
        const MixtureKernel mix = mixture_kernel(cand, truth, r);
        if (hellinger_stationary_distance(truth, mix, truth_k) > sigma) continue;
        ++out.samples;
        const BracketGrid g = bracket_grid(truth, cand.kernel(), r, beta);
        std::vector<std::int64_t> key = g.cell_lo;
        key.insert(key.end(), g.cell_hi.begin(), g.cell_hi.end());
        seen.insert(std::move(key));
    }
    out.distinct = seen.size();
    out.log_distinct = out.distinct ? std::log(static_cast<double>(out.distinct)) : 0.0;
    return out;
}

double entropy_bound(std::uint64_t n, std::uint32_t r, double sigma, double delta, std::uint32_t alphabet_size,
                     double C5) {
    if (!(sigma > 0.0) || !(C5 > 0.0)) throw InvalidArgument("sigma and C5 must be positive");
    if (2 * n <= r) throw InvalidArgument("entropy_bound needs 2n > r");
    const double top = C5 * std::sqrt(static_cast<double>(2 * n - r) * sigma);
    if (!(delta > 0.0) || delta > top * (1.0 + 1e-12)) {
        throw InvalidArgument("delta must lie in (0, C5 sqrt((2n - r) sigma)]");
    }
    const double cells = static_cast<double>(checked_pow(alphabet_size, r + 1));
    return cells * std::max(0.0, std::log(top / delta));
}

double bernstein_tail_bound(double alpha, double K, double R) {
    if (!(alpha > 0.0 && K > 0.0 && R > 0.0)) throw InvalidArgument("bernstein_tail_bound needs positive arguments");
    return std::exp(-alpha * alpha / (2.0 * (K * alpha + R)));
}

double maximal_bound(double alpha, double C_universal, double c1, double R) {
    if (!(alpha > 0.0 && C_universal > 0.0 && c1 > 0.0 && R > 0.0)) {
        throw InvalidArgument("maximal_bound needs positive arguments");
    }
    return 2.0 * std::exp(-alpha * alpha / (C_universal * C_universal * (c1 + 1.0) * R));
}

double binomial_margin(double p, std::uint64_t replications) {
    if (replications == 0) throw InvalidArgument("replications must be positive");
    return 3.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(replications));
}

bool BernsteinMcReport::all_pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const McRow& r) { return r.pass; });
}

BernsteinMcReport bernstein_mc_check(const MarkovModel& truth, const MarkovModel& candidate, std::uint32_t r,
                                     std::uint64_t n, const std::vector<double>& alpha_grid, double R,
                                     std::uint64_t replications, std::uint64_t seed, unsigned jobs, double K) {
    if (replications == 0) throw InvalidArgument("replications must be positive");
    if (n <= r) throw InvalidArgument("path length must exceed the order");
    const MixtureKernel mix = mixture_kernel(candidate, truth, r);
    const MartingaleTerms terms(truth, mix);
    const std::uint32_t m = truth.alphabet_size();
    const std::uint64_t size = terms.num_contexts();

    std::vector<double> max_m(replications);
    std::vector<double> norm(replications);
    parallel_for(replications, jobs, [&](std::size_t k) {
        Xoshiro256 rng(derive_seed(seed, k));
        std::vector<Symbol> path;
        sample_into(truth, n, rng, path);
        std::uint64_t ctx = 0;
        double mart = 0.0;
        double best = 0.0;
        double bern = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            if (i >= r) {
                mart += terms.log_ratio(ctx, path[i]) + terms.compensator(ctx);
                bern += terms.bernstein(ctx);
                best = std::max(best, mart);
            }
            ctx = (ctx * m + path[i]) % size;
        }
        max_m[k] = best;
        norm[k] = 8.0 * bern;
    });

    BernsteinMcReport rep;
    rep.R = R;
    rep.K = K;
    rep.replications = replications;
    for (double alpha : alpha_grid) {
        std::uint64_t hits = 0;
        for (std::uint64_t k = 0; k < replications; ++k) {
            if (max_m[k] >= alpha && norm[k] <= R) ++hits;
        }
        McRow row;
        row.alpha = alpha;
        row.empirical = static_cast<double>(hits) / static_cast<double>(replications);
        row.bound = bernstein_tail_bound(alpha, K, R);
        row.margin = binomial_margin(row.bound, replications);
        row.pass = row.empirical <= row.bound + row.margin;
        rep.rows.push_back(row);
    }
    return rep;
}

double expected_bernstein_norm(const MarkovModel& truth, const MixtureKernel& mix, std::uint64_t n) {
    if (n <= mix.order) throw InvalidArgument("path length must exceed the order");
    const MartingaleTerms terms(truth, mix);
    const std::vector<double> pi = block_probabilities(truth, mix.order);
    double per_step = 0.0;
    for (std::size_t c = 0; c < pi.size(); ++c) per_step += pi[c] * terms.bernstein(c);
    return 8.0 * per_step * static_cast<double>(n - mix.order);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line needs at least two points");
    const double k = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit_line needs distinct x values");
    LinearFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

DeviationTailReport deviation_tail_mc(const MarkovModel& truth, std::uint32_t r, std::uint64_t n,
                                      const std::vector<double>& eps_grid, std::uint64_t replications, double eta,
                                      std::uint32_t rho, std::uint64_t seed, unsigned jobs) {
    check_eta(eta);
    if (replications == 0) throw InvalidArgument("replications must be positive");
    if (r <= true_order(truth)) throw InvalidArgument("deviation_tail_mc needs r above the true order");
    if (rho > n / 2) throw InvalidArgument("deviation_tail_mc needs rho <= n/2");
    if (r >= n) throw InvalidArgument("order must be below n");
    const BlockLaws blocks(truth, rho);
    const std::uint32_t m = truth.alphabet_size();

    std::vector<char> in_f(replications, 0);
    std::vector<double> max_delta(replications, 0.0);
    parallel_for(replications, jobs, [&](std::size_t k) {
        Xoshiro256 rng(derive_seed(seed, k));
        std::vector<Symbol> path;
        sample_into(truth, 2 * n, rng, path);
        if (!event_F_with(blocks, m, path, eta)) return;
        in_f[k] = 1;
        // Delta >= 0 for r >= true order; the clamp only removes rounding.
        max_delta[k] = std::max(0.0, delta_running_max(truth, path, r, n, 2 * n));
    });

    DeviationTailReport rep;
    rep.replications = replications;
    std::uint64_t f_count = 0;
    for (char f : in_f) f_count += f;
    rep.f_frequency = static_cast<double>(f_count) / static_cast<double>(replications);

    std::vector<double> xs;
    std::vector<double> ys;
    const double floor = 10.0 / static_cast<double>(replications);
    for (double eps : eps_grid) {
        std::uint64_t hits = 0;
        for (std::uint64_t k = 0; k < replications; ++k) {
            if (in_f[k] && max_delta[k] >= eps) ++hits;
        }
        const double freq = static_cast<double>(hits) / static_cast<double>(replications);
        rep.rows.push_back({eps, freq});
        if (freq > floor) {
            xs.push_back(eps);
            ys.push_back(std::log(freq));
        }
    }
    if (xs.size() >= 2) {
        rep.fit = fit_line(xs, ys);
    } else {
        rep.fit.points = xs.size();
    }
    return rep;
}

LilSeries lil_trajectory(const MarkovModel& truth, std::span<const Symbol> path,
                         const std::vector<std::uint64_t>& checkpoints, std::uint32_t r_star, const CutoffSpec& cut) {
    if (checkpoints.empty()) throw InvalidArgument("checkpoints are empty");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        if (checkpoints[k] < 16) throw InvalidArgument("checkpoints must be at least 16");
        if (k > 0 && checkpoints[k] <= checkpoints[k - 1]) throw InvalidArgument("checkpoints must increase");
    }
    if (path.size() < checkpoints.back()) throw InvalidArgument("path shorter than the last checkpoint");
    const std::uint32_t m = truth.alphabet_size();
    std::uint32_t kappa_max = 1;
    for (std::uint64_t n : checkpoints) kappa_max = std::max(kappa_max, cutoff_value(cut, static_cast<double>(n), m));
    const std::uint32_t depth = std::max(kappa_max - 1, r_star);
    if (depth >= checkpoints.front()) throw InvalidArgument("cutoff exceeds the first checkpoint");

    LilSeries out;
    out.checkpoints = checkpoints;
    ContextCounts counts(m, depth);
    std::uint64_t done = 0;
    std::vector<double> xs;
    for (std::uint64_t n : checkpoints) {
        counts.append(path.subspan(done, n - done));
        done = n;
        const std::uint32_t kappa = cutoff_value(cut, static_cast<double>(n), m);
        // The statistic is a maximum of nonnegative likelihood ratios; the clamp only removes rounding.
        const double v = r_star < kappa ? std::max(0.0, lil_statistic(counts, r_star, kappa).value) : 0.0;
        const double normalized = v / std::log(std::log(static_cast<double>(n)));
        out.normalized.push_back(normalized);
        out.max = std::max(out.max, normalized);
        xs.push_back(std::log2(static_cast<double>(n)));
    }
    if (xs.size() >= 2) out.slope = fit_line(xs, out.normalized).slope;
    return out;
}

LilSummary lil_trajectory_mc(const MarkovModel& truth, const std::vector<std::uint64_t>& checkpoints,
                             const CutoffSpec& cut, std::uint32_t seeds, std::uint64_t seed, unsigned jobs) {
    if (seeds == 0) throw InvalidArgument("at least one seed is required");
    if (checkpoints.empty()) throw InvalidArgument("checkpoints are empty");
    const std::uint32_t r_star = true_order(truth);
    LilSummary out;
    out.per_seed.resize(seeds);
    parallel_for(seeds, jobs, [&](std::size_t k) {
        const PathSample path = sample_path(truth, checkpoints.back(), derive_seed(seed, k));
        out.per_seed[k] = lil_trajectory(truth, path.symbols, checkpoints, r_star, cut);
    });
    out.mean.assign(checkpoints.size(), 0.0);
    for (const auto& s : out.per_seed) {
        for (std::size_t j = 0; j < checkpoints.size(); ++j) out.mean[j] += s.normalized[j] / seeds;
        out.max = std::max(out.max, s.max);
    }
    if (checkpoints.size() >= 2) {
        std::vector<double> xs;
        for (std::uint64_t n : checkpoints) xs.push_back(std::log2(static_cast<double>(n)));
        out.slope = fit_line(xs, out.mean).slope;
    }
    return out;
}

double event_F_frequency(const MarkovModel& truth, std::uint64_t n, double eta, std::uint32_t rho,
                         std::uint64_t replications, std::uint64_t seed, unsigned jobs) {
    check_eta(eta);
    if (replications == 0) throw InvalidArgument("replications must be positive");
    if (rho > n / 2) throw InvalidArgument("event_F needs rho <= n/2");
    const BlockLaws blocks(truth, rho);
    std::vector<char> hit(replications, 0);
    parallel_for(replications, jobs, [&](std::size_t k) {
        Xoshiro256 rng(derive_seed(seed, k));
        std::vector<Symbol> path;
        sample_into(truth, 2 * n, rng, path);
        hit[k] = event_F_with(blocks, truth.alphabet_size(), path, eta) ? 1 : 0;
    });
    std::uint64_t total = 0;
    for (char h : hit) total += h;
    return static_cast<double>(total) / static_cast<double>(replications);
}

BernsteinNormInstance bernstein_norm_instance(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path) {
    const std::uint32_t r = mix.order;
    if (path.size() <= r) throw InvalidArgument("path length must exceed the order");
    const ContextCounts counts = build_counts(path, truth.alphabet_size(), r);
    BernsteinNormInstance out;
    out.R = bernstein_norm(truth, mix, path, path.size());
    out.H = hellinger_path_distance(counts, mix, truth_kernel(truth, r));
    out.pass = le_with_tol(out.R, 8.0 * out.H);
    return out;
}

NormControlInstance norm_control_instance(const MarkovModel& truth, const MixtureKernel& a, const MixtureKernel& b,
                                 std::span<const Symbol> path, double eta, std::uint32_t rho) {
    check_same_shape(a, b);
    check_eta(eta);
    check_event_F_args(path, rho);
    const std::uint32_t r = a.order;
    const std::uint64_t n = path.size() / 2;
    if (r >= n) throw InvalidArgument("order must be below n");
    const BoundParams params = BoundParams::from_eta(eta);

    NormControlInstance out;
    out.event_f = event_F(truth, path, eta, rho);
    ContextCounts counts(truth.alphabet_size(), r);
    counts.append(path.first(n));
    out.H_n = hellinger_path_distance(counts, a, b);
    counts.append(path.subspan(n));
    out.H_2n = hellinger_path_distance(counts, a, b);
    out.H = hellinger_stationary_distance(truth, a, b);
    const double span = static_cast<double>(n - r);
    out.doubling_ok = le_with_tol(out.H_2n, params.C3 * out.H_n);
    out.lower_ok = le_with_tol(span * out.H / params.C4, out.H_n);
    out.upper_ok = le_with_tol(out.H_n, span * params.C4 * out.H);
    return out;
}

InstanceBatch bernstein_norm_batch(std::uint32_t instances, std::uint64_t max_n, std::uint64_t seed, bool inject_fault) {
    if (max_n < 5) throw InvalidArgument("bernstein_norm_batch needs max_n >= 5");
    InstanceBatch out;
    Xoshiro256 rng(seed);
    for (std::uint32_t k = 0; k < instances; ++k) {
        const std::uint32_t m = 2 + static_cast<std::uint32_t>(rng() % 2);
        const std::uint32_t r = static_cast<std::uint32_t>(rng() % 4);
        const std::uint32_t rs = static_cast<std::uint32_t>(rng() % (r + 1));
        const std::uint64_t n = r + 2 + rng() % (max_n - r - 1);
        const MarkovModel truth = random_model(m, rs, rng);
        const MarkovModel cand = random_model(m, r, rng);
        MixtureKernel mix = mixture_kernel(cand, truth, r);
        if (inject_fault) {
            for (double& p : mix.table) p *= 0.25;
        }
        const PathSample path = sample_path(truth, n, rng());
        const BernsteinNormInstance inst = bernstein_norm_instance(truth, mix, path.symbols);
        ++out.instances;
        ++out.attempts;
        if (!inst.pass) ++out.violations;
        if (inst.H > 0.0) out.worst_ratio = std::max(out.worst_ratio, inst.R / (8.0 * inst.H));
    }
    return out;
}

InstanceBatch norm_control_batch(std::uint32_t instances, double eta, std::uint32_t rho, std::uint64_t seed) {
    check_eta(eta);
    if (rho < 1 || rho > 256) throw InvalidArgument("norm_control_batch needs 1 <= rho <= 256");
    const BoundParams params = BoundParams::from_eta(eta);
    InstanceBatch out;
    Xoshiro256 rng(seed);
    const std::uint64_t max_attempts = 50ull * instances;
    while (out.instances < instances && out.attempts < max_attempts) {
        ++out.attempts;
        const std::uint32_t m = 2 + static_cast<std::uint32_t>(rng() % 2);
        const std::uint32_t rs = static_cast<std::uint32_t>(rng() % std::min<std::uint32_t>(2, rho));
        const std::uint32_t r = rs + static_cast<std::uint32_t>(rng() % (rho - rs));
        const std::uint64_t n = std::uint64_t{512} << (rng() % 4);
        const MarkovModel truth = random_model(m, rs, rng, 0.3 / m);
        const MixtureKernel a = mixture_kernel(random_model(m, r, rng), truth, r);
        const MixtureKernel b = mixture_kernel(random_model(m, r, rng), truth, r);
        const PathSample path = sample_path(truth, 2 * n, rng());
        const NormControlInstance inst = norm_control_instance(truth, a, b, path.symbols, eta, rho);
        if (!inst.event_f) continue;
        ++out.instances;
        if (!inst.pass()) ++out.violations;
        const double span = static_cast<double>(n - r);
        if (inst.H_n > 0.0) {
            out.worst_ratio = std::max({out.worst_ratio, inst.H_2n / (params.C3 * inst.H_n),
                                        span * inst.H / (params.C4 * inst.H_n)});
        }
        if (inst.H > 0.0) out.worst_ratio = std::max(out.worst_ratio, inst.H_n / (span * params.C4 * inst.H));
    }
    return out;
}

BracketBatch bracket_batch(const MarkovModel& truth, std::uint32_t r, std::uint32_t kernels, std::uint32_t paths,
                           std::uint64_t n, double sigma, const BoundParams& params, std::uint64_t seed) {
    params.validate();
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    const std::uint32_t m = truth.alphabet_size();
    const double delta = params.c * std::sqrt(static_cast<double>(2 * n - r) * sigma);
    BracketBatch out;
    out.beta = bracket_beta(delta, n, r, m, params.C4);
    const std::vector<double> pi = block_probabilities(truth, r);
    Xoshiro256 rng(seed);
    for (std::uint32_t k = 0; k < kernels; ++k) {
        const MarkovModel cand = random_model(m, r, rng);
        const auto p = cand.kernel();
        const BracketGrid g = bracket_grid(truth, p, r, out.beta);
        ++out.kernels;
        for (std::uint64_t c = 0; c < pi.size(); ++c) {
            if (!g.supported[c]) continue;
            const double width = out.beta / std::sqrt(pi[c]);
            for (Symbol b = 0; b < m; ++b) {
                const std::uint64_t i = c * m + b;
                if (!(g.lower[i] <= p[i] && p[i] <= g.upper[i])) ++out.order_violations;
                if (!le_with_tol(std::sqrt(g.upper[i]) - std::sqrt(g.lower[i]), width)) ++out.gap_violations;
            }
        }
        for (std::uint32_t j = 0; j < paths; ++j) {
            const PathSample path = sample_path(truth, 2 * n, rng());
            const PathBracketCheck chk = check_path_brackets(truth, g, p, path.symbols);
            ++out.paths;
            out.path_violations += chk.violations;
            if (!le_with_tol(chk.phi_gap, chk.phi_gap_bound)) ++out.phi_violations;
        }
    }
    return out;
}

MarkovModel perturbed_candidate(const MarkovModel& truth, std::uint32_t r, double weight) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("weight must lie in [0,1]");
    const std::uint32_t m = truth.alphabet_size();
    std::vector<double> kernel = kernel_at_order(truth, r);
    for (double& p : kernel) p = (1.0 - weight) * p + weight / m;
    return MarkovModel::create(m, r, std::move(kernel));
}

MarkovModel random_model(std::uint32_t alphabet_size, std::uint32_t order, Xoshiro256& rng, double min_prob) {
    if (alphabet_size < 2) throw InvalidArgument("alphabet size must be at least 2");
    if (!(min_prob >= 0.0) || min_prob * alphabet_size > 1.0) throw InvalidArgument("min_prob out of range");
    const std::uint64_t contexts = checked_pow(alphabet_size, order);
    std::vector<double> kernel(contexts * alphabet_size);
    for (std::uint64_t c = 0; c < contexts; ++c) {
        double total = 0.0;
        for (std::uint32_t b = 0; b < alphabet_size; ++b) {
            const double e = -std::log1p(-rng.uniform());
            kernel[c * alphabet_size + b] = e;
            total += e;
        }
        for (std::uint32_t b = 0; b < alphabet_size; ++b) {
            double& p = kernel[c * alphabet_size + b];
            p = min_prob + (1.0 - alphabet_size * min_prob) * (p / total);
        }
    }
    return MarkovModel::create(alphabet_size, order, std::move(kernel));
}

}  // namespace morder
