#pragma once

// Typicality events, Hellinger-type distances, Bernstein norms, bracket grids,
// tail-bound formulas and the Monte Carlo verifiers built on them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "morder/counts.hpp"
#include "morder/likelihood.hpp"
#include "morder/model.hpp"
#include "morder/numerics.hpp"
#include "morder/penalty.hpp"
#include "morder/rng.hpp"

namespace morder {

// Constants of the bounds. C3, C4, c and C5 are computed from eta by from_eta;
// C0, C1, C1_prime, C2, C6, c0, c1 have no constructive value and are only carried.
// Members below eta are initialized from it; from_eta recomputes them.
struct BoundParams {
    double eta = 0.5;
    double K = 2.0;
    double C_universal = 100.0;
    double c0 = 1.0;
    double c1 = 1.0;
    double C0 = 1e6;
    double C1 = 1.0;
    double C1_prime = 1.0;
    double C2 = 1.0;
    double C6 = 1.0;
    double C3 = 4.0 * (1.0 + eta) / (1.0 - eta);
    double C4 = 1.0 / (1.0 - eta);
    double c = std::sqrt(8.0 * C3 / C4);
    double C5 = (8.0 * std::sqrt(C4) + c) * std::sqrt(2.0 * std::numbers::pi * std::numbers::e);

    static BoundParams from_eta(double eta);
    // Throws InvalidArgument unless eta is in (0,1) and every constant is positive.
    void validate() const;
};

struct TypicalityReport {
    double eta = 0.0;
    std::uint32_t rho_n = 0;
    std::vector<double> deviation;  // dev_r for r = 0 .. rho_n - 1
    bool holds = false;             // every dev_r < eta
};

// dev_r = max over a with P*(a) > 0 of |N(a) / ((n-r) P*(a)) - 1|.
// Requires eta in (0,1), rho_n <= depth cap + 1 and rho_n <= n.
TypicalityReport typicality_check(const MarkovModel& truth, const ContextCounts& counts, double eta,
                                  std::uint32_t rho_n);

// Typicality at the half-length prefix and at the full path. Odd length is an error;
// requires rho <= length / 4.
bool event_F(const MarkovModel& truth, std::span<const Symbol> path, double eta, std::uint32_t rho);

// sum_a N(a) sum_b (sqrt(A(b|a)) - sqrt(B(b|a)))^2 over the counts at the kernels' order.
double hellinger_path_distance(const ContextCounts& counts, const MixtureKernel& a, const MixtureKernel& b);

// sum_a P*(a) sum_b (sqrt(A(b|a)) - sqrt(B(b|a)))^2.
double hellinger_stationary_distance(const MarkovModel& truth, const MixtureKernel& a, const MixtureKernel& b);

// The truth's own kernel at order r, as a mixture kernel (mixture of truth with itself).
MixtureKernel truth_kernel(const MarkovModel& truth, std::uint32_t r);

// 8 sum_{i=r+1}^{up_to} sum_a P*(a|ctx_i) phi(|log(mix(a|ctx_i) / P*(a|ctx_i))| / 2), r = mix.order.
double bernstein_norm(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path,
                      std::uint64_t up_to);

struct BracketGrid {
    std::uint32_t alphabet_size = 0;
    std::uint32_t order = 0;
    double beta = 0.0;
    std::vector<double> lower;            // lambda, indexed context * m + b
    std::vector<double> upper;            // gamma
    std::vector<std::int64_t> cell_lo;    // floor of sqrt(P*(a)) sqrt(P(b|a)) / beta
    std::vector<std::int64_t> cell_hi;    // ceiling of the same
    std::vector<bool> supported;          // per context: P*(a) > 0
};

// Floor/ceiling bracket of the candidate kernel on the grid sqrt(P*(a)) sqrt(p) in beta Z+.
// Unsupported contexts get the unconstrained bracket [0, 1].
BracketGrid bracket_grid(const MarkovModel& truth, std::span<const double> candidate_kernel, std::uint32_t r,
                         double beta);

// beta = delta / sqrt(4 C4 (2n - r) m^(r+1)).
double bracket_beta(double delta, std::uint64_t n, std::uint32_t r, std::uint32_t alphabet_size, double C4);

struct PathBracketCheck {
    std::uint64_t steps = 0;
    std::uint64_t violations = 0;  // steps with Lambda_i <= xi_i <= Upsilon_i failing
    double phi_gap = 0.0;          // 8 sum_i E*[phi((Upsilon_i - Lambda_i) / 2) | past]
    double phi_gap_bound = 0.0;    // 4 beta^2 m sum_a N(a) / P*(a)
};

// Path-level log-ratio brackets Lambda_i = log(((lambda + P*) / 2) / P*) and Upsilon_i
// (same with gamma) against xi_i = log(((P + P*) / 2) / P*), for i = r+1 .. path length.
PathBracketCheck check_path_brackets(const MarkovModel& truth, const BracketGrid& grid,
                                     std::span<const double> candidate_kernel, std::span<const Symbol> path);

struct BracketCount {
    std::uint64_t samples = 0;     // accepted kernels with H(P, P*) <= sigma
    std::uint64_t distinct = 0;    // distinct (lambda, gamma) brackets among them
    double log_distinct = 0.0;
    double entropy = 0.0;          // entropy_bound at delta = c sqrt((2n - r) sigma)
};

// Samples order-r kernels with uniform rows, keeps those in the ball H(P, P*) <= sigma
// and counts the distinct brackets at beta = bracket_beta(delta, n, r, m, C4).
// Stops after `samples` acceptances or 200 * samples draws.
BracketCount bracket_count_check(const MarkovModel& truth, std::uint32_t r, std::uint64_t n, double sigma,
                                 const BoundParams& params, std::uint64_t samples, std::uint64_t seed);

// m^(r+1) log(C5 sqrt((2n - r) sigma) / delta); requires 0 < delta <= C5 sqrt((2n - r) sigma).
double entropy_bound(std::uint64_t n, std::uint32_t r, double sigma, double delta, std::uint32_t alphabet_size,
                     double C5);

// exp(-alpha^2 / (2 (K alpha + R)))
double bernstein_tail_bound(double alpha, double K, double R);

// 2 exp(-alpha^2 / (C^2 (c1 + 1) R))
double maximal_bound(double alpha, double C_universal, double c1, double R);

// 3 sigma binomial half-width sqrt(p (1 - p) / replications).
double binomial_margin(double p, std::uint64_t replications);

struct McRow {
    double alpha = 0.0;
    double empirical = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool pass = false;
};

struct BernsteinMcReport {
    std::vector<McRow> rows;
    double R = 0.0;
    double K = 2.0;
    std::uint64_t replications = 0;
    bool all_pass() const;
};

// Frequency of {max_{j<=n} M_j >= alpha and R_n <= R} for the mixture of candidate and
// truth at order r, against bernstein_tail_bound(alpha, K, R).
BernsteinMcReport bernstein_mc_check(const MarkovModel& truth, const MarkovModel& candidate, std::uint32_t r,
                                     std::uint64_t n, const std::vector<double>& alpha_grid, double R,
                                     std::uint64_t replications, std::uint64_t seed, unsigned jobs = 1,
                                     double K = 2.0);

// (n - r) E_stationary[8 sum_a P*(a|ctx) phi(|log ratio| / 2)], the mean Bernstein norm.
double expected_bernstein_norm(const MarkovModel& truth, const MixtureKernel& mix, std::uint64_t n);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares; requires at least two points with distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct DeviationRow {
    double eps = 0.0;
    double frequency = 0.0;
};

struct DeviationTailReport {
    std::vector<DeviationRow> rows;
    double f_frequency = 0.0;  // empirical P[F_n]
    LinearFit fit;             // log frequency vs eps where frequency > 10 / replications
    std::uint64_t replications = 0;
};

// Frequency of {F_n and max_{i=n..2n} Delta_{i,r} >= eps}. Requires r > true order, rho <= n/2.
DeviationTailReport deviation_tail_mc(const MarkovModel& truth, std::uint32_t r, std::uint64_t n,
                                      const std::vector<double>& eps_grid, std::uint64_t replications, double eta,
                                      std::uint32_t rho, std::uint64_t seed, unsigned jobs = 1);

struct LilSeries {
    std::vector<std::uint64_t> checkpoints;
    std::vector<double> normalized;  // lil_statistic / log log n
    double max = 0.0;
    double slope = 0.0;              // least-squares slope against log2 n
};

// Requires increasing checkpoints >= 16 and path length >= last checkpoint.
LilSeries lil_trajectory(const MarkovModel& truth, std::span<const Symbol> path,
                         const std::vector<std::uint64_t>& checkpoints, std::uint32_t r_star, const CutoffSpec& cut);

struct LilSummary {
    std::vector<LilSeries> per_seed;
    std::vector<double> mean;  // across seeds, per checkpoint
    double max = 0.0;
    double slope = 0.0;        // slope of the mean series against log2 n
};

LilSummary lil_trajectory_mc(const MarkovModel& truth, const std::vector<std::uint64_t>& checkpoints,
                             const CutoffSpec& cut, std::uint32_t seeds, std::uint64_t seed, unsigned jobs = 1);

// Empirical frequency of event_F on paths of length 2n.
double event_F_frequency(const MarkovModel& truth, std::uint64_t n, double eta, std::uint32_t rho,
                         std::uint64_t replications, std::uint64_t seed, unsigned jobs = 1);

struct BernsteinNormInstance {
    double R = 0.0;
    double H = 0.0;
    bool pass = false;  // R <= 8 H within 1e-9 relative
};

// R_n against 8 H_n(P, P*) for the mixture at order mix.order over the whole path.
BernsteinNormInstance bernstein_norm_instance(const MarkovModel& truth, const MixtureKernel& mix, std::span<const Symbol> path);

struct NormControlInstance {
    bool event_f = false;
    double H_n = 0.0;
    double H_2n = 0.0;
    double H = 0.0;
    bool doubling_ok = false;  // H_2n <= C3 H_n
    bool lower_ok = false;     // (n - r) H / C4 <= H_n
    bool upper_ok = false;     // H_n <= (n - r) C4 H
    bool pass() const { return doubling_ok && lower_ok && upper_ok; }
};

// Path of length 2n; the sandwich is evaluated whether or not event_F holds.
NormControlInstance norm_control_instance(const MarkovModel& truth, const MixtureKernel& a, const MixtureKernel& b,
                                 std::span<const Symbol> path, double eta, std::uint32_t rho);

struct InstanceBatch {
    std::uint64_t instances = 0;   // instances evaluated (for norm_control: those where event_F held)
    std::uint64_t attempts = 0;
    std::uint64_t violations = 0;
    double worst_ratio = 0.0;      // max over instances of lhs / rhs of the checked inequalities
};

// Random (truth, candidate, path): m in {2,3}, truth order <= r <= 3, length in [r+2, max_n].
// With inject_fault the mixture rows are scaled by 1/4 and not renormalized.
InstanceBatch bernstein_norm_batch(std::uint32_t instances, std::uint64_t max_n, std::uint64_t seed,
                            bool inject_fault = false);

// Random positive truth of order <= 1, two candidates at order r < rho, paths of length 2n
// with n in {512, ..., 4096}; only instances where event_F holds are counted.
// Gives up after 50 * instances attempts.
InstanceBatch norm_control_batch(std::uint32_t instances, double eta, std::uint32_t rho, std::uint64_t seed);

struct BracketBatch {
    std::uint64_t kernels = 0;
    std::uint64_t paths = 0;
    std::uint64_t order_violations = 0;  // lambda <= P <= gamma failing
    std::uint64_t gap_violations = 0;    // sqrt(gamma) - sqrt(lambda) <= beta / sqrt(P*(a)) failing
    std::uint64_t path_violations = 0;   // Lambda_i <= xi_i <= Upsilon_i failing
    std::uint64_t phi_violations = 0;    // phi gap above its bound
    double beta = 0.0;
    bool pass() const { return order_violations + gap_violations + path_violations + phi_violations == 0; }
};

// Random order-r kernels bracketed at beta = bracket_beta(c sqrt((2n - r) sigma), n, r, m, C4),
// each checked on `paths` truth paths of length 2n.
BracketBatch bracket_batch(const MarkovModel& truth, std::uint32_t r, std::uint32_t kernels, std::uint32_t paths,
                           std::uint64_t n, double sigma, const BoundParams& params, std::uint64_t seed);

// Order-r kernel (1 - w) P* + w U, U uniform rows; the default Bernstein candidate.
MarkovModel perturbed_candidate(const MarkovModel& truth, std::uint32_t r, double weight = 0.5);

// Order-r model with rows drawn uniformly from the simplex, then mixed toward
// uniform so every entry is at least min_prob.
MarkovModel random_model(std::uint32_t alphabet_size, std::uint32_t order, Xoshiro256& rng,
                         double min_prob = 0.0);

}  // namespace morder
