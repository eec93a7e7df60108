// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Every criterion also has a wall-clock limit; exceeding it is a failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "morder/commands.hpp"
#include "morder/counts.hpp"
#include "morder/diagnostics.hpp"
#include "morder/estimator.hpp"
#include "morder/likelihood.hpp"
#include "oracles.hpp"

using namespace morder;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

MarkovModel test_chain() { return MarkovModel::create(2, 1, {0.7, 0.3, 0.2, 0.8}, std::nullopt, "two_state"); }

std::vector<Symbol> binary_path(std::uint32_t bits, std::uint32_t length) {
    std::vector<Symbol> p(length);
    for (std::uint32_t i = 0; i < length; ++i) p[i] = (bits >> i) & 1u;
    return p;
}

Outcome likelihood_oracle() {
    double worst = 0.0;
    for (std::uint32_t bits = 0; bits < 256; ++bits) {
        const auto path = binary_path(bits, 8);
        const auto c = build_counts(path, 2, 2);
        for (std::uint32_t r = 0; r <= 2; ++r) {
            worst = std::max(worst, std::abs(max_loglik(c, r) - oracle::grid_max_loglik_binary(path, r, 1e-3)));
        }
    }
    return {worst <= 1e-4, fmt("max |error| %.3g over 768 cases (tol 1e-4)", worst)};
}

Outcome count_identities() {
    std::uint64_t states = 0;
    bool ok = true;
    auto identities = [&](const ContextCounts& c) {
        ++states;
        for (std::uint32_t r = 0; r <= c.depth_cap(); ++r) {
            std::uint64_t total = 0;
            for (std::uint64_t a = 0; a < checked_pow(2, r); ++a) {
                const std::uint64_t n_a = c.context_count(r, a);
                if (c.transition_count(r, a, 0) + c.transition_count(r, a, 1) != n_a) ok = false;
                total += n_a;
            }
            if (total != (c.length() > r ? c.length() - r : 0)) ok = false;
        }
    };
    for (std::uint32_t len = 1; len <= 10; ++len) {
        for (std::uint32_t bits = 0; bits < (1u << len); ++bits) {
            const auto path = binary_path(bits, len);
            for (std::uint32_t depth = 0; depth <= 3 && depth < len; ++depth) {
                const auto full = build_counts(path, 2, depth);
                identities(full);
                for (std::uint32_t split = depth + 1; split < len; ++split) {
                    const std::vector<Symbol> head(path.begin(), path.begin() + split);
                    const std::vector<Symbol> rest(path.begin() + split, path.end());
                    auto c = build_counts(head, 2, depth);
                    identities(c);
                    c = extend_counts(std::move(c), rest);
                    identities(c);
                    if (!(c == full)) ok = false;
                }
            }
        }
    }
    return {ok, fmt("%.0f count states checked", static_cast<double>(states))};
}

Outcome norm_ratio() {
    const auto b = bernstein_norm_batch(1000, 512, 44);
    return {b.instances == 1000 && b.violations == 0,
            fmt("%.0f instances, %.0f violations, worst R/(8H) %.6f", static_cast<double>(b.instances),
                static_cast<double>(b.violations), b.worst_ratio)};
}

Outcome sandwich() {
    const auto b = norm_control_batch(1000, 0.5, 3, 42);
    return {b.instances == 1000 && b.violations == 0,
            fmt("%.0f instances (of %.0f draws) with F, %.0f violations", static_cast<double>(b.instances),
                static_cast<double>(b.attempts), static_cast<double>(b.violations)) +
                fmt(", worst ratio %.6f", b.worst_ratio)};
}

Outcome brackets() {
    const auto truth = test_chain();
    const BoundParams params = BoundParams::from_eta(0.5);
    const auto b = bracket_batch(truth, 1, 100, 100, 256, 0.05, params, 5);
    const auto c = bracket_count_check(truth, 1, 256, 0.05, params, 10000, 55);
    const bool count_ok = c.samples == 10000 && c.log_distinct <= c.entropy;
    return {b.pass() && count_ok,
            fmt("bracket violations %.0f; log #brackets %.4f <= entropy bound %.4f",
                static_cast<double>(b.order_violations + b.gap_violations + b.path_violations + b.phi_violations),
                c.log_distinct, c.entropy)};
}

Outcome bernstein() {
    const auto truth = test_chain();
    const auto cand = perturbed_candidate(truth, 1);
    const auto mix = mixture_kernel(cand, truth, 1);
    const double R = 1.05 * expected_bernstein_norm(truth, mix, 512);
    std::vector<double> alphas;
    for (int k = 1; k <= 10; ++k) alphas.push_back(0.5 * k * std::sqrt(R));
    const auto rep = bernstein_mc_check(truth, cand, 1, 512, alphas, R, 100000, 6);
    double slack = INFINITY;
    for (const auto& row : rep.rows) slack = std::min(slack, row.bound + row.margin - row.empirical);
    return {rep.all_pass() && rep.rows.size() == 10, fmt("R = %.4f, min(bound + margin - empirical) = %.5f", R, slack)};
}

Outcome deviation() {
    std::vector<double> eps;
    for (int k = 0; k <= 20; ++k) eps.push_back(k);
    const auto rep = deviation_tail_mc(test_chain(), 2, 256, eps, 100000, 0.5, 3, 7);
    return {rep.fit.points >= 2 && rep.fit.slope < 0 && rep.fit.r_squared >= 0.9,
            fmt("slope %.4f, R^2 %.4f over %.0f points", rep.fit.slope, rep.fit.r_squared,
                static_cast<double>(rep.fit.points))};
}

Outcome lil() {
    std::vector<std::uint64_t> cps;
    for (int k = 10; k <= 22; ++k) cps.push_back(std::uint64_t{1} << k);
    const auto sum = lil_trajectory_mc(test_chain(), cps, CutoffSpec::sub_log(), 20, 8);
    return {sum.slope <= 0.01 && std::isfinite(sum.max), fmt("trend slope %.5f, max %.4f", sum.slope, sum.max)};
}

Outcome consistency() {
    const auto res = consistency_experiment(test_chain(), PenaltySpec::loglog(5), CutoffSpec::sub_log(),
                                            {1u << 12, 1u << 14, 1u << 16, 1u << 18}, 100, 9);
    bool monotone = true;
    std::string rates;
    for (std::size_t j = 0; j < res.recovery.size(); ++j) {
        if (j > 0 && res.recovery[j].recovery_rate() < res.recovery[j - 1].recovery_rate()) monotone = false;
        rates += (j ? " " : "") + format_number(res.recovery[j].recovery_rate());
    }
    return {monotone && res.recovery.back().recovery_rate() >= 0.95, "recovery " + rates};
}

Outcome gap() {
    const auto truth = test_chain();
    const double oracle_gap = underestimation_gap(truth, 0);
    const std::uint64_t n = std::uint64_t{1} << 20;
    const auto c = build_counts(sample_path(truth, n, 10).symbols, 2, 1);
    const double empirical = -(max_loglik(c, 0) - max_loglik(c, 1)) / static_cast<double>(n);
    return {std::abs(empirical - oracle_gap) <= 0.005, fmt("empirical %.6f vs oracle %.6f", empirical, oracle_gap)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "morder_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "chain.model") << format_model(test_chain());
    const std::string base = "model = chain.model\nn_grid = 2^10, 2^12\nreplications = 4\nseed = 2024\n";
    std::ofstream(root / "simulate.cfg") << base;
    std::ofstream(root / "estimate.cfg") << base << "penalty = loglog:5\n";
    std::ofstream(root / "sweep.cfg") << base << "penalties = loglog:5, bic, csiszar:1\n";
    std::ofstream(root / "verify.cfg") << base
                                       << "checks = all\ninstance_checks = 50\nmc_replications = 2000\n"
                                          "deviation_replications = 2000\nlil_max_log2 = 13\nlil_seeds = 3\n"
                                          "typicality_replications = 10\ntypicality_large_n = 2^13\n"
                                          "bracket_kernels = 5\nbracket_paths = 5\nbracket_samples = 200\n";
    bool ok = true;
    std::size_t files = 0;
    for (const char* cmd : {"simulate", "estimate", "sweep", "verify"}) {
        std::map<std::string, std::string> first;
        for (unsigned run = 0; run < 2; ++run) {
            const fs::path out = root / (std::string(cmd) + "_" + std::to_string(run));
            RunOverrides ov;
            ov.out = out.string();
            ov.jobs = run + 1;  // completion order must not matter either
            std::ostringstream log, err;
            if (run_command(cmd, (root / (std::string(cmd) + ".cfg")).string(), ov, log, err) != kExitOk) ok = false;
            auto snap = snapshot(out);
            if (run == 0) {
                first = std::move(snap);
                files += first.size();
            } else if (snap != first || first.empty()) {
                ok = false;
            }
        }
    }
    fs::remove_all(root);
    return {ok, fmt("%.0f output files compared across two runs of each command", static_cast<double>(files))};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "likelihood oracle equivalence", 10, likelihood_oracle},
        {2, "count identities", 10, count_identities},
        {3, "Bernstein norm bounded by 8 H_n", 60, norm_ratio},
        {4, "Hellinger sandwich under typicality", 120, sandwich},
        {5, "bracketing property and entropy count", 60, brackets},
        {6, "Bernstein tail Monte Carlo", 300, bernstein},
        {7, "deviation tail shape", 600, deviation},
        {8, "LIL boundedness", 600, lil},
        {9, "strong consistency at desk scale", 900, consistency},
        {10, "underestimation gap", 120, gap},
        {11, "CLI determinism", 600, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < c.limit_s;
        failures += !pass;
        std::printf("criterion %2d %-40s %s  (%s; %.2fs of %.0fs)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, c.limit_s);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
