#include "morder/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morder {

double LogValue::value() const {
    if (neg_inf_) throw InvalidArgument("log value is -infinity");
    return value_;
}

namespace {

void check_law(std::span<const double> p, const char* what) {
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw InvalidArgument(std::string(what) + ": probability outside [0,1]");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        throw InvalidArgument(std::string(what) + ": probabilities do not sum to 1");
    }
}

// Closed communicating classes of the block chain, via iterative Tarjan.
std::vector<std::vector<std::uint64_t>> closed_classes(const MarkovModel& model) {
    const std::uint64_t n = model.num_contexts();
    const std::uint32_t m = model.alphabet_size();
    constexpr std::uint64_t kUnvisited = UINT64_MAX;

    std::vector<std::uint64_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint64_t> stack;
    std::vector<std::vector<std::uint64_t>> components;
    std::uint64_t counter = 0;

    auto successor = [&](std::uint64_t c, Symbol b) { return (c * m + b) % n; };

    struct Frame {
        std::uint64_t node;
        Symbol next;
    };
    std::vector<Frame> call;

    for (std::uint64_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < m) {
                const Symbol b = f.next++;
                if (model.transition(f.node, b) <= 0.0) continue;
                const std::uint64_t w = successor(f.node, b);
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            const std::uint64_t v = f.node;
            call.pop_back();
            if (!call.empty()) {
                low[call.back().node] = std::min(low[call.back().node], low[v]);
            }
            if (low[v] == index[v]) {
                std::vector<std::uint64_t> members;
                std::uint64_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = components.size();
                    members.push_back(w);
                } while (w != v);
                components.push_back(std::move(members));
            }
        }
    }

    std::vector<std::vector<std::uint64_t>> closed;
    for (std::size_t k = 0; k < components.size(); ++k) {
        bool is_closed = true;
        for (std::uint64_t v : components[k]) {
            for (Symbol b = 0; b < m && is_closed; ++b) {
                if (model.transition(v, b) > 0.0 && comp[successor(v, b)] != k) is_closed = false;
            }
            if (!is_closed) break;
        }
        if (is_closed) {
            std::sort(components[k].begin(), components[k].end());
            closed.push_back(std::move(components[k]));
        }
    }
    return closed;
}

constexpr std::size_t kDenseSolveLimit = 4096;
constexpr double kPowerTolerance = 1e-12;
constexpr std::uint64_t kPowerMaxIterations = 1'000'000;

std::vector<double> solve_on_class(const MarkovModel& model, const std::vector<std::uint64_t>& cls) {
    const std::uint64_t n = model.num_contexts();
    const std::uint32_t m = model.alphabet_size();
    const std::size_t k = cls.size();
    std::vector<double> pi(n, 0.0);

    auto local = [&](std::uint64_t global) {
        return static_cast<std::size_t>(std::lower_bound(cls.begin(), cls.end(), global) - cls.begin());
    };

    if (k <= kDenseSolveLimit) {
        // pi (Q - I) = 0 with one balance equation replaced by sum(pi) = 1.
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const std::uint64_t c = cls[i];
            for (Symbol b = 0; b < m; ++b) {
                const double p = model.transition(c, b);
                if (p <= 0.0) continue;
                const std::size_t j = local((c * m + b) % n);
                a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += p;
            }
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= 1.0;
        }
        a.row(0).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        rhs(0) = 1.0;
        const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
        for (std::size_t i = 0; i < k; ++i) pi[cls[i]] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    } else {
        // Lazy chain (Q + I)/2 has the same stationary law and is aperiodic.
        std::vector<double> cur(k, 1.0 / static_cast<double>(k)), next(k);
        for (std::uint64_t it = 0; it < kPowerMaxIterations; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                const std::uint64_t c = cls[i];
                next[i] += 0.5 * cur[i];
                for (Symbol b = 0; b < m; ++b) {
                    const double p = model.transition(c, b);
                    if (p > 0.0) next[local((c * m + b) % n)] += 0.5 * cur[i] * p;
                }
            }
            double diff = 0.0;
            for (std::size_t i = 0; i < k; ++i) diff = std::max(diff, std::abs(next[i] - cur[i]));
            cur.swap(next);
            if (diff < kPowerTolerance) break;
        }
        for (std::size_t i = 0; i < k; ++i) pi[cls[i]] = cur[i];
    }

    const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& x : pi) x /= total;
    return pi;
}

std::uint64_t draw_index(std::span<const double> p, Xoshiro256& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::uint64_t last_positive = 0;
    for (std::uint64_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0) continue;
        last_positive = k;
        cum += p[k];
        if (u < cum) return k;
    }
    return last_positive;
}

Symbol draw(std::span<const double> p, Xoshiro256& rng) { return static_cast<Symbol>(draw_index(p, rng)); }

// Extend a law over A^from to A^to (to >= from >= true order) through the kernel.
std::vector<double> extend_law(const MarkovModel& model, std::vector<double> law, std::uint32_t from,
                               std::uint32_t to) {
    const std::uint32_t m = model.alphabet_size();
    for (std::uint32_t len = from; len < to; ++len) {
        const std::vector<double> rows = kernel_at_order(model, len);
        std::vector<double> next(law.size() * m, 0.0);
        for (std::uint64_t c = 0; c < law.size(); ++c) {
            if (law[c] == 0.0) continue;
            for (Symbol b = 0; b < m; ++b) next[c * m + b] = law[c] * rows[c * m + b];
        }
        law.swap(next);
    }
    return law;
}

// Marginal on the most recent `to` symbols of a law over A^from.
std::vector<double> marginalize_law(const std::vector<double>& law, std::uint32_t m, std::uint32_t to) {
    const std::uint64_t size = checked_pow(m, to);
    std::vector<double> out(size, 0.0);
    for (std::uint64_t c = 0; c < law.size(); ++c) out[c % size] += law[c];
    return out;
}

}  // namespace

MarkovModel MarkovModel::create(std::uint32_t alphabet_size, std::uint32_t order,
                                std::vector<double> kernel,
                                std::optional<std::vector<double>> initial, std::string id) {
    if (alphabet_size < 2) throw InvalidArgument("alphabet size must be at least 2");
    MarkovModel model;
    model.m_ = alphabet_size;
    model.order_ = order;
    model.contexts_ = checked_pow(alphabet_size, order);
    checked_pow(alphabet_size, order + 1);
    model.id_ = std::move(id);
    if (kernel.size() != model.contexts_ * alphabet_size) {
        throw InvalidArgument("kernel must have m^(order+1) entries");
    }
    model.kernel_ = std::move(kernel);
    for (std::uint64_t c = 0; c < model.contexts_; ++c) check_law(model.row(c), "kernel row");

    if (initial) {
        if (initial->size() != model.contexts_) {
            throw InvalidArgument("initial law must have m^order entries");
        }
        check_law(*initial, "initial law");
        model.initial_ = std::move(*initial);
    } else {
        model.initial_ = stationary_distribution(model);
    }
    return model;
}

std::vector<double> stationary_distribution(const MarkovModel& model) {
    if (model.order() == 0) return {1.0};
    const auto closed = closed_classes(model);
    if (closed.size() != 1) {
        throw ReducibleChain("chain has " + std::to_string(closed.size()) +
                             " closed classes; no unique stationary law");
    }
    return solve_on_class(model, closed.front());
}

bool has_unique_stationary_law(const MarkovModel& model) {
    return model.order() == 0 || closed_classes(model).size() == 1;
}

std::uint32_t true_order(const MarkovModel& model) {
    const std::uint32_t m = model.alphabet_size();
    for (std::uint32_t s = 0; s < model.order(); ++s) {
        const std::uint64_t size = checked_pow(m, s);
        bool collapses = true;
        for (std::uint64_t c = 0; c < model.num_contexts() && collapses; ++c) {
            const auto row = model.row(c);
            const auto rep = model.row(c % size);
            for (Symbol b = 0; b < m; ++b) {
                if (std::abs(row[b] - rep[b]) > kProbabilityTolerance) {
                    collapses = false;
                    break;
                }
            }
        }
        if (collapses) return s;
    }
    return model.order();
}

std::vector<double> kernel_at_order(const MarkovModel& model, std::uint32_t r) {
    const std::uint32_t m = model.alphabet_size();
    if (r < model.order() && r < true_order(model)) {
        throw InvalidArgument("order below the chain's true order");
    }
    const std::uint64_t size = checked_pow(m, r);
    const std::uint64_t wrap = checked_pow(m, std::min(r, model.order()));
    std::vector<double> out(size * m);
    for (std::uint64_t c = 0; c < size; ++c) {
        const auto row = model.row(c % wrap);
        std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(c * m));
    }
    return out;
}

MarkovModel lift(const MarkovModel& model, std::uint32_t r) {
    std::vector<double> kernel = kernel_at_order(model, r);
    std::vector<double> initial(model.initial().begin(), model.initial().end());
    if (r >= model.order()) {
        initial = extend_law(model, std::move(initial), model.order(), r);
    } else {
        initial = marginalize_law(initial, model.alphabet_size(), r);
    }
    return MarkovModel::create(model.alphabet_size(), r, std::move(kernel), std::move(initial), model.id());
}

std::vector<double> block_probabilities(const MarkovModel& model, std::uint32_t r) {
    const std::vector<double> pi = stationary_distribution(model);
    if (r >= model.order()) return extend_law(model, pi, model.order(), r);
    return marginalize_law(pi, model.alphabet_size(), r);
}

void sample_into(const MarkovModel& model, std::uint64_t n, Xoshiro256& rng, std::vector<Symbol>& out) {
    if (n == 0) throw InvalidArgument("path length must be at least 1");
    const std::uint32_t m = model.alphabet_size();
    const std::uint32_t r = model.order();
    out.resize(n);

    std::uint64_t ctx = draw_index(model.initial(), rng);
    const auto head = decode_context(ctx, m, r);
    const std::uint64_t prefix = std::min<std::uint64_t>(n, r);
    std::copy(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(prefix), out.begin());

    const std::uint64_t size = model.num_contexts();
    const auto kernel = model.kernel();
    for (std::uint64_t i = r; i < n; ++i) {
        const Symbol b = draw(kernel.subspan(ctx * m, m), rng);
        out[i] = b;
        ctx = (ctx * m + b) % size;
    }
}

PathSample sample_path(const MarkovModel& model, std::uint64_t n, std::uint64_t seed) {
    PathSample out;
    out.seed = seed;
    out.model_id = model.id();
    Xoshiro256 rng(seed);
    sample_into(model, n, rng, out.symbols);
    return out;
}

LogValue log_true_conditional_likelihood(const MarkovModel& model, std::span<const Symbol> path,
                                         std::uint32_t r) {
    const std::uint32_t rs = true_order(model);
    if (r < rs) throw InvalidArgument("conditioning order below the true order");
    if (r >= path.size()) throw InvalidArgument("conditioning order must be below the path length");
    const std::uint32_t m = model.alphabet_size();
    for (Symbol s : path) {
        if (s >= m) throw InvalidArgument("path symbol outside the alphabet");
    }
    const std::vector<double> kernel = kernel_at_order(model, rs);
    const std::uint64_t size = checked_pow(m, rs);

    std::uint64_t ctx = encode_context(path.subspan(r - rs, rs), m);
    double total = 0.0;
    for (std::size_t i = r; i < path.size(); ++i) {
        const double p = kernel[ctx * m + path[i]];
        if (p <= 0.0) return LogValue::neg_infinity();
        total += std::log(p);
        ctx = (ctx * m + path[i]) % size;
    }
    return LogValue::finite(total);
}

double min_positive_transition(const MarkovModel& model) {
    double out = 1.0;
    for (double p : model.kernel()) {
        if (p > 0.0) out = std::min(out, p);
    }
    return out;
}

}  // namespace morder
