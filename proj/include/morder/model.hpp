#pragma once

// Finite-alphabet, time-homogeneous Markov chains: representation,
// stationary law, order detection, sampling and true-law likelihoods.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morder/context.hpp"
#include "morder/rng.hpp"

namespace morder {

// Tolerance on kernel row sums and on the initial law.
inline constexpr double kProbabilityTolerance = 1e-12;

// A log-probability that may be -infinity. The -infinity case is an explicit
// state rather than a floating-point infinity so callers have to branch on it.
class LogValue {
public:
    static LogValue finite(double v) { return LogValue(v, false); }
    static LogValue neg_infinity() { return LogValue(0.0, true); }

    bool is_neg_infinity() const noexcept { return neg_inf_; }
    // Throws InvalidArgument when the value is -infinity.
    double value() const;

private:
    LogValue(double v, bool neg_inf) : value_(v), neg_inf_(neg_inf) {}
    double value_;
    bool neg_inf_;
};

class MarkovModel {
public:
    // kernel is row-major: kernel[c * m + b] = P(b | context c), c in [0, m^order).
    // initial is a law over A^order; when absent the stationary law of the
    // order-block chain is used, which requires the chain to be irreducible.
    static MarkovModel create(std::uint32_t alphabet_size, std::uint32_t order,
                              std::vector<double> kernel,
                              std::optional<std::vector<double>> initial = std::nullopt,
                              std::string id = {});

    std::uint32_t alphabet_size() const noexcept { return m_; }
    std::uint32_t order() const noexcept { return order_; }
    std::uint64_t num_contexts() const noexcept { return contexts_; }
    const std::string& id() const noexcept { return id_; }

    std::span<const double> kernel() const noexcept { return kernel_; }
    std::span<const double> row(std::uint64_t context) const {
        return std::span<const double>(kernel_).subspan(context * m_, m_);
    }
    double transition(std::uint64_t context, Symbol b) const { return kernel_[context * m_ + b]; }
    std::span<const double> initial() const noexcept { return initial_; }

private:
    MarkovModel() = default;

    std::uint32_t m_ = 0;
    std::uint32_t order_ = 0;
    std::uint64_t contexts_ = 1;
    std::vector<double> kernel_;
    std::vector<double> initial_;
    std::string id_;
};

struct PathSample {
    std::vector<Symbol> symbols;
    std::uint64_t seed = 0;
    std::string model_id;

    std::size_t size() const noexcept { return symbols.size(); }
};

// Stationary law over A^order of the block chain. Transient contexts get
// probability zero. Throws ReducibleChain when there is more than one closed
// communicating class.
std::vector<double> stationary_distribution(const MarkovModel& model);

// True iff the block chain has exactly one closed communicating class.
bool has_unique_stationary_law(const MarkovModel& model);

// Smallest s <= order such that each kernel row depends only on its last s symbols.
std::uint32_t true_order(const MarkovModel& model);

// Transition table at order r, conditioning on the last min(r, order) symbols.
// Requires r >= true_order(model).
std::vector<double> kernel_at_order(const MarkovModel& model, std::uint32_t r);

// The same law expressed as an order-r chain (r >= true_order); the initial
// law is carried along (marginalized or extended through the kernel).
MarkovModel lift(const MarkovModel& model, std::uint32_t r);

// Stationary probabilities P*(a_{1:r}) of all length-r blocks.
std::vector<double> block_probabilities(const MarkovModel& model, std::uint32_t r);

// Draws n symbols: the first min(n, order) from the initial law, the rest from
// the kernel. Pure function of (model, n, seed).
PathSample sample_path(const MarkovModel& model, std::uint64_t n, std::uint64_t seed);

// Same draw into a caller-provided buffer, reusing its storage.
void sample_into(const MarkovModel& model, std::uint64_t n, Xoshiro256& rng,
                 std::vector<Symbol>& out);

// sum_{i=r+1}^{n} log P*(x_i | x_{i-r*:i-1}) with r* = true_order(model).
LogValue log_true_conditional_likelihood(const MarkovModel& model, std::span<const Symbol> path,
                                         std::uint32_t r);
inline LogValue log_true_conditional_likelihood(const MarkovModel& model, const PathSample& path,
                                                std::uint32_t r) {
    return log_true_conditional_likelihood(model, std::span<const Symbol>(path.symbols), r);
}

double min_positive_transition(const MarkovModel& model);

// Model text format (see README):
//   alphabet_size = <m>
//   order = <r>
//   kernel =
//   <m probabilities>      one line per context, in context-index order
//   initial = <m^r probabilities>   (optional; may continue on following lines)
MarkovModel parse_model(const std::string& text, std::string id = {});
MarkovModel load_model(const std::string& path);
std::string format_model(const MarkovModel& model);

// Path text format: a header line
//   path v1 alphabet_size=<m> n=<n> seed=<seed> model=<id>
// followed by the symbols, whitespace separated, 64 per line.
std::string format_path(const PathSample& path, std::uint32_t alphabet_size);
PathSample parse_path(const std::string& text, std::uint32_t* alphabet_size = nullptr);

}  // namespace morder
