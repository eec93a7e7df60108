#pragma once

// Exact context and transition counts for every order up to a depth cap.
//
// For a path x_{1:n} and 0 <= r <= D:
//   N(r, a)    = #{ i in r+1..n : x_{i-r:i-1} = a }
//   N(r, a, b) = #{ i in r+1..n : x_{i-r:i-1} = a, x_i = b }
// so that sum_b N(r, a, b) = N(r, a) and sum_a N(r, a) = max(n - r, 0).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "morder/context.hpp"

namespace morder {

// Dense array below kDenseLimit keys, ordered map above.
class CountTable {
public:
    static constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 20;

    explicit CountTable(std::uint64_t key_space = 1);

    std::uint64_t key_space() const noexcept { return key_space_; }
    bool dense() const noexcept { return dense_; }
    std::uint64_t get(std::uint64_t key) const;
    void increment(std::uint64_t key);
    void set(std::uint64_t key, std::uint64_t count);

    // f(key, count) over nonzero entries in increasing key order.
    template <class F>
    void for_each_nonzero(F&& f) const {
        if (dense_) {
            for (std::uint64_t k = 0; k < values_.size(); ++k) {
                if (values_[k] != 0) f(k, values_[k]);
            }
        } else {
            for (const auto& [k, v] : sparse_) f(k, v);
        }
    }

    bool operator==(const CountTable& other) const;

private:
    std::uint64_t key_space_;
    bool dense_;
    std::vector<std::uint64_t> values_;
    std::map<std::uint64_t, std::uint64_t> sparse_;
};

class ContextCounts {
public:
    ContextCounts(std::uint32_t alphabet_size, std::uint32_t depth_cap);

    std::uint32_t alphabet_size() const noexcept { return m_; }
    std::uint32_t depth_cap() const noexcept { return depth_; }
    std::uint64_t length() const noexcept { return n_; }
    std::span<const Symbol> tail() const noexcept { return tail_; }

    std::uint64_t context_count(std::uint32_t r, std::uint64_t context) const;
    std::uint64_t transition_count(std::uint32_t r, std::uint64_t context, Symbol b) const;

    const CountTable& contexts(std::uint32_t r) const;
    // Keyed by context * m + b, i.e. the depth-(r+1) index of a_{1:r} b.
    const CountTable& transitions(std::uint32_t r) const;

    void append(Symbol s);
    // All symbols are validated before any count changes.
    void append(std::span<const Symbol> symbols);

    // Versioned little-endian binary dump; layout documented in README.
    void save(std::ostream& out) const;
    static ContextCounts load(std::istream& in);

    bool operator==(const ContextCounts& other) const;

private:
    std::uint32_t m_;
    std::uint32_t depth_;
    std::uint64_t n_ = 0;
    std::vector<std::uint64_t> sizes_;     // m^r for r = 0..D
    std::vector<std::uint64_t> current_;   // context preceding the next symbol, per depth
    std::vector<Symbol> tail_;             // last min(n, D) symbols
    std::vector<CountTable> contexts_;
    std::vector<CountTable> transitions_;
};

// Requires depth_cap < path length.
ContextCounts build_counts(std::span<const Symbol> path, std::uint32_t alphabet_size,
                           std::uint32_t depth_cap);

ContextCounts extend_counts(ContextCounts counts, std::span<const Symbol> new_symbols);

}  // namespace morder
