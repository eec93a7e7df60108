#include <sstream>

#include <gtest/gtest.h>

#include "morder/counts.hpp"
#include "morder/error.hpp"
#include "morder/rng.hpp"
#include "oracles.hpp"

using namespace morder;

namespace {

std::vector<Symbol> binary_path(std::uint32_t bits, std::uint32_t length) {
    std::vector<Symbol> p(length);
    for (std::uint32_t i = 0; i < length; ++i) p[i] = (bits >> i) & 1u;
    return p;
}

std::vector<Symbol> random_path(std::size_t n, std::uint32_t m, Xoshiro256& rng) {
    std::vector<Symbol> p(n);
    for (auto& s : p) s = static_cast<Symbol>(rng() % m);
    return p;
}

// Every count equals the window scanner, and the row-sum and total-mass identities hold.
void expect_matches_oracle(const ContextCounts& counts, const std::vector<Symbol>& path) {
    const std::uint32_t m = counts.alphabet_size();
    for (std::uint32_t r = 0; r <= counts.depth_cap(); ++r) {
        const auto ctx = oracle::window_counts(path, r);
        const auto tr = oracle::transition_window_counts(path, r);
        const std::uint64_t size = checked_pow(m, r);
        std::uint64_t total = 0;
        for (std::uint64_t a = 0; a < size; ++a) {
            const auto key = decode_context(a, m, r);
            const auto it = ctx.find(key);
            const std::uint64_t expected = it == ctx.end() ? 0 : it->second;
            ASSERT_EQ(counts.context_count(r, a), expected) << "r=" << r << " a=" << a;
            std::uint64_t row = 0;
            for (Symbol b = 0; b < m; ++b) {
                auto full = key;
                full.push_back(b);
                const auto jt = tr.find(full);
                ASSERT_EQ(counts.transition_count(r, a, b), jt == tr.end() ? 0u : jt->second);
                row += counts.transition_count(r, a, b);
            }
            ASSERT_EQ(row, counts.context_count(r, a));
            total += counts.context_count(r, a);
        }
        ASSERT_EQ(total, path.size() > r ? path.size() - r : 0);
    }
}

}  // namespace

TEST(BuildCounts, ExampleOrderOne) {
    const std::vector<Symbol> path = {0, 0, 1, 0};
    const auto c = build_counts(path, 2, 1);
    EXPECT_EQ(c.context_count(1, 0), 2u);
    EXPECT_EQ(c.context_count(1, 1), 1u);
    EXPECT_EQ(c.transition_count(1, 0, 0), 1u);
    EXPECT_EQ(c.transition_count(1, 0, 1), 1u);
    EXPECT_EQ(c.transition_count(1, 1, 0), 1u);
    EXPECT_EQ(c.transition_count(1, 1, 1), 0u);
}

TEST(BuildCounts, ExampleOrderZero) {
    const std::vector<Symbol> path = {0, 0, 1, 0};
    const auto c = build_counts(path, 2, 1);
    EXPECT_EQ(c.context_count(0, 0), 4u);
    EXPECT_EQ(c.transition_count(0, 0, 0), 3u);
    EXPECT_EQ(c.transition_count(0, 0, 1), 1u);
}

TEST(BuildCounts, ConstantPath) {
    const std::vector<Symbol> path(20, 0);
    const auto c = build_counts(path, 2, 5);
    for (std::uint32_t r = 0; r <= 5; ++r) {
        EXPECT_EQ(c.context_count(r, 0), 20u - r);
        for (std::uint64_t a = 1; a < checked_pow(2, r); ++a) EXPECT_EQ(c.context_count(r, a), 0u);
    }
}

TEST(BuildCounts, DepthCapMustBeBelowLength) {
    const std::vector<Symbol> path = {0, 1, 0};
    EXPECT_THROW(build_counts(path, 2, 3), InvalidArgument);
    EXPECT_NO_THROW(build_counts(path, 2, 2));
}

TEST(BuildCounts, SymbolOutsideAlphabetThrows) {
    const std::vector<Symbol> path = {0, 2, 1, 0};
    EXPECT_THROW(build_counts(path, 2, 1), InvalidArgument);
}

TEST(BuildCounts, RandomPathsMatchWindowScanner) {
    Xoshiro256 rng(1);
    for (std::uint32_t m : {2u, 3u, 5u}) {
        for (int t = 0; t < 20; ++t) {
            const auto path = random_path(50 + rng() % 100, m, rng);
            expect_matches_oracle(build_counts(path, m, 3), path);
        }
    }
}

TEST(ExtendCounts, EmptyExtensionIsIdentity) {
    Xoshiro256 rng(2);
    const auto path = random_path(40, 3, rng);
    const auto c = build_counts(path, 3, 3);
    EXPECT_EQ(extend_counts(c, {}), c);
}

TEST(ExtendCounts, PrefixPlusSuffixEqualsRebuild) {
    Xoshiro256 rng(3);
    for (int t = 0; t < 1000; ++t) {
        const std::uint32_t m = 2 + static_cast<std::uint32_t>(rng() % 3);
        const auto path = random_path(10 + rng() % 60, m, rng);
        const std::uint32_t depth = static_cast<std::uint32_t>(rng() % 4);
        const std::size_t split = depth + 1 + rng() % (path.size() - depth);
        const std::vector<Symbol> prefix(path.begin(), path.begin() + static_cast<long>(split));
        const std::vector<Symbol> suffix(path.begin() + static_cast<long>(split), path.end());
        ASSERT_EQ(extend_counts(build_counts(prefix, m, depth), suffix), build_counts(path, m, depth));
    }
}

TEST(ExtendCounts, OneSymbolAddsOneWindowPerDepth) {
    Xoshiro256 rng(4);
    const auto path = random_path(30, 2, rng);
    auto c = build_counts(path, 2, 4);
    const auto before = c;
    c.append(1);
    for (std::uint32_t r = 0; r <= 4; ++r) {
        std::uint64_t diff = 0;
        for (std::uint64_t a = 0; a < checked_pow(2, r); ++a) {
            diff += c.context_count(r, a) - before.context_count(r, a);
        }
        EXPECT_EQ(diff, 1u);
    }
}

TEST(ExtendCounts, BadSymbolLeavesCountsUntouched) {
    auto c = build_counts(std::vector<Symbol>{0, 1, 1}, 2, 1);
    const auto before = c;
    EXPECT_THROW(c.append(std::vector<Symbol>{1, 0, 7}), InvalidArgument);
    EXPECT_EQ(c, before);
}

TEST(ExtendCounts, ExhaustiveBinaryLengthTenAllSplits) {
    for (std::uint32_t bits = 0; bits < (1u << 10); ++bits) {
        const auto path = binary_path(bits, 10);
        const auto full = build_counts(path, 2, 3);
        for (std::size_t split = 4; split <= 10; ++split) {
            const std::vector<Symbol> prefix(path.begin(), path.begin() + static_cast<long>(split));
            const std::vector<Symbol> suffix(path.begin() + static_cast<long>(split), path.end());
            ASSERT_EQ(extend_counts(build_counts(prefix, 2, 3), suffix), full);
        }
        // Starting from empty counts, every intermediate state satisfies the identities.
        ContextCounts c(2, 3);
        for (std::size_t i = 0; i < path.size(); ++i) {
            c.append(path[i]);
            expect_matches_oracle(c, std::vector<Symbol>(path.begin(), path.begin() + static_cast<long>(i + 1)));
        }
    }
}

TEST(CountTable, SparseStorageAboveLimit) {
    // m = 2, depth 21: 2^21 > 2^20 keys, so that depth is stored sparsely.
    Xoshiro256 rng(5);
    const auto path = random_path(3000, 2, rng);
    const auto c = build_counts(path, 2, 21);
    EXPECT_TRUE(c.contexts(3).dense());
    EXPECT_FALSE(c.contexts(21).dense());
    const auto ctx = oracle::window_counts(path, 21);
    for (const auto& [key, n] : ctx) EXPECT_EQ(c.context_count(21, encode_context(key, 2)), n);
}

TEST(CountsIo, SaveLoadRoundTrip) {
    Xoshiro256 rng(6);
    const auto path = random_path(500, 3, rng);
    const auto c = build_counts(path, 3, 4);
    std::stringstream buf;
    c.save(buf);
    const auto back = ContextCounts::load(buf);
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.length(), 500u);
    // Loaded counts continue to extend correctly.
    const std::vector<Symbol> more = {2, 1, 0, 0};
    auto full = path;
    full.insert(full.end(), more.begin(), more.end());
    EXPECT_EQ(extend_counts(back, more), build_counts(full, 3, 4));
}

TEST(CountsIo, RejectsGarbage) {
    std::stringstream buf("not a counts file");
    EXPECT_THROW(ContextCounts::load(buf), ParseError);
}

TEST(Context, EncodeDecodeRoundTrip) {
    for (std::uint64_t c = 0; c < 81; ++c) EXPECT_EQ(encode_context(decode_context(c, 3, 4), 3), c);
    EXPECT_EQ(encode_context(std::vector<Symbol>{1, 0, 1}, 2), 5u);  // most recent symbol least significant
    EXPECT_THROW(checked_pow(2, 64), InvalidArgument);
}
