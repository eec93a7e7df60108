#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "morder/error.hpp"
#include "morder/penalty.hpp"

using namespace morder;

namespace {

std::vector<double> pow2_grid(int lo, int hi) {
    std::vector<double> g;
    for (int k = lo; k <= hi; ++k) g.push_back(std::ldexp(1.0, k));
    return g;
}

const double e = std::numbers::e;

}  // namespace

TEST(PenaltyValue, BicExample) { EXPECT_NEAR(penalty_value(PenaltySpec::bic(), e * e, 1, 2), 2.0, 1e-12); }

TEST(PenaltyValue, LogLogExample) {
    EXPECT_NEAR(penalty_value(PenaltySpec::loglog(5), std::pow(e, e), 2, 2), 20.0, 1e-12);
}

TEST(PenaltyValue, CsiszarExample) {
    EXPECT_NEAR(penalty_value(PenaltySpec::csiszar(1), std::pow(e, 3), 0, 2), 3.0, 1e-12);
}

TEST(PenaltyValue, CustomTable) {
    const auto p = PenaltySpec::custom({0.0, 1.5, 4.0});
    EXPECT_EQ(penalty_value(p, 100, 1, 2), 1.5);
    EXPECT_THROW(penalty_value(p, 100, 3, 2), InvalidArgument);
}

TEST(PenaltyValue, FactorFamily) {
    const auto f = PenaltySpec::loglog_factor({FactorFunction::Kind::Log, 2.0});
    const double n = 1e6;
    EXPECT_NEAR(penalty_value(f, n, 1, 3), 3 * 2.0 * std::log(n) * std::log(std::log(n)), 1e-9);
    EXPECT_NEAR(penalty_factor(f, n, 3), 2.0 * std::log(n), 1e-9);
}

TEST(PenaltyValue, BelowMinimumLengthThrows) {
    EXPECT_THROW(penalty_value(PenaltySpec::bic(), 2.0, 0, 2), InvalidArgument);
    EXPECT_NO_THROW(penalty_value(PenaltySpec::bic(), 3.0, 0, 2));
}

TEST(PenaltyValue, StrictlyIncreasingInOrder) {
    for (const auto& spec : {PenaltySpec::loglog(5), PenaltySpec::bic(), PenaltySpec::csiszar(0.5),
                             PenaltySpec::loglog_factor({FactorFunction::Kind::InverseLog, 1.0})}) {
        for (std::uint32_t m : {2u, 3u, 5u}) {
            for (double n : {16.0, 1000.0, 1e9}) {
                for (std::uint32_t r = 0; r < 6; ++r) {
                    EXPECT_LT(penalty_value(spec, n, r, m), penalty_value(spec, n, r + 1, m)) << spec.label();
                }
            }
        }
    }
}

TEST(PenaltyValue, LogLogBelowBicWhenArithmeticSaysSo) {
    for (double C : {1.0, 5.0, 9.0}) {
        for (std::uint32_t m : {2u, 3u, 4u}) {
            for (double n : pow2_grid(4, 40)) {
                if (C * std::log(std::log(n)) >= 0.5 * (m - 1) * std::log(n)) continue;
                for (std::uint32_t r = 0; r < 4; ++r) {
                    EXPECT_LT(penalty_value(PenaltySpec::loglog(C), n, r, m), penalty_value(PenaltySpec::bic(), n, r, m));
                }
            }
        }
    }
}

TEST(PenaltySpec, DefaultConstantIsTwoMPlusOne) {
    EXPECT_EQ(PenaltySpec::loglog_default(2).constant, 5.0);
    EXPECT_EQ(PenaltySpec::loglog_default(4).constant, 9.0);
}

TEST(PenaltySpec, ParseLabelRoundTrip) {
    for (const std::string text : {"loglog:5", "loglogf:log:2", "loglogf:invlog:1", "loglogf:const:3",
                                   "loglogf:log_over_loglog:0.5", "bic", "csiszar:1.5", "custom:0/1/2.5"}) {
        EXPECT_EQ(PenaltySpec::parse(text).label(), text);
    }
}

TEST(PenaltySpec, ParseRejectsBadInput) {
    for (const std::string text : {"", "loglog", "loglog:0", "loglog:-1", "csiszar:x", "custom:1/-2", "nope",
                                   "loglogf:cubic:1"}) {
        EXPECT_THROW(PenaltySpec::parse(text), InvalidArgument) << text;
    }
}

TEST(CutoffValue, Examples) {
    EXPECT_EQ(cutoff_value(CutoffSpec::constant_k(3), 1e6, 2), 3u);
    EXPECT_EQ(cutoff_value(CutoffSpec::alpha_log(1.0), std::pow(e, 3), 2), 3u);
    EXPECT_EQ(cutoff_value(CutoffSpec::sub_log(), std::ldexp(1.0, 20), 2), 6u);
}

TEST(CutoffValue, HardCapAndMinimum) {
    // floor(log 100 / log 10) = 2 caps constant 5
    EXPECT_EQ(cutoff_value(CutoffSpec::constant_k(5), 100, 10), 2u);
    EXPECT_EQ(cutoff_value(CutoffSpec::constant_k(5, false), 100, 10), 5u);
    EXPECT_GE(cutoff_value(CutoffSpec::alpha_log(0.01), 3, 2), 1u);
}

TEST(CutoffValue, NondecreasingOnIncreasingGrids) {
    for (const auto& spec : {CutoffSpec::sub_log(), CutoffSpec::alpha_log(0.3), CutoffSpec::constant_k(4),
                             CutoffSpec::sub_log(false)}) {
        for (std::uint32_t m : {2u, 3u, 4u}) {
            std::uint32_t prev = 0;
            for (double n = 3; n < 1e12; n *= 1.07) {
                const std::uint32_t k = cutoff_value(spec, n, m);
                ASSERT_GE(k, prev) << spec.label() << " n=" << n;
                ASSERT_GE(k, 1u);
                prev = k;
            }
        }
    }
}

TEST(CutoffSpec, ParseLabelRoundTrip) {
    for (const std::string text : {"constant:3", "alphalogn:0.25", "sublogn", "sublogn+nocap", "constant:2+nocap"}) {
        EXPECT_EQ(CutoffSpec::parse(text).label(), text);
    }
    EXPECT_THROW(CutoffSpec::parse("constant:0"), InvalidArgument);
    EXPECT_THROW(CutoffSpec::parse("loglog"), InvalidArgument);
}

TEST(Conditions, LogLogWithMatchingConstantPasses) {
    const auto rep = consistency_conditions_check(PenaltySpec::loglog(5), CutoffSpec::sub_log(), 5.0, 1.0,
                                                pow2_grid(10, 30), 2);
    EXPECT_TRUE(rep.liminf_ok);
    EXPECT_TRUE(rep.vanishing_ratio_ok);
    EXPECT_TRUE(rep.kappa_nondecreasing);
    EXPECT_TRUE(rep.kappa_within_alpha_log);
    EXPECT_TRUE(rep.all());
    for (double f : rep.factor) EXPECT_NEAR(f, 5.0, 1e-12);
}

TEST(Conditions, VanishingFactorFailsLiminf) {
    const auto pen = PenaltySpec::loglog_factor({FactorFunction::Kind::InverseLog, 1.0});
    const auto rep = consistency_conditions_check(pen, CutoffSpec::sub_log(), 0.5, 1.0, pow2_grid(10, 30), 2);
    EXPECT_FALSE(rep.liminf_ok);
    EXPECT_FALSE(rep.all());
}

TEST(Conditions, BicAsLogLogFactor) {
    // f(n) = (m - 1) log n / (2 log log n) at r = 0, m = 2.
    const auto rep = consistency_conditions_check(PenaltySpec::bic(), CutoffSpec::sub_log(), 1.0, 1.0,
                                                pow2_grid(10, 30), 2);
    EXPECT_TRUE(rep.liminf_ok);
    EXPECT_TRUE(rep.vanishing_ratio_ok);
    for (std::size_t k = 0; k < rep.n_grid.size(); ++k) {
        const double n = rep.n_grid[k];
        EXPECT_NEAR(rep.factor[k], std::log(n) / (2 * std::log(std::log(n))), 1e-9);
    }
}

TEST(Conditions, DefaultAlphaStarFlagsSubLogCutoffOnSmallGrids) {
    // With alpha* = 0.2 / log 2 the sublogn cutoff exceeds alpha* log n at moderate n;
    // the report must say so rather than silently pass.
    const auto rep = consistency_conditions_check(PenaltySpec::loglog(5), CutoffSpec::sub_log(), 5.0,
                                                default_alpha_star(2), pow2_grid(10, 20), 2);
    EXPECT_NEAR(default_alpha_star(2), 0.2 / std::log(2.0), 1e-15);
    for (std::size_t k = 0; k < rep.n_grid.size(); ++k) {
        const bool within = rep.kappa[k] <= default_alpha_star(2) * std::log(rep.n_grid[k]) + 1e-12;
        if (!within) {
            EXPECT_FALSE(rep.kappa_within_alpha_log);
        }
    }
}

TEST(Conditions, RequiresIncreasingGrid) {
    EXPECT_THROW(consistency_conditions_check(PenaltySpec::bic(), CutoffSpec::sub_log(), 1, 1, {100, 50}, 2),
                 InvalidArgument);
}
