#pragma once

// Penalty functions pen(n, r), cutoff functions kappa(n), and a numerical
// check of the sufficient conditions for strong consistency on an n-grid.

#include <cstdint>
#include <string>
#include <vector>

namespace morder {

// Named growth function f(n) used by the pen = m^r f(n) log log n family.
struct FactorFunction {
    enum class Kind { Constant, Log, InverseLog, LogOverLogLog };
    Kind kind = Kind::Constant;
    double coef = 1.0;

    double operator()(double n) const;
    std::string label() const;
};

struct PenaltySpec {
    enum class Kind { LogLog, LogLogF, Bic, CsiszarLogN, Custom };
    Kind kind = Kind::LogLog;
    double constant = 5.0;          // C for LogLog, c for CsiszarLogN
    FactorFunction factor;          // LogLogF
    std::vector<double> table;      // Custom: pen(n, r) = table[r]

    static PenaltySpec loglog(double c);
    // C = 2m + 1, the smallest integer above the sufficient constant 2m.
    static PenaltySpec loglog_default(std::uint32_t alphabet_size);
    static PenaltySpec loglog_factor(FactorFunction f);
    static PenaltySpec bic();
    static PenaltySpec csiszar(double c);
    static PenaltySpec custom(std::vector<double> table);

    // Text form used in configs and CSV output:
    //   loglog:<C> | loglogf:<const|log|invlog|log_over_loglog>:<coef> | bic |
    //   csiszar:<c> | custom:<v0>/<v1>/...
    static PenaltySpec parse(const std::string& text);
    std::string label() const;

    // Throws InvalidArgument when a constant is nonpositive or a table entry negative.
    void validate() const;
};

struct CutoffSpec {
    enum class Kind { Constant, AlphaLogN, SubLogN };
    Kind kind = Kind::SubLogN;
    std::uint32_t constant = 1;
    double alpha = 1.0;
    bool hard_cap = true;  // min with floor(log n / log m)

    static CutoffSpec constant_k(std::uint32_t k, bool cap = true);
    static CutoffSpec alpha_log(double alpha, bool cap = true);
    static CutoffSpec sub_log(bool cap = true);

    // constant:<K> | alphalogn:<alpha> | sublogn, optionally suffixed "+nocap"
    static CutoffSpec parse(const std::string& text);
    std::string label() const;
};

// Smallest n accepted by penalty_value and cutoff_value (log log n > 0 for n > e).
inline constexpr double kMinLength = 3.0;

double penalty_value(const PenaltySpec& spec, double n, std::uint32_t r, std::uint32_t alphabet_size);

// f(n) = pen(n, 0) / log log n, the factor in pen = m^r f(n) log log n.
double penalty_factor(const PenaltySpec& spec, double n, std::uint32_t alphabet_size);

std::uint32_t cutoff_value(const CutoffSpec& spec, double n, std::uint32_t alphabet_size);

// Default alpha* = 0.2 / log m for the kappa(n) <= alpha* log n condition.
double default_alpha_star(std::uint32_t alphabet_size);

struct ConditionReport {
    std::vector<double> n_grid;
    std::vector<double> factor;        // f(n)
    std::vector<double> ratio;         // f(n) log log n / n
    std::vector<std::uint32_t> kappa;  // kappa(n)

    bool liminf_ok = false;            // f(n) >= C* on the upper half of the grid
    bool vanishing_ratio_ok = false;   // ratio decreasing on the upper half, < 1e-3 at the end
    bool kappa_nondecreasing = false;
    bool kappa_within_alpha_log = false;  // kappa(n) <= alpha* log n on the whole grid

    bool all() const {
        return liminf_ok && vanishing_ratio_ok && kappa_nondecreasing && kappa_within_alpha_log;
    }
};

ConditionReport consistency_conditions_check(const PenaltySpec& pen, const CutoffSpec& cut, double c_star,
                                           double alpha_star, const std::vector<double>& n_grid,
                                           std::uint32_t alphabet_size);

}  // namespace morder
