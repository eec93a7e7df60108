#include "morder/penalty.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "morder/error.hpp"

namespace morder {

namespace {

// Floors and ceilings tolerate 1e-9 of rounding so that e.g. floor(log(e^3)) = 3.
constexpr double kRoundingSlack = 1e-9;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw InvalidArgument(what + ": expected a number, got '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

void check_length(double n) {
    if (!(n >= kMinLength)) throw InvalidArgument("length n must be at least 3");
}

double loglog(double n) { return std::log(std::log(n)); }

}  // namespace

double FactorFunction::operator()(double n) const {
    switch (kind) {
        case Kind::Constant: return coef;
        case Kind::Log: return coef * std::log(n);
        case Kind::InverseLog: return coef / std::log(n);
        case Kind::LogOverLogLog: return coef * std::log(n) / loglog(n);
    }
    return coef;
}

std::string FactorFunction::label() const {
    switch (kind) {
        case Kind::Constant: return "const:" + num(coef);
        case Kind::Log: return "log:" + num(coef);
        case Kind::InverseLog: return "invlog:" + num(coef);
        case Kind::LogOverLogLog: return "log_over_loglog:" + num(coef);
    }
    return {};
}

PenaltySpec PenaltySpec::loglog(double c) {
    PenaltySpec p;
    p.kind = Kind::LogLog;
    p.constant = c;
    p.validate();
    return p;
}

PenaltySpec PenaltySpec::loglog_default(std::uint32_t alphabet_size) {
    return loglog(2.0 * alphabet_size + 1.0);
}

PenaltySpec PenaltySpec::loglog_factor(FactorFunction f) {
    PenaltySpec p;
    p.kind = Kind::LogLogF;
    p.factor = f;
    p.validate();
    return p;
}

PenaltySpec PenaltySpec::bic() {
    PenaltySpec p;
    p.kind = Kind::Bic;
    return p;
}

PenaltySpec PenaltySpec::csiszar(double c) {
    PenaltySpec p;
    p.kind = Kind::CsiszarLogN;
    p.constant = c;
    p.validate();
    return p;
}

PenaltySpec PenaltySpec::custom(std::vector<double> table) {
    PenaltySpec p;
    p.kind = Kind::Custom;
    p.table = std::move(table);
    p.validate();
    return p;
}

void PenaltySpec::validate() const {
    switch (kind) {
        case Kind::LogLog:
        case Kind::CsiszarLogN:
            if (!(constant > 0.0)) throw InvalidArgument("penalty constant must be positive");
            break;
        case Kind::LogLogF:
            if (!(factor.coef > 0.0)) throw InvalidArgument("penalty factor coefficient must be positive");
            break;
        case Kind::Custom:
            if (table.empty()) throw InvalidArgument("custom penalty table is empty");
            for (double v : table) {
                if (!(v >= 0.0)) throw InvalidArgument("custom penalty table must be nonnegative");
            }
            break;
        case Kind::Bic: break;
    }
}

PenaltySpec PenaltySpec::parse(const std::string& text) {
    const auto parts = split(text, ':');
    const std::string& head = parts.empty() ? text : parts[0];
    if (head == "bic" && parts.size() == 1) return bic();
    if (head == "loglog" && parts.size() == 2) return loglog(parse_double(parts[1], "loglog constant"));
    if (head == "csiszar" && parts.size() == 2) return csiszar(parse_double(parts[1], "csiszar constant"));
    if (head == "custom" && parts.size() == 2) {
        std::vector<double> table;
        for (const auto& v : split(parts[1], '/')) table.push_back(parse_double(v, "custom table entry"));
        return custom(std::move(table));
    }
    if (head == "loglogf" && parts.size() == 3) {
        FactorFunction f;
        if (parts[1] == "const") {
            f.kind = FactorFunction::Kind::Constant;
        } else if (parts[1] == "log") {
            f.kind = FactorFunction::Kind::Log;
        } else if (parts[1] == "invlog") {
            f.kind = FactorFunction::Kind::InverseLog;
        } else if (parts[1] == "log_over_loglog") {
            f.kind = FactorFunction::Kind::LogOverLogLog;
        } else {
            throw InvalidArgument("unknown factor function '" + parts[1] + "'");
        }
        f.coef = parse_double(parts[2], "factor coefficient");
        return loglog_factor(f);
    }
    throw InvalidArgument("unknown penalty spec '" + text + "'");
}

std::string PenaltySpec::label() const {
    switch (kind) {
        case Kind::LogLog: return "loglog:" + num(constant);
        case Kind::LogLogF: return "loglogf:" + factor.label();
        case Kind::Bic: return "bic";
        case Kind::CsiszarLogN: return "csiszar:" + num(constant);
        case Kind::Custom: {
            std::string out = "custom:";
            for (std::size_t k = 0; k < table.size(); ++k) out += (k ? "/" : "") + num(table[k]);
            return out;
        }
    }
    return {};
}

double penalty_value(const PenaltySpec& spec, double n, std::uint32_t r, std::uint32_t alphabet_size) {
    check_length(n);
    if (alphabet_size < 2) throw InvalidArgument("alphabet size must be at least 2");
    const double mr = std::pow(static_cast<double>(alphabet_size), r);
    switch (spec.kind) {
        case PenaltySpec::Kind::LogLog: return spec.constant * mr * loglog(n);
        case PenaltySpec::Kind::LogLogF: return mr * spec.factor(n) * loglog(n);
        case PenaltySpec::Kind::Bic: return 0.5 * mr * (alphabet_size - 1.0) * std::log(n);
        case PenaltySpec::Kind::CsiszarLogN: return spec.constant * mr * std::log(n);
        case PenaltySpec::Kind::Custom:
            if (r >= spec.table.size()) throw InvalidArgument("custom penalty table has no entry for this order");
            return spec.table[r];
    }
    return 0.0;
}

double penalty_factor(const PenaltySpec& spec, double n, std::uint32_t alphabet_size) {
    return penalty_value(spec, n, 0, alphabet_size) / loglog(n);
}

CutoffSpec CutoffSpec::constant_k(std::uint32_t k, bool cap) {
    CutoffSpec c;
    c.kind = Kind::Constant;
    c.constant = k;
    c.hard_cap = cap;
    return c;
}

CutoffSpec CutoffSpec::alpha_log(double alpha, bool cap) {
    if (!(alpha > 0.0)) throw InvalidArgument("cutoff alpha must be positive");
    CutoffSpec c;
    c.kind = Kind::AlphaLogN;
    c.alpha = alpha;
    c.hard_cap = cap;
    return c;
}

CutoffSpec CutoffSpec::sub_log(bool cap) {
    CutoffSpec c;
    c.kind = Kind::SubLogN;
    c.hard_cap = cap;
    return c;
}

CutoffSpec CutoffSpec::parse(const std::string& text) {
    auto parts = split(text, '+');
    bool cap = true;
    if (parts.size() == 2 && parts[1] == "nocap") {
        cap = false;
    } else if (parts.size() != 1) {
        throw InvalidArgument("unknown cutoff spec '" + text + "'");
    }
    const auto head = split(parts[0], ':');
    if (head.size() == 1 && head[0] == "sublogn") return sub_log(cap);
    if (head.size() == 2 && head[0] == "constant") {
        const double k = parse_double(head[1], "cutoff constant");
        if (!(k >= 1.0) || k != std::floor(k)) throw InvalidArgument("cutoff constant must be a positive integer");
        return constant_k(static_cast<std::uint32_t>(k), cap);
    }
    if (head.size() == 2 && head[0] == "alphalogn") return alpha_log(parse_double(head[1], "cutoff alpha"), cap);
    throw InvalidArgument("unknown cutoff spec '" + text + "'");
}

std::string CutoffSpec::label() const {
    std::string out;
    switch (kind) {
        case Kind::Constant: out = "constant:" + std::to_string(constant); break;
        case Kind::AlphaLogN: out = "alphalogn:" + num(alpha); break;
        case Kind::SubLogN: out = "sublogn"; break;
    }
    return hard_cap ? out : out + "+nocap";
}

std::uint32_t cutoff_value(const CutoffSpec& spec, double n, std::uint32_t alphabet_size) {
    check_length(n);
    if (alphabet_size < 2) throw InvalidArgument("alphabet size must be at least 2");
    double k = 1.0;
    switch (spec.kind) {
        case CutoffSpec::Kind::Constant: k = spec.constant; break;
        case CutoffSpec::Kind::AlphaLogN: k = std::floor(spec.alpha * std::log(n) + kRoundingSlack); break;
        case CutoffSpec::Kind::SubLogN: {
            // log n / log log n falls on (e, e^e); holding it at its minimum keeps kappa monotone.
            const double at = std::max(n, std::exp(std::numbers::e));
            k = std::ceil(std::log(at) / loglog(at) - kRoundingSlack);
            break;
        }
    }
    if (spec.hard_cap) {
        k = std::min(k, std::floor(std::log(n) / std::log(static_cast<double>(alphabet_size)) + kRoundingSlack));
    }
    return static_cast<std::uint32_t>(std::max(1.0, k));
}

double default_alpha_star(std::uint32_t alphabet_size) {
    return 0.2 / std::log(static_cast<double>(alphabet_size));
}

ConditionReport consistency_conditions_check(const PenaltySpec& pen, const CutoffSpec& cut, double c_star,
                                           double alpha_star, const std::vector<double>& n_grid,
                                           std::uint32_t alphabet_size) {
    if (n_grid.empty()) throw InvalidArgument("n grid is empty");
    for (std::size_t k = 1; k < n_grid.size(); ++k) {
        if (!(n_grid[k] > n_grid[k - 1])) throw InvalidArgument("n grid must be strictly increasing");
    }
    ConditionReport rep;
    rep.n_grid = n_grid;
    for (double n : n_grid) {
        const double f = penalty_factor(pen, n, alphabet_size);
        rep.factor.push_back(f);
        rep.ratio.push_back(f * loglog(n) / n);
        rep.kappa.push_back(cutoff_value(cut, n, alphabet_size));
    }

    const std::size_t tail = n_grid.size() / 2;
    rep.liminf_ok = true;
    rep.vanishing_ratio_ok = rep.ratio.back() < 1e-3;
    for (std::size_t k = tail; k < n_grid.size(); ++k) {
        if (rep.factor[k] < c_star * (1.0 - 1e-12)) rep.liminf_ok = false;
        if (k > tail && !(rep.ratio[k] < rep.ratio[k - 1])) rep.vanishing_ratio_ok = false;
    }
    rep.kappa_nondecreasing = true;
    rep.kappa_within_alpha_log = true;
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
        if (k > 0 && rep.kappa[k] < rep.kappa[k - 1]) rep.kappa_nondecreasing = false;
        if (rep.kappa[k] > alpha_star * std::log(n_grid[k]) + kRoundingSlack) rep.kappa_within_alpha_log = false;
    }
    return rep;
}

}  // namespace morder
