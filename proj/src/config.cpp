#include "morder/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "morder/error.hpp"

namespace morder {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void field_error(const std::string& key, const std::string& what) {
    throw ParseError("config field '" + key + "': " + what);
}

std::vector<std::string> split_list(const std::string& value) {
    std::string s = value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') field_error(key, "expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::uint32_t to_u32(const std::string& key, const std::string& s) {
    const std::uint64_t v = to_unsigned(key, s);
    if (v > UINT32_MAX) field_error(key, "value too large");
    return static_cast<std::uint32_t>(v);
}

std::uint64_t to_length(const std::string& key, const std::string& s) {
    if (const auto caret = s.find('^'); caret != std::string::npos) {
        const std::uint64_t base = to_unsigned(key, s.substr(0, caret));
        const std::uint64_t exp = to_unsigned(key, s.substr(caret + 1));
        if (exp > 62) field_error(key, "exponent too large");
        std::uint64_t v = 1;
        for (std::uint64_t k = 0; k < exp; ++k) {
            if (base != 0 && v > UINT64_MAX / base) field_error(key, "length overflows");
            v *= base;
        }
        return v;
    }
    return to_unsigned(key, s);
}

double to_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) field_error(key, "expected a number, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    field_error(key, "expected true or false, got '" + s + "'");
}

std::string resolve(const std::string& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!values.emplace(key, trim(line.substr(eq + 1))).second) field_error(key, "given more than once");
    }

    std::optional<bool> cap;
    std::string cutoff_text;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> handlers = {
        {"model", [&](auto& k, auto& v) {
             if (v.empty()) field_error(k, "empty path");
             cfg.model_path = resolve(base_dir, v);
         }},
        {"n_grid", [&](auto& k, auto& v) {
             for (const auto& tok : split_list(v)) cfg.n_grid.push_back(to_length(k, tok));
         }},
        {"penalty", [&](auto& k, auto& v) {
             try {
                 cfg.penalties.push_back(PenaltySpec::parse(v));
             } catch (const InvalidArgument& e) {
                 field_error(k, e.what());
             }
         }},
        {"penalties", [&](auto& k, auto& v) {
             for (const auto& tok : split_list(v)) {
                 try {
                     cfg.penalties.push_back(PenaltySpec::parse(tok));
                 } catch (const InvalidArgument& e) {
                     field_error(k, e.what());
                 }
             }
         }},
        {"cutoff", [&](auto&, auto& v) { cutoff_text = v; }},
        {"cutoff_cap", [&](auto& k, auto& v) { cap = to_bool(k, v); }},
        {"eta", [&](auto& k, auto& v) { cfg.eta = to_double(k, v); }},
        {"rho", [&](auto& k, auto& v) { cfg.rho = to_u32(k, v); }},
        {"replications", [&](auto& k, auto& v) { cfg.replications = to_u32(k, v); }},
        {"seed", [&](auto& k, auto& v) { cfg.seed = to_unsigned(k, v); }},
        {"out", [&](auto& k, auto& v) {
             if (v.empty()) field_error(k, "empty path");
             cfg.out = resolve(base_dir, v);
         }},
        {"checks", [&](auto& k, auto& v) {
             for (const auto& tok : split_list(v)) {
                 const auto& names = known_checks();
                 if (tok == "all") {
                     cfg.checks = names;
                     continue;
                 }
                 if (std::find(names.begin(), names.end(), tok) == names.end()) {
                     field_error(k, "unknown check '" + tok + "'");
                 }
                 cfg.checks.push_back(tok);
             }
         }},
        {"paths", [&](auto&, auto& v) { cfg.paths_dir = resolve(base_dir, v); }},
        {"inject_fault", [&](auto& k, auto& v) { cfg.inject_fault = to_bool(k, v); }},
        {"instance_checks", [&](auto& k, auto& v) { cfg.sizes.instance_checks = to_u32(k, v); }},
        {"instance_max_n", [&](auto& k, auto& v) { cfg.sizes.instance_max_n = to_length(k, v); }},
        {"mc_replications", [&](auto& k, auto& v) { cfg.sizes.mc_replications = to_unsigned(k, v); }},
        {"mc_n", [&](auto& k, auto& v) { cfg.sizes.mc_n = to_length(k, v); }},
        {"deviation_replications", [&](auto& k, auto& v) { cfg.sizes.deviation_replications = to_unsigned(k, v); }},
        {"deviation_n", [&](auto& k, auto& v) { cfg.sizes.deviation_n = to_length(k, v); }},
        {"lil_min_log2", [&](auto& k, auto& v) { cfg.sizes.lil_min_log2 = to_u32(k, v); }},
        {"lil_max_log2", [&](auto& k, auto& v) { cfg.sizes.lil_max_log2 = to_u32(k, v); }},
        {"lil_seeds", [&](auto& k, auto& v) { cfg.sizes.lil_seeds = to_u32(k, v); }},
        {"typicality_replications", [&](auto& k, auto& v) { cfg.sizes.typicality_replications = to_unsigned(k, v); }},
        {"typicality_small_n", [&](auto& k, auto& v) { cfg.sizes.typicality_small_n = to_length(k, v); }},
        {"typicality_large_n", [&](auto& k, auto& v) { cfg.sizes.typicality_large_n = to_length(k, v); }},
        {"bracket_kernels", [&](auto& k, auto& v) { cfg.sizes.bracket_kernels = to_u32(k, v); }},
        {"bracket_paths", [&](auto& k, auto& v) { cfg.sizes.bracket_paths = to_u32(k, v); }},
        {"bracket_samples", [&](auto& k, auto& v) { cfg.sizes.bracket_samples = to_unsigned(k, v); }},
    };
    for (const auto& [key, value] : values) {
        const auto it = handlers.find(key);
        if (it == handlers.end()) field_error(key, "unknown field");
        it->second(key, value);
    }
    if (values.count("penalty") && values.count("penalties")) field_error("penalties", "conflicts with 'penalty'");

    if (!cutoff_text.empty()) {
        try {
            cfg.cutoff = CutoffSpec::parse(cutoff_text);
        } catch (const InvalidArgument& e) {
            field_error("cutoff", e.what());
        }
    }
    if (cap) cfg.cutoff.hard_cap = *cap;

    if (cfg.model_path.empty()) field_error("model", "required");
    if (!fs::is_regular_file(cfg.model_path)) field_error("model", "file not found: " + cfg.model_path);
    if (cfg.n_grid.empty()) field_error("n_grid", "required");
    for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        if (cfg.n_grid[k] < 3) field_error("n_grid", "lengths must be at least 3");
        if (k > 0 && cfg.n_grid[k] <= cfg.n_grid[k - 1]) field_error("n_grid", "must be strictly increasing");
    }
    if (cfg.replications < 1) field_error("replications", "must be at least 1");
    if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) field_error("eta", "must lie in (0,1)");
    if (cfg.rho < 1) field_error("rho", "must be at least 1");
    if (!cfg.paths_dir.empty() && !fs::is_directory(cfg.paths_dir)) {
        field_error("paths", "directory not found: " + cfg.paths_dir);
    }
    if (cfg.sizes.lil_min_log2 < 4 || cfg.sizes.lil_min_log2 > cfg.sizes.lil_max_log2 || cfg.sizes.lil_max_log2 > 40) {
        field_error("lil_max_log2", "need 4 <= lil_min_log2 <= lil_max_log2 <= 40");
    }
    std::set<std::string> unique(cfg.checks.begin(), cfg.checks.end());
    std::vector<std::string> ordered;
    for (const auto& name : known_checks()) {
        if (unique.count(name)) ordered.push_back(name);
    }
    cfg.checks = ordered;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const fs::path parent = fs::path(path).parent_path();
    return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

}  // namespace morder
