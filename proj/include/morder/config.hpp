#pragma once

// Experiment configuration files.
//
// Grammar: one `key = value` per line, `#` starts a comment, blank lines are
// ignored. List values are separated by commas or whitespace. Lengths accept
// either a plain integer or `2^k`. Relative paths are resolved against the
// directory holding the config file.

#include <cstdint>
#include <string>
#include <vector>

#include "morder/penalty.hpp"

namespace morder {

// Work sizes of the verification checks.
struct CheckSizes {
    std::uint32_t instance_checks = 1000;
    std::uint64_t instance_max_n = 512;
    std::uint64_t mc_replications = 100000;
    std::uint64_t mc_n = 512;
    std::uint64_t deviation_replications = 100000;
    std::uint64_t deviation_n = 256;
    std::uint32_t lil_min_log2 = 10;
    std::uint32_t lil_max_log2 = 22;
    std::uint32_t lil_seeds = 20;
    std::uint64_t typicality_replications = 100;
    std::uint64_t typicality_small_n = 1024;
    std::uint64_t typicality_large_n = 65536;
    std::uint32_t bracket_kernels = 100;
    std::uint32_t bracket_paths = 100;
    std::uint64_t bracket_samples = 10000;
};

inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {"bernstein_norm", "norm_control", "bernstein", "deviation",
                                                   "lil",            "typicality",   "brackets"};
    return names;
}

struct ExperimentConfig {
    std::string model_path;                  // required
    std::vector<std::uint64_t> n_grid;       // required, strictly increasing
    std::vector<PenaltySpec> penalties;      // empty: loglog with C = 2m + 1
    CutoffSpec cutoff = CutoffSpec::sub_log();
    double eta = 0.5;
    std::uint32_t rho = 3;
    std::uint32_t replications = 1;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::vector<std::string> checks;         // subset of known_checks()
    std::string paths_dir;                   // estimate: read paths written by simulate
    bool inject_fault = false;               // verify: corrupt the mixture kernel
    CheckSizes sizes;
};

// Throws ParseError naming the offending field.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");

// Throws IoError when the file cannot be read.
ExperimentConfig load_config(const std::string& path);

}  // namespace morder
