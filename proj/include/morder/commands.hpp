#pragma once

// Subcommands of the morder tool. Every command is a deterministic function of
// the config and the master seed; outputs are written under config.out.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "morder/config.hpp"

namespace morder {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed check or invalid config/input
inline constexpr int kExitIo = 2;       // file system failure

// paths/path_<k>.txt for every replication plus paths/manifest.csv (replication,seed,n,file).
int cmd_simulate(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log);

// estimates.csv, scores.csv and recovery.csv for the single configured penalty.
int cmd_estimate(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log);

// sweep_estimates.csv, sweep_recovery.csv and penalty_values.csv for two or more penalties.
int cmd_sweep(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log);

// verify_report.json plus CSV files for the grid-valued checks.
int cmd_verify(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned jobs = 1;
};

// Loads the config, applies overrides, runs the named command and maps errors to exit codes.
int run_command(const std::string& name, const std::string& config_path, const RunOverrides& overrides,
                std::ostream& log, std::ostream& err);

// printf("%.12g") formatting used by every table.
std::string format_number(double v);

}  // namespace morder
