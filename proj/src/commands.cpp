#include "morder/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "morder/diagnostics.hpp"
#include "morder/error.hpp"
#include "morder/estimator.hpp"
#include "morder/parallel.hpp"

namespace morder {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kEstimateHeader = "n,penalty,cutoff,replication,chosen_order,true_order,lil_stat,seed";

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Rounds to the 12 significant digits used in every output file.
double round12(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_number(v).c_str(), nullptr);
}

MarkovModel load_truth(const ExperimentConfig& cfg) {
    try {
        return load_model(cfg.model_path);
    } catch (const ParseError& e) {
        throw ParseError(std::string("config field 'model': ") + e.what());
    }
}

std::vector<PenaltySpec> penalties_for(const ExperimentConfig& cfg, std::uint32_t m) {
    if (cfg.penalties.empty()) return {PenaltySpec::loglog_default(m)};
    return cfg.penalties;
}

std::string path_file_name(std::uint32_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "path_%04u.txt", k);
    return buf;
}

struct LoadedPath {
    std::uint32_t replication = 0;
    PathSample path;
};

// Reads manifest.csv and every path it lists from a directory written by simulate.
std::vector<LoadedPath> load_paths(const fs::path& dir, std::uint32_t alphabet_size) {
    std::istringstream manifest(read_file(dir / "manifest.csv"));
    std::string line;
    if (!std::getline(manifest, line) || line != "replication,seed,n,file") {
        throw ParseError("manifest.csv: bad header");
    }
    std::vector<LoadedPath> out;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string rep, seed, n, file;
        if (!std::getline(row, rep, ',') || !std::getline(row, seed, ',') || !std::getline(row, n, ',') ||
            !std::getline(row, file)) {
            throw ParseError("manifest.csv: malformed row '" + line + "'");
        }
        LoadedPath lp;
        try {
            lp.replication = static_cast<std::uint32_t>(std::stoul(rep));
        } catch (const std::exception&) {
            throw ParseError("manifest.csv: bad replication '" + rep + "'");
        }
        std::uint32_t m = 0;
        lp.path = parse_path(read_file(dir / file), &m);
        if (m != alphabet_size) throw ParseError("path file '" + file + "': alphabet size differs from the model");
        if (std::to_string(lp.path.seed) != seed) throw ParseError("path file '" + file + "': seed differs from manifest");
        out.push_back(std::move(lp));
    }
    if (out.empty()) throw ParseError("manifest.csv lists no paths");
    return out;
}

ConsistencyResult run_estimates(const ExperimentConfig& cfg, const MarkovModel& truth,
                                const std::vector<PenaltySpec>& pens, unsigned jobs) {
    if (cfg.paths_dir.empty()) {
        return consistency_experiment(truth, pens, cfg.cutoff, cfg.n_grid, cfg.replications, cfg.seed, jobs);
    }
    const std::uint32_t m = truth.alphabet_size();
    const std::uint32_t r_star = true_order(truth);
    const std::vector<LoadedPath> paths = load_paths(cfg.paths_dir, m);
    std::vector<std::vector<ReplicationRow>> per_rep(paths.size());
    parallel_for(paths.size(), jobs, [&](std::size_t k) {
        per_rep[k] = evaluate_path(paths[k].path.symbols, m, r_star, pens, cfg.cutoff, cfg.n_grid,
                                   paths[k].replication, paths[k].path.seed);
    });
    return assemble_consistency(std::move(per_rep), pens, cfg.cutoff, cfg.n_grid, r_star, m);
}

std::string estimates_csv(const ConsistencyResult& res) {
    std::string out = std::string(kEstimateHeader) + "\n";
    for (const auto& row : res.rows) {
        out += std::to_string(row.n) + "," + csv_field(res.penalty_labels[row.penalty_index]) + "," +
               csv_field(res.cutoff_label) + "," + std::to_string(row.replication) + "," +
               std::to_string(row.chosen_order) + "," + std::to_string(row.true_order) + "," +
               format_number(row.lil_stat) + "," + std::to_string(row.seed) + "\n";
    }
    return out;
}

std::string scores_csv(const ConsistencyResult& res) {
    std::string out = "n,penalty,replication,order,loglik,penalty_value,score\n";
    for (const auto& row : res.rows) {
        for (const auto& s : row.estimate.table) {
            out += std::to_string(row.n) + "," + csv_field(res.penalty_labels[row.penalty_index]) + "," +
                   std::to_string(row.replication) + "," + std::to_string(s.order) + "," + format_number(s.loglik) +
                   "," + format_number(s.penalty) + "," + format_number(s.score) + "\n";
        }
    }
    return out;
}

// Rows ordered by n, then penalty index.
std::string recovery_csv(const ConsistencyResult& res, const std::vector<std::uint64_t>& n_grid) {
    std::string out = "penalty,cutoff,n,kappa,replications,recovered,under,over,recovery_rate\n";
    const std::size_t pens = res.penalty_labels.size();
    for (std::size_t j = 0; j < n_grid.size(); ++j) {
        for (std::size_t p = 0; p < pens; ++p) {
            const RecoveryRow& r = res.recovery[p * n_grid.size() + j];
            out += csv_field(res.penalty_labels[p]) + "," + csv_field(res.cutoff_label) + "," + std::to_string(r.n) +
                   "," + std::to_string(r.kappa) + "," + std::to_string(r.replications) + "," +
                   std::to_string(r.recovered) + "," + std::to_string(r.under) + "," + std::to_string(r.over) + "," +
                   format_number(r.recovery_rate()) + "\n";
        }
    }
    return out;
}

ordered_json check_entry(const std::string& name, bool guaranteed, ordered_json parameters, double empirical,
                         double bound, double margin, bool pass, ordered_json detail = ordered_json::object()) {
    ordered_json e;
    e["name"] = name;
    e["guaranteed"] = guaranteed;
    e["parameters"] = std::move(parameters);
    e["empirical"] = round12(empirical);
    e["bound"] = round12(bound);
    e["margin"] = round12(margin);
    e["pass"] = pass;
    e["detail"] = std::move(detail);
    return e;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int cmd_simulate(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log) {
    const MarkovModel truth = load_truth(cfg);
    const std::uint64_t n = cfg.n_grid.back();
    const fs::path dir = fs::path(cfg.out) / "paths";
    ensure_dir(dir);

    std::vector<std::string> texts(cfg.replications);
    std::vector<std::uint64_t> seeds(cfg.replications);
    parallel_for(cfg.replications, jobs, [&](std::size_t k) {
        seeds[k] = derive_seed(cfg.seed, k);
        texts[k] = format_path(sample_path(truth, n, seeds[k]), truth.alphabet_size());
    });
    std::string manifest = "replication,seed,n,file\n";
    for (std::uint32_t k = 0; k < cfg.replications; ++k) {
        write_file(dir / path_file_name(k), texts[k]);
        manifest += std::to_string(k) + "," + std::to_string(seeds[k]) + "," + std::to_string(n) + "," +
                    path_file_name(k) + "\n";
    }
    write_file(dir / "manifest.csv", manifest);
    log << "simulate: wrote " << cfg.replications << " path(s) of length " << n << " to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_estimate(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log) {
    const MarkovModel truth = load_truth(cfg);
    if (cfg.penalties.size() > 1) throw ParseError("config field 'penalty': estimate takes exactly one penalty");
    const auto pens = penalties_for(cfg, truth.alphabet_size());
    const ConsistencyResult res = run_estimates(cfg, truth, pens, jobs);

    ensure_dir(cfg.out);
    write_file(fs::path(cfg.out) / "estimates.csv", estimates_csv(res));
    write_file(fs::path(cfg.out) / "scores.csv", scores_csv(res));
    write_file(fs::path(cfg.out) / "recovery.csv", recovery_csv(res, cfg.n_grid));
    for (const auto& r : res.recovery) {
        log << "estimate: n=" << r.n << " penalty=" << res.penalty_labels[r.penalty_index]
            << " recovery=" << format_number(r.recovery_rate()) << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log) {
    const MarkovModel truth = load_truth(cfg);
    if (cfg.penalties.size() < 2) throw ParseError("config field 'penalties': sweep needs at least two penalties");
    const std::uint32_t m = truth.alphabet_size();
    const ConsistencyResult res = run_estimates(cfg, truth, cfg.penalties, jobs);

    std::string values = "n,r";
    for (const auto& label : res.penalty_labels) values += "," + csv_field(label);
    values += "\n";
    for (std::uint64_t n : cfg.n_grid) {
        const std::uint32_t kappa = cutoff_value(cfg.cutoff, static_cast<double>(n), m);
        for (std::uint32_t r = 0; r < kappa; ++r) {
            values += std::to_string(n) + "," + std::to_string(r);
            for (const auto& p : cfg.penalties) values += "," + format_number(penalty_value(p, static_cast<double>(n), r, m));
            values += "\n";
        }
    }

    ensure_dir(cfg.out);
    write_file(fs::path(cfg.out) / "sweep_estimates.csv", estimates_csv(res));
    write_file(fs::path(cfg.out) / "sweep_recovery.csv", recovery_csv(res, cfg.n_grid));
    write_file(fs::path(cfg.out) / "penalty_values.csv", values);
    for (const auto& r : res.recovery) {
        log << "sweep: n=" << r.n << " penalty=" << res.penalty_labels[r.penalty_index]
            << " recovery=" << format_number(r.recovery_rate()) << "\n";
    }
    return kExitOk;
}

int cmd_verify(const ExperimentConfig& cfg, unsigned jobs, std::ostream& log) {
    if (cfg.checks.empty()) throw ParseError("config field 'checks': select at least one check");
    const MarkovModel truth = load_truth(cfg);
    const std::uint32_t r_star = true_order(truth);
    const BoundParams params = BoundParams::from_eta(cfg.eta);
    const CheckSizes& sz = cfg.sizes;
    ensure_dir(cfg.out);

    // Each check draws from its own stream so the selection does not change results.
    auto check_seed = [&](const std::string& name) {
        const auto& names = known_checks();
        return derive_seed(cfg.seed, static_cast<std::uint64_t>(std::find(names.begin(), names.end(), name) -
                                                                 names.begin()));
    };

    ordered_json entries = ordered_json::array();
    for (const auto& name : cfg.checks) {
        if (name == "bernstein_norm") {
            const InstanceBatch b = bernstein_norm_batch(sz.instance_checks, sz.instance_max_n, check_seed(name), cfg.inject_fault);
            entries.push_back(check_entry(
                "bernstein_norm", true,
                {{"instances", sz.instance_checks}, {"max_n", sz.instance_max_n}, {"inject_fault", cfg.inject_fault}},
                b.worst_ratio, 1.0, 1e-9, b.violations == 0,
                {{"evaluated", b.instances}, {"violations", b.violations}}));
        } else if (name == "norm_control") {
            const InstanceBatch b = norm_control_batch(sz.instance_checks, cfg.eta, cfg.rho, check_seed(name));
            entries.push_back(check_entry(
                "norm_control", true, {{"instances", sz.instance_checks}, {"eta", round12(cfg.eta)}, {"rho", cfg.rho}},
                b.worst_ratio, 1.0, 1e-9, b.violations == 0 && b.instances > 0,
                {{"evaluated", b.instances}, {"attempts", b.attempts}, {"violations", b.violations},
                 {"C3", round12(params.C3)}, {"C4", round12(params.C4)}}));
        } else if (name == "bernstein") {
            const std::uint32_t r = std::max<std::uint32_t>(r_star, 1);
            const MarkovModel cand = perturbed_candidate(truth, r);
            const MixtureKernel mix = mixture_kernel(cand, truth, r);
            const double R = 1.05 * expected_bernstein_norm(truth, mix, sz.mc_n);
            std::vector<double> alphas;
            for (int k = 1; k <= 10; ++k) alphas.push_back(0.5 * k * std::sqrt(R));
            const BernsteinMcReport rep =
                bernstein_mc_check(truth, cand, r, sz.mc_n, alphas, R, sz.mc_replications, check_seed(name), jobs);
            std::string csv = "alpha,empirical,bound,margin,pass\n";
            for (const auto& row : rep.rows) {
                entries.push_back(check_entry("bernstein_mc", true,
                                              {{"alpha", round12(row.alpha)}, {"R", round12(R)}, {"K", round12(rep.K)},
                                               {"n", sz.mc_n}, {"r", r}, {"replications", sz.mc_replications}},
                                              row.empirical, row.bound, row.margin, row.pass));
                csv += format_number(row.alpha) + "," + format_number(row.empirical) + "," + format_number(row.bound) +
                       "," + format_number(row.margin) + "," + (row.pass ? "true" : "false") + "\n";
            }
            write_file(fs::path(cfg.out) / "bernstein_mc.csv", csv);
        } else if (name == "deviation") {
            const std::uint32_t r = r_star + 1;
            std::vector<double> eps;
            for (int k = 0; k <= 20; ++k) eps.push_back(k);
            const DeviationTailReport rep = deviation_tail_mc(truth, r, sz.deviation_n, eps, sz.deviation_replications,
                                                              cfg.eta, cfg.rho, check_seed(name), jobs);
            bool monotone = true;
            std::string csv = "eps,frequency\n";
            for (std::size_t k = 0; k < rep.rows.size(); ++k) {
                if (k > 0 && rep.rows[k].frequency > rep.rows[k - 1].frequency) monotone = false;
                csv += format_number(rep.rows[k].eps) + "," + format_number(rep.rows[k].frequency) + "\n";
            }
            write_file(fs::path(cfg.out) / "deviation_tail.csv", csv);
            const bool pass = monotone && rep.fit.points >= 2 && rep.fit.slope < 0.0 && rep.fit.r_squared >= 0.9;
            entries.push_back(check_entry(
                "deviation_tail", false,
                {{"n", sz.deviation_n}, {"r", r}, {"replications", sz.deviation_replications},
                 {"eta", round12(cfg.eta)}, {"rho", cfg.rho}},
                rep.fit.slope, 0.0, 0.0, pass,
                {{"r_squared", round12(rep.fit.r_squared)}, {"points", rep.fit.points},
                 {"f_frequency", round12(rep.f_frequency)}, {"monotone", monotone}}));
        } else if (name == "lil") {
            std::vector<std::uint64_t> cps;
            for (std::uint32_t k = sz.lil_min_log2; k <= sz.lil_max_log2; ++k) cps.push_back(std::uint64_t{1} << k);
            const LilSummary sum = lil_trajectory_mc(truth, cps, cfg.cutoff, sz.lil_seeds, check_seed(name), jobs);
            std::string csv = "n,mean_normalized\n";
            for (std::size_t j = 0; j < cps.size(); ++j) {
                csv += std::to_string(cps[j]) + "," + format_number(sum.mean[j]) + "\n";
            }
            write_file(fs::path(cfg.out) / "lil_series.csv", csv);
            entries.push_back(check_entry(
                "lil_trend", false,
                {{"min_log2", sz.lil_min_log2}, {"max_log2", sz.lil_max_log2}, {"seeds", sz.lil_seeds},
                 {"cutoff", cfg.cutoff.label()}},
                sum.slope, 0.01, 0.0, sum.slope <= 0.01 && std::isfinite(sum.max), {{"max", round12(sum.max)}}));
        } else if (name == "typicality") {
            const double small = event_F_frequency(truth, sz.typicality_small_n, cfg.eta, cfg.rho,
                                                   sz.typicality_replications, check_seed(name), jobs);
            const double large = event_F_frequency(truth, sz.typicality_large_n, cfg.eta, cfg.rho,
                                                   sz.typicality_replications, derive_seed(check_seed(name), 1), jobs);
            entries.push_back(check_entry(
                "typicality_trend", false,
                {{"small_n", sz.typicality_small_n}, {"large_n", sz.typicality_large_n},
                 {"replications", sz.typicality_replications}, {"eta", round12(cfg.eta)}, {"rho", cfg.rho}},
                large, small, 0.0, large >= small));
        } else if (name == "brackets") {
            const std::uint32_t r = std::max<std::uint32_t>(r_star, 1);
            const std::uint64_t n = std::max<std::uint64_t>(sz.mc_n / 2, r + 1);
            const double sigma = 0.05;
            const BracketBatch b =
                bracket_batch(truth, r, sz.bracket_kernels, sz.bracket_paths, n, sigma, params, check_seed(name));
            const std::uint64_t bad = b.order_violations + b.gap_violations + b.path_violations + b.phi_violations;
            entries.push_back(check_entry(
                "brackets_property", true,
                {{"kernels", sz.bracket_kernels}, {"paths", sz.bracket_paths}, {"n", n}, {"r", r},
                 {"sigma", sigma}},
                static_cast<double>(bad), 0.0, 0.0, b.pass(),
                {{"beta", round12(b.beta)}, {"order_violations", b.order_violations},
                 {"gap_violations", b.gap_violations}, {"path_violations", b.path_violations},
                 {"phi_violations", b.phi_violations}}));
            const BracketCount c =
                bracket_count_check(truth, r, n, sigma, params, sz.bracket_samples, derive_seed(check_seed(name), 1));
            entries.push_back(check_entry(
                "brackets_entropy", true,
                {{"samples", sz.bracket_samples}, {"n", n}, {"r", r}, {"sigma", sigma}, {"C5", round12(params.C5)}},
                c.log_distinct, c.entropy, 0.0, c.samples > 0 && c.log_distinct <= c.entropy,
                {{"accepted", c.samples}, {"distinct", c.distinct}}));
        }
    }

    bool guaranteed_ok = true;
    bool all_ok = true;
    for (const auto& e : entries) {
        const bool pass = e["pass"].get<bool>();
        all_ok = all_ok && pass;
        if (e["guaranteed"].get<bool>()) guaranteed_ok = guaranteed_ok && pass;
        log << "verify: " << e["name"].get<std::string>() << " " << (pass ? "pass" : "FAIL") << "\n";
    }
    ordered_json report;
    report["model"] = truth.id();
    report["seed"] = cfg.seed;
    report["eta"] = round12(cfg.eta);
    report["rho"] = cfg.rho;
    report["inject_fault"] = cfg.inject_fault;
    report["checks"] = std::move(entries);
    report["guaranteed_checks_pass"] = guaranteed_ok;
    report["all_pass"] = all_ok;
    write_file(fs::path(cfg.out) / "verify_report.json", report.dump(2) + "\n");
    return guaranteed_ok ? kExitOk : kExitFailure;
}

int run_command(const std::string& name, const std::string& config_path, const RunOverrides& overrides,
                std::ostream& log, std::ostream& err) {
    static const std::map<std::string, int (*)(const ExperimentConfig&, unsigned, std::ostream&)> commands = {
        {"simulate", cmd_simulate}, {"estimate", cmd_estimate}, {"sweep", cmd_sweep}, {"verify", cmd_verify}};
    const auto it = commands.find(name);
    if (it == commands.end()) {
        err << "error: unknown command '" << name << "'\n";
        return kExitFailure;
    }
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (overrides.out) cfg.out = *overrides.out;
        return it->second(cfg, std::max(1u, overrides.jobs), log);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace morder
