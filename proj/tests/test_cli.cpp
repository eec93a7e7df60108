#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "morder/commands.hpp"
#include "morder/config.hpp"
#include "morder/error.hpp"
#include "morder/estimator.hpp"

using namespace morder;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string f;
    while (std::getline(in, f, sep)) out.push_back(f);
    return out;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("morder_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        write("chain.model", "alphabet_size = 2\norder = 1\nkernel =\n0.7 0.3\n0.2 0.8\n");
        write("constant.model", "alphabet_size = 2\norder = 0\nkernel =\n1 0\n");
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    int run(const std::string& cmd, const fs::path& cfg, RunOverrides ov = {}) {
        std::ostringstream log, err;
        const int code = run_command(cmd, cfg.string(), ov, log, err);
        last_err_ = err.str();
        return code;
    }

    fs::path dir_;
    std::string last_err_;
};

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

TEST(Config, DefaultsAndLists) {
    const fs::path tmp = fs::temp_directory_path() / "morder_cfg_defaults";
    fs::create_directories(tmp);
    std::ofstream(tmp / "m.model") << "alphabet_size = 2\norder = 0\nkernel =\n0.5 0.5\n";
    const auto cfg = parse_config("model = m.model  # trailing comment\nn_grid = 2^4, 100 1000\n", tmp.string());
    EXPECT_EQ(cfg.n_grid, (std::vector<std::uint64_t>{16, 100, 1000}));
    EXPECT_EQ(cfg.cutoff.label(), "sublogn");
    EXPECT_TRUE(cfg.penalties.empty());
    EXPECT_EQ(cfg.replications, 1u);
    EXPECT_EQ(cfg.model_path, (tmp / "m.model").lexically_normal().string());
    fs::remove_all(tmp);
}

TEST(Config, ErrorsNameTheField) {
    const fs::path tmp = fs::temp_directory_path() / "morder_cfg_errors";
    fs::create_directories(tmp);
    std::ofstream(tmp / "m.model") << "alphabet_size = 2\norder = 0\nkernel =\n0.5 0.5\n";
    const std::string base = "model = m.model\n";
    const std::vector<std::pair<std::string, std::string>> cases = {
        {base + "n_grid = 100 50\n", "n_grid"},
        {base + "n_grid = 100\nreplications = 0\n", "replications"},
        {base + "n_grid = 100\nfoo = 1\n", "foo"},
        {base + "n_grid = 100\nseed = 1\nseed = 2\n", "seed"},
        {base + "n_grid = 100\npenalty = bic\npenalties = bic, loglog:5\n", "penalties"},
        {base + "n_grid = 100\npenalty = wrong\n", "penalty"},
        {base + "n_grid = 100\ncutoff = wrong\n", "cutoff"},
        {base + "n_grid = 100\neta = 1.5\n", "eta"},
        {base + "n_grid = 100\nchecks = bernstein_norm, nope\n", "checks"},
        {"model = missing.model\nn_grid = 100\n", "model"},
        {base, "n_grid"},
        {base + "n_grid = 100\npaths = no_such_dir\n", "paths"},
    };
    for (const auto& [text, field] : cases) {
        try {
            parse_config(text, tmp.string());
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find("'" + field + "'"), std::string::npos) << e.what();
        }
    }
    fs::remove_all(tmp);
}

TEST(Config, ChecksAllAndCanonicalOrder) {
    const fs::path tmp = fs::temp_directory_path() / "morder_cfg_checks";
    fs::create_directories(tmp);
    std::ofstream(tmp / "m.model") << "alphabet_size = 2\norder = 0\nkernel =\n0.5 0.5\n";
    EXPECT_EQ(parse_config("model = m.model\nn_grid = 10\nchecks = all\n", tmp.string()).checks, known_checks());
    EXPECT_EQ(parse_config("model = m.model\nn_grid = 10\nchecks = lil bernstein_norm lil\n", tmp.string()).checks,
              (std::vector<std::string>{"bernstein_norm", "lil"}));
    fs::remove_all(tmp);
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(load_config("/no/such/config.cfg"), IoError); }

TEST_F(CliTest, SimulateOneFileOfRequestedLength) {
    const auto cfg = write("sim.cfg", "model = chain.model\nn_grid = 100\nreplications = 1\nseed = 5\nout = o\n");
    ASSERT_EQ(run("simulate", cfg), kExitOk) << last_err_;
    const auto files = lines(slurp(dir_ / "o/paths/manifest.csv"));
    ASSERT_EQ(files.size(), 2u);
    const std::string text = slurp(dir_ / "o/paths" / split(files[1]).back());
    std::uint32_t m = 0;
    EXPECT_EQ(parse_path(text, &m).symbols.size(), 100u);
}

TEST_F(CliTest, SimulateIsByteIdenticalAndSeedsFollowDerivation) {
    const auto cfg = write("sim.cfg", "model = chain.model\nn_grid = 500\nreplications = 6\nseed = 31\nout = o\n");
    ASSERT_EQ(run("simulate", cfg), kExitOk);
    const std::string first = slurp(dir_ / "o/paths/manifest.csv") + slurp(dir_ / "o/paths/path_0003.txt");
    ASSERT_EQ(run("simulate", cfg, RunOverrides{std::nullopt, std::nullopt, 3}), kExitOk);
    EXPECT_EQ(slurp(dir_ / "o/paths/manifest.csv") + slurp(dir_ / "o/paths/path_0003.txt"), first);

    const auto rows = lines(slurp(dir_ / "o/paths/manifest.csv"));
    EXPECT_EQ(rows[0], "replication,seed,n,file");
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto f = split(rows[k]);
        const std::uint64_t i = k - 1;
        EXPECT_EQ(std::stoull(f[1]), 31 ^ mix64((i + 1) * 0x9E3779B97F4A7C15ULL));
    }
}

TEST_F(CliTest, EstimateHeaderAndConstantPaths) {
    write("sim.cfg", "model = constant.model\nn_grid = 64, 256\nreplications = 3\nout = o\n");
    ASSERT_EQ(run("simulate", dir_ / "sim.cfg"), kExitOk);
    const auto cfg = write("est.cfg", "model = constant.model\nn_grid = 64, 256\npaths = o/paths\nout = e\n");
    ASSERT_EQ(run("estimate", cfg), kExitOk) << last_err_;
    const auto rows = lines(slurp(dir_ / "e/estimates.csv"));
    EXPECT_EQ(rows[0], "n,penalty,cutoff,replication,chosen_order,true_order,lil_stat,seed");
    ASSERT_EQ(rows.size(), 1u + 2 * 3);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(split(rows[k])[4], "0");
    EXPECT_EQ(lines(slurp(dir_ / "e/scores.csv"))[0], "n,penalty,replication,order,loglik,penalty_value,score");
    EXPECT_EQ(lines(slurp(dir_ / "e/recovery.csv"))[0],
              "penalty,cutoff,n,kappa,replications,recovered,under,over,recovery_rate");
}

TEST_F(CliTest, EstimateMatchesLibraryExperiment) {
    const auto cfg = write("est.cfg",
                           "model = chain.model\nn_grid = 256, 1024, 4096\npenalty = loglog:5\nreplications = 10\n"
                           "seed = 4\nout = e\n");
    ASSERT_EQ(run("estimate", cfg), kExitOk) << last_err_;
    const auto lib = consistency_experiment(load_model((dir_ / "chain.model").string()), PenaltySpec::loglog(5),
                                            CutoffSpec::sub_log(), {256, 1024, 4096}, 10, 4);
    const auto rows = lines(slurp(dir_ / "e/estimates.csv"));
    ASSERT_EQ(rows.size(), lib.rows.size() + 1);
    for (std::size_t k = 0; k < lib.rows.size(); ++k) {
        const auto f = split(rows[k + 1]);
        EXPECT_EQ(std::stoull(f[0]), lib.rows[k].n);
        EXPECT_EQ(std::stoul(f[3]), lib.rows[k].replication);
        EXPECT_EQ(std::stoul(f[4]), lib.rows[k].chosen_order);
        EXPECT_EQ(f[6], format_number(lib.rows[k].lil_stat));
        EXPECT_EQ(std::stoull(f[7]), lib.rows[k].seed);
    }
    const auto rec = lines(slurp(dir_ / "e/recovery.csv"));
    for (std::size_t j = 0; j < lib.recovery.size(); ++j) {
        EXPECT_EQ(split(rec[j + 1])[8], format_number(lib.recovery[j].recovery_rate()));
    }
}

TEST_F(CliTest, EstimateRejectsSeveralPenalties) {
    const auto cfg = write("est.cfg", "model = chain.model\nn_grid = 256\npenalties = bic, loglog:5\nout = e\n");
    EXPECT_EQ(run("estimate", cfg), kExitFailure);
    EXPECT_NE(last_err_.find("'penalty'"), std::string::npos) << last_err_;
}

TEST_F(CliTest, SweepMatchesIndividualEstimates) {
    const std::string common = "model = chain.model\nn_grid = 2000\nreplications = 1\nseed = 9\n";
    ASSERT_EQ(run("sweep", write("sw.cfg", common + "penalties = loglog:5, bic\nout = s\n")), kExitOk) << last_err_;
    ASSERT_EQ(run("estimate", write("a.cfg", common + "penalty = loglog:5\nout = a\n")), kExitOk);
    ASSERT_EQ(run("estimate", write("b.cfg", common + "penalty = bic\nout = b\n")), kExitOk);
    const auto sweep = lines(slurp(dir_ / "s/sweep_estimates.csv"));
    const auto a = lines(slurp(dir_ / "a/estimates.csv"));
    const auto b = lines(slurp(dir_ / "b/estimates.csv"));
    ASSERT_EQ(sweep.size(), 3u);
    EXPECT_EQ(sweep[0], a[0]);
    EXPECT_EQ(sweep[1], a[1]);
    EXPECT_EQ(sweep[2], b[1]);
}

TEST_F(CliTest, SweepPenaltyColumnsAndOrdering) {
    const auto cfg = write("sw.cfg",
                           "model = chain.model\nn_grid = 2^12, 2^14, 2^16\npenalties = loglog:1, bic\n"
                           "replications = 3\nout = s\n");
    ASSERT_EQ(run("sweep", cfg), kExitOk) << last_err_;
    const auto values = lines(slurp(dir_ / "s/penalty_values.csv"));
    EXPECT_EQ(values[0], "n,r,loglog:1,bic");
    for (std::size_t k = 1; k < values.size(); ++k) {
        const auto f = split(values[k]);
        const double n = std::stod(f[0]);
        // 1 * log log n < 0.5 * (m - 1) * log n on this grid
        ASSERT_LT(std::log(std::log(n)), 0.5 * std::log(n));
        EXPECT_LT(std::stod(f[2]), std::stod(f[3]));
    }
    const auto rows = lines(slurp(dir_ / "s/sweep_estimates.csv"));
    std::uint64_t prev = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const std::uint64_t n = std::stoull(split(rows[k])[0]);
        EXPECT_GE(n, prev);
        prev = n;
    }
    EXPECT_EQ(run("sweep", write("one.cfg", "model = chain.model\nn_grid = 100\npenalty = bic\nout = s\n")),
              kExitFailure);
}

TEST_F(CliTest, VerifyNormCheckPassesAndFaultFails) {
    const std::string base = "model = chain.model\nn_grid = 100\nchecks = bernstein_norm\ninstance_checks = 10\n";
    ASSERT_EQ(run("verify", write("v.cfg", base + "out = v\n")), kExitOk) << last_err_;
    const auto report = nlohmann::json::parse(slurp(dir_ / "v/verify_report.json"));
    for (const char* key : {"model", "seed", "eta", "rho", "inject_fault", "checks", "guaranteed_checks_pass", "all_pass"}) {
        EXPECT_TRUE(report.contains(key)) << key;
    }
    ASSERT_EQ(report["checks"].size(), 1u);
    for (const char* key : {"name", "guaranteed", "parameters", "empirical", "bound", "margin", "pass", "detail"}) {
        EXPECT_TRUE(report["checks"][0].contains(key)) << key;
    }
    EXPECT_TRUE(report["checks"][0]["pass"].get<bool>());

    EXPECT_EQ(run("verify", write("f.cfg", base + "inject_fault = true\nout = f\n")), kExitFailure);
    const auto bad = nlohmann::json::parse(slurp(dir_ / "f/verify_report.json"));
    EXPECT_FALSE(bad["checks"][0]["pass"].get<bool>());
    EXPECT_FALSE(bad["guaranteed_checks_pass"].get<bool>());
}

TEST_F(CliTest, VerifyNeedsChecks) {
    EXPECT_EQ(run("verify", write("v.cfg", "model = chain.model\nn_grid = 100\nout = v\n")), kExitFailure);
    EXPECT_NE(last_err_.find("'checks'"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run("simulate", dir_ / "missing.cfg"), kExitIo);
    EXPECT_EQ(run("simulate", write("bad.cfg", "model = chain.model\n")), kExitFailure);
    // A regular file where the output directory should go.
    write("blocker", "x");
    EXPECT_EQ(run("simulate", write("io.cfg", "model = chain.model\nn_grid = 10\nout = blocker\n")), kExitIo);
    EXPECT_EQ(run("frobnicate", write("ok.cfg", "model = chain.model\nn_grid = 10\n")), kExitFailure);
}

TEST_F(CliTest, BinaryExitCodesAndOverrides) {
    const std::string tool = MORDER_TOOL_PATH;
    const auto sh = [](const std::string& c) {
        const int status = std::system((c + " > /dev/null 2>&1").c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    const auto cfg = write("sim.cfg", "model = chain.model\nn_grid = 100\nreplications = 2\nout = o\n");
    EXPECT_EQ(sh(tool + " --help"), 0);
    EXPECT_EQ(sh(tool + " simulate"), 1);
    EXPECT_EQ(sh(tool + " simulate --config " + (dir_ / "nope.cfg").string()), 2);
    EXPECT_EQ(sh(tool + " simulate --config " + cfg.string() + " --jobs 0"), 1);
    EXPECT_EQ(sh(tool + " simulate --config " + cfg.string() + " --seed 77 --jobs 2 --out " + (dir_ / "x").string()), 0);
    const auto rows = lines(slurp(dir_ / "x/paths/manifest.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(std::stoull(split(rows[1])[1]), derive_seed(77, 0));
}
