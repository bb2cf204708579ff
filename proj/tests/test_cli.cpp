#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mfg/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + MFG_SOLVE_BIN + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) r.out += buf;
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path workdir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("mfg_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string source(const std::string& rel) { return std::string(MFG_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST(Cli, SolveWithoutInteractionConvergesInTwoIterations) {
    const auto dir = workdir("xi0");
    const auto r = run("solve --config baseline --xi 0 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(first_line(dir / "equilibrium.csv"), "t,m_star");
    const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_LE(j["iterations"].get<int>(), 2);
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_EQ(j["model"]["xi"].get<double>(), 0.0);
}

TEST(Cli, LowAndHighInitialisationsGiveLowAndHighEquilibria) {
    const auto lo = workdir("low"), hi = workdir("high");
    ASSERT_EQ(run("solve --config paper_baseline --init const:2.72e-7 --out " + lo.string()).code, 0);
    ASSERT_EQ(run("solve --config baseline --init 'const:exp(15)' --out " + hi.string()).code, 0);
    const auto m_lo = mfg::io::read_equilibrium(lo / "equilibrium.csv");
    const auto m_hi = mfg::io::read_equilibrium(hi / "equilibrium.csv");
    ASSERT_EQ(m_lo.size(), 11u);
    EXPECT_GT(std::log(m_hi.values.back()) - std::log(m_lo.values.back()), 0.1);
}

TEST(Cli, OutputsAreReproducible) {
    const auto a = workdir("rep_a"), b = workdir("rep_b");
    for (const auto& d : {a, b})
        ASSERT_EQ(run("solve --config baseline --scheme banach --out " + d.string()).code, 0);
    EXPECT_EQ(slurp(a / "equilibrium.csv"), slurp(b / "equilibrium.csv"));
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(Cli, OutputDirectoryPrecedence) {
    const auto env_dir = workdir("env"), flag_dir = workdir("flag");
    ASSERT_EQ(run("solve --config baseline --xi 0", "MFG_SOLVE_OUT=" + env_dir.string()).code, 0);
    EXPECT_TRUE(fs::exists(env_dir / "equilibrium.csv"));
    fs::remove(env_dir / "equilibrium.csv");
    ASSERT_EQ(run("solve --config baseline --xi 0 --out " + flag_dir.string(), "MFG_SOLVE_OUT=" + env_dir.string()).code, 0);
    EXPECT_TRUE(fs::exists(flag_dir / "equilibrium.csv"));
    EXPECT_FALSE(fs::exists(env_dir / "equilibrium.csv"));
}

TEST(Cli, FieldDumpsWhenRequested) {
    const auto dir = workdir("dumps");
    const auto ini = dir / "dump.ini";
    std::ofstream(ini) << "[model]\nxi = 0\n[grid]\nn_x = 101\n[output]\ndump_fields = true\ndump_distribution = true\n";
    ASSERT_EQ(run("solve --config " + ini.string() + " --out " + dir.string()).code, 0);
    EXPECT_EQ(first_line(dir / "fields.csv"), "t,x,V,alpha");
    EXPECT_EQ(first_line(dir / "distribution.csv"), "t,x,mass");
}

TEST(Cli, NonConvergenceExitsTwo) {
    const auto dir = workdir("nonconv");
    const auto ini = dir / "short.ini";
    std::ofstream(ini) << "[iteration]\nmax_iter = 1\n";
    const auto r = run("solve --config " + ini.string() + " --out " + dir.string());
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("NON_CONVERGED"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "equilibrium.csv"));
}

TEST(Cli, ConfigurationErrorsExitOne) {
    EXPECT_EQ(run("solve --config " + source("tests/data/malformed.ini")).code, 1);
    const auto z = run("verify --config " + source("tests/data/bad_zeta.ini"));
    EXPECT_EQ(z.code, 1);
    EXPECT_NE(z.out.find("zeta"), std::string::npos);
    EXPECT_EQ(run("solve --config /nonexistent.ini").code, 1);
    EXPECT_EQ(run("solve --init sideways").code, 1);
    EXPECT_EQ(run("solve --xi 1,2").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, VerifyPassesOnEquilibriumAndFailsOnPerturbedFile) {
    const auto dir = workdir("verify");
    ASSERT_EQ(run("solve --config baseline --init 'const:exp(15)' --out " + dir.string()).code, 0);
    const auto ok = run("verify --config baseline --out " + dir.string());
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_NE(ok.out.find("PASS concavity_in_x"), std::string::npos);
    EXPECT_NE(ok.out.find("PASS supermodularity_x_m"), std::string::npos);
    EXPECT_NE(ok.out.find("PASS monte_carlo"), std::string::npos);
    EXPECT_EQ(first_line(dir / "mc.csv"), "t,m_mc,se,m_pde,z_score");

    std::vector<double> t;
    auto m = mfg::io::read_equilibrium(dir / "equilibrium.csv", &t);
    for (auto& v : m.values) v *= 1.1;
    const auto bad = workdir("perturbed");
    mfg::io::write_equilibrium(bad / "equilibrium.csv", mfg::build_time_grid(1.0, 0.1), m);
    const auto r = run("verify --config baseline --out " + bad.string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_NE(r.out.find("FAIL monte_carlo"), std::string::npos);
}

TEST(Cli, VerifyWithoutEquilibriumChecksAssumptionsOnly) {
    const auto dir = workdir("verify_empty");
    const auto r = run("verify --config geometric --out " + dir.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("SKIP monte_carlo"), std::string::npos);
}

TEST(Cli, VerifyRejectsEquilibriumOfWrongLength) {
    const auto dir = workdir("verify_short");
    std::ofstream(dir / "equilibrium.csv") << "t,m_star\n0,1\n1,1\n";
    EXPECT_EQ(run("verify --config baseline --out " + dir.string()).code, 1);
}

TEST(Cli, SweepRestrictedToZeroHasNoRegion) {
    const auto dir = workdir("sweep0");
    const auto r = run("sweep --config baseline --xi 0 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("no multiplicity region"), std::string::npos);
    EXPECT_EQ(first_line(dir / "report.csv").substr(0, 20), "xi,gap,m_low(t_0),m_");
    EXPECT_TRUE(fs::exists(dir / "statics.csv"));
    EXPECT_EQ(slurp(dir / "region.svg").rfind("<svg", 0), 0u);
}

TEST(Cli, GeometricSweepRegionIsWider) {
    const auto rev = workdir("sweep_rev"), geo = workdir("sweep_geo");
    const auto r = run("sweep --config baseline --out " + rev.string());
    const auto g = run("sweep --config geometric --out " + geo.string());
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_EQ(g.code, 0) << g.out;
    const auto interval = [](const std::string& text) {
        const auto a = text.find('['), b = text.find(',', a), c = text.find(']', b);
        return std::pair{std::stod(text.substr(a + 1, b - a - 1)), std::stod(text.substr(b + 1, c - b - 1))};
    };
    ASSERT_NE(r.out.find("multiplicity region ["), std::string::npos);
    ASSERT_NE(g.out.find("multiplicity region ["), std::string::npos);
    const auto [rl, rh] = interval(r.out);
    const auto [gl, gh] = interval(g.out);
    EXPECT_LE(rl, 3.8);
    EXPECT_GE(rh, 3.8);
    EXPECT_LE(gl, rl);
    EXPECT_GE(gh, rh);
    EXPECT_GT(gh - gl, rh - rl);
    // the baseline report carries a basin threshold at ξ = 3.8
    std::ifstream rep(rev / "report.csv");
    std::string line;
    bool found = false;
    while (std::getline(rep, line))
        if (line.rfind("3.7999999999999998,", 0) == 0) {
            found = true;
            EXPECT_EQ(line.find("nan"), std::string::npos);
        }
    EXPECT_TRUE(found);
}
