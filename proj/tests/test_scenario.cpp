#include <spinbath/scenario.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <numbers>

using namespace spinbath;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"([model]
family = static_ising
delta = 4.0
couplings = 0.1, 0.05, 0.02

[initial]
bloch = 0.447, 0, 0.894
bath_seed = 3

[run]
t_max = 20
n_samples = 801

[output]
observables = sigma_z, sigma_x, entropy
theory_overlay = true
)";

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    if (pos == std::string::npos) throw std::logic_error("pattern not found: " + from);
    return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text)
{
    try {
        parse_scenario(text, "t");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path temp_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("spinbath_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(ParseScenario, Defaults)
{
    const auto sc = parse_scenario(kBase, "base");
    EXPECT_EQ(sc.name, "base");
    EXPECT_EQ(sc.model.family, Family::StaticIsing);
    EXPECT_EQ(sc.model.n_bath, 3);
    EXPECT_EQ(sc.bath_seed, 3u);
    EXPECT_EQ(sc.n_samples, 801u);
    EXPECT_DOUBLE_EQ(sc.dt(), 0.025);
    EXPECT_EQ(sc.method, "auto");
    EXPECT_DOUBLE_EQ(sc.tolerance, 1e-12);
    ASSERT_EQ(sc.observables.size(), 3u);
    EXPECT_TRUE(sc.theory_overlay);
    EXPECT_EQ(parse_scenario(replace(kBase, "0.1, 0.05, 0.02", "reference"), "p").model.n_bath, 14);
}

TEST(ParseScenario, SweepAndHeisenberg)
{
    std::string b = replace(kBase, "static_ising", "transverse_bath");
    b = replace(b, "couplings", "hx = 0.005, 0.5\ncouplings");
    const auto sc = parse_scenario(b, "b");
    EXPECT_EQ(sc.hx_sweep, (std::vector<double>{0.005, 0.5}));

    const auto d = parse_scenario(R"([model]
family = two_spin_heisenberg
j_central = 8
couplings = 0.1, 0.2
[initial]
state = up-down
[run]
t_max = 5
n_samples = 11
[output]
observables = sigma1_z, corr_zz, rho_coupled, entropy
)",
                                  "d");
    EXPECT_EQ(d.product_state, "up-down");
    EXPECT_EQ(d.model.j_central, 8.0);
}

TEST(ParseScenario, DiagnosticsNameTheKey)
{
    EXPECT_NE(error_of(replace(kBase, "delta = 4.0", "delta = four")).find("model.delta"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "delta = 4.0\n", "")).find("model.delta"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "t_max = 20", "t_max = -1")).find("run.t_max"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "n_samples = 801", "n_samples = 1")).find("run.n_samples"),
              std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "sigma_x", "sigma1_z")).find("output.observables"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "sigma_x", "spin")).find("output.observables"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "bath_seed", "seed")).find("initial.seed"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "[run]", "[runs]")).find("runs"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "static_ising", "ising")).find("model.family"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "delta = 4.0", "delta = 4.0\nhx = 0.1")).find("model.hx"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "delta = 4.0", "delta = 4.0\nn_bath = 4")).find("model.n_bath"),
              std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "0.447, 0, 0.894", "0, 0, 0")).find("initial.bloch"), std::string::npos);
    EXPECT_NE(error_of(replace(kBase, "[run]", "[run]\nmethod = euler")).find("run.method"), std::string::npos);
    EXPECT_THROW(load_scenario("/nonexistent/x.ini"), ConfigError);
}

TEST(RunScenario, ZeroCouplingsGivePureCosineAndNoEntropy)
{
    const auto dir = temp_dir("zero");
    const auto sc = parse_scenario(replace(kBase, "0.1, 0.05, 0.02", "0, 0, 0"), "zero");
    RunOptions opt;
    opt.out_dir = dir;
    const auto summary = run_scenario(sc, opt);
    ASSERT_EQ(summary.members.size(), 1u);
    const auto& m = summary.members[0];
    const auto& z = m.series.at("sigma_z");
    const auto& s = m.series.at("entropy");
    const double sigma0 = 0.894 / std::hypot(0.447, 0.894);
    const double sx = 0.447 / std::hypot(0.447, 0.894);
    for (std::size_t i = 0; i < z.size(); ++i) {
        EXPECT_NEAR(s.values[i], 0.0, 1e-12);
        EXPECT_NEAR(z.values[i], sigma0 * std::cos(8.0 * z.times[i]), 1e-12);
        EXPECT_NEAR(m.series.at("sigma_x").values[i], sx, 1e-12);
    }
    EXPECT_TRUE(fs::exists(summary.summary_file));
    for (const auto& [k, p] : m.files) EXPECT_TRUE(fs::exists(p)) << k;
}

TEST(RunScenario, CsvLayoutAndOverlay)
{
    const auto dir = temp_dir("csv");
    RunOptions opt;
    opt.out_dir = dir;
    const auto summary = run_scenario(parse_scenario(kBase, "csv"), opt);
    const std::string text = slurp(dir / "sigma_z.csv");
    EXPECT_EQ(text.rfind("# spinbath scenario: csv\n", 0), 0u);
    EXPECT_NE(text.find("# config: family = static_ising"), std::string::npos);
    EXPECT_NE(text.find("\ntime,sigma_z,theory_signal,theory_envelope\n"), std::string::npos);
    EXPECT_NE(text.find("\n0,0.89442719099991586,"), std::string::npos);  // 17 significant digits
    const auto series = read_series_csv(dir / "sigma_z.csv");
    EXPECT_EQ(series.size(), 801u);
    EXPECT_EQ(series.label, "sigma_z");
    EXPECT_EQ(series.values, summary.members[0].series.at("sigma_z").values);
    EXPECT_NE(slurp(dir / "entropy.csv").find("\ntime,entropy\n"), std::string::npos);
    const auto json = nlohmann::json::parse(slurp(summary.summary_file));
    EXPECT_EQ(json["method"], "exact_static_ising");
    EXPECT_EQ(json["members"][0]["files"]["sigma_z"], "sigma_z.csv");
    EXPECT_TRUE(json["members"][0]["metrics"].contains("envelope_deviation"));
}

TEST(RunScenario, MethodsAgree)
{
    const std::string base = replace(kBase, "t_max = 20", "t_max = 3");
    std::vector<std::vector<double>> z;
    for (const char* method : {"exact_static_ising", "polynomial", "dense_oracle"}) {
        RunOptions opt;
        opt.out_dir = temp_dir(std::string("method_") + method);
        const auto sc = parse_scenario(replace(base, "[run]", std::string("[run]\nmethod = ") + method), "m");
        const auto summary = run_scenario(sc, opt);
        EXPECT_EQ(summary.method, method);
        z.push_back(summary.members[0].series.at("sigma_z").values);
    }
    for (std::size_t i = 0; i < z[0].size(); ++i) {
        EXPECT_NEAR(z[1][i], z[0][i], 1e-10);
        EXPECT_NEAR(z[2][i], z[0][i], 1e-10);
    }
}

TEST(RunScenario, SweepMembersAndThreadsAreDeterministic)
{
    std::string b = replace(kBase, "static_ising", "transverse_bath");
    b = replace(b, "couplings", "hx = 0.1, 1.0\ncouplings");
    b = replace(b, "t_max = 20", "t_max = 5");
    const auto sc = parse_scenario(b, "sweep");
    RunOptions serial;
    serial.out_dir = temp_dir("sweep1");
    RunOptions parallel;
    parallel.out_dir = temp_dir("sweep2");
    parallel.threads = 2;
    const auto a = run_scenario(sc, serial);
    run_scenario(sc, parallel);
    ASSERT_EQ(a.members.size(), 2u);
    EXPECT_EQ(a.members[0].tag, "hx0.1");
    EXPECT_EQ(a.members[1].tag, "hx1");
    for (const char* f : {"sigma_z_hx0.1.csv", "sigma_z_hx1.csv", "entropy_hx1.csv"})
        EXPECT_EQ(slurp(serial.out_dir / f), slurp(parallel.out_dir / f)) << f;
}

TEST(RunScenario, SeedOverrideChangesBath)
{
    RunOptions a;
    a.out_dir = temp_dir("seed_a");
    RunOptions b = a;
    b.out_dir = temp_dir("seed_b");
    b.seed_override = 99;
    const auto sc = parse_scenario(kBase, "seed");
    EXPECT_EQ(run_scenario(sc, b).bath_seed, 99u);
    run_scenario(sc, a);
    EXPECT_NE(slurp(a.out_dir / "sigma_z.csv"), slurp(b.out_dir / "sigma_z.csv"));
}

TEST(RunScenario, TwoSpinObservables)
{
    const auto sc = parse_scenario(R"([model]
family = two_spin_heisenberg
j_central = 8
couplings = 0.1, 0.12, 0.05
[initial]
state = up-down
bath_seed = 2
[run]
t_max = 4
n_samples = 201
[output]
observables = sigma1_z, sigma2_z, corr_zz, corr_xx, corr_yy, rho_coupled, entropy
)",
                                   "two");
    RunOptions opt;
    opt.out_dir = temp_dir("two");
    std::size_t hook_calls = 0;
    double mz_drift = 0.0;
    opt.hook = [&](const std::string&, double, const StateVector& psi) {
        ++hook_calls;
        mz_drift = std::max(mz_drift, std::abs(total_magnetization_z(psi)));  // |ud> + random bath: not conserved 0
    };
    const auto summary = run_scenario(sc, opt);
    EXPECT_EQ(hook_calls, 201u);
    const auto& m = summary.members[0];
    EXPECT_DOUBLE_EQ(m.series.at("sigma1_z").values[0], 1.0);
    EXPECT_DOUBLE_EQ(m.series.at("sigma2_z").values[0], -1.0);
    EXPECT_DOUBLE_EQ(m.series.at("corr_zz").values[0], -1.0);
    EXPECT_NEAR(m.series.at("abs_s_t0").values[0], 0.5, 1e-15);
    EXPECT_NEAR(m.series.at("p_singlet").values[0], 0.5, 1e-15);
    // the singlet weight is conserved: the singlet does not couple to the bath
    for (double p : m.series.at("p_singlet").values) EXPECT_NEAR(p, 0.5, 1e-10);
    const std::string text = slurp(opt.out_dir / "rho_coupled.csv");
    EXPECT_NE(text.find("\ntime,p_singlet,p_t_minus,p_t_zero,p_t_plus,abs_s_tm,abs_s_t0,abs_s_tp,abs_tm_t0,"
                        "abs_tm_tp,abs_t0_tp\n"),
              std::string::npos);
}

TEST(Compare, SelfComparisonIsTight)
{
    const auto dir = temp_dir("compare");
    const TheoryParams p = TheoryParams::from_b2(0.073034125, 4.0);
    {
        std::ofstream out(dir / "synthetic.csv");
        out << "# synthetic\ntime,sigma_z\n";
        for (int i = 0; i < 40000; ++i) {
            const double t = i * 0.025;
            out << detail::format_real(t) << ',' << detail::format_real(envelope_static(t, p, 0.9) * std::cos(8 * t))
                << '\n';
        }
    }
    CompareOptions opt;
    const double dev = compare(dir / "synthetic.csv", EnvelopeLaw::StaticQuarter, p, opt);
    EXPECT_LT(dev, 0.01);
    EXPECT_TRUE(fs::exists(dir / "synthetic_vs_static.csv"));
    EXPECT_GT(compare(dir / "synthetic.csv", EnvelopeLaw::DynamicHalf, p, opt), 0.5);
    EXPECT_THROW(compare(dir / "missing.csv", EnvelopeLaw::DynamicHalf, p, opt), std::runtime_error);
}

TEST(Cli, RunAndCompareExitCodes)
{
    const auto dir = temp_dir("cli");
    {
        std::ofstream(dir / "small.ini") << kBase;
        std::ofstream(dir / "bad.ini") << replace(kBase, "t_max = 20", "t_max = x");
    }
    const std::string cli = SPINBATH_CLI;
    const auto out = (dir / "out").string();
    EXPECT_EQ(std::system((cli + " run " + (dir / "small.ini").string() + " --out-dir " + out + " > /dev/null").c_str()), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "small" / "summary.json"));
    EXPECT_NE(std::system((cli + " run " + (dir / "bad.ini").string() + " --out-dir " + out + " 2> /dev/null").c_str()), 0);
    const std::string cmp = cli + " compare " + (dir / "out" / "small" / "sigma_z.csv").string() +
                            " --law static --b2 0.0129 --delta 4 > /dev/null";
    EXPECT_EQ(std::system(cmp.c_str()), 0);
    EXPECT_NE(std::system((cli + " compare nothing.csv --law static --b2 1 --delta 4 2> /dev/null").c_str()), 0);
}

TEST(BundledScenarios, AllParse)
{
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(SPINBATH_SCENARIO_DIR)) {
        if (e.path().extension() != ".ini") continue;
        EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 4u);
}
