#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "rgseq/evaluator.hpp"
#include "rgseq/io.hpp"
#include "rgseq/threshold_solver.hpp"

using namespace rgseq;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RGSEQ_CLI_PATH;
const std::string kModels = RGSEQ_MODELS_DIR;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("rgseq_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Exit status of the command; stderr goes to a log file in the scratch dir.
    int run(const std::string& args) const {
        const std::string cmd = kCli + " " + args + " 2>>" + path("stderr.log");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static json read_json(const std::string& p) {
        std::ifstream in(p);
        return json::parse(in);
    }

    static std::string model(const std::string& name) { return kModels + "/" + name; }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, DesignFromMultipliers) {
    ASSERT_EQ(run("design --model " + model("bernoulli.json") +
                  " --lambda0 5 --lambda1 5 --c 0.02 --out " + path("d.json") + " --rule-out " + path("r.json")),
              0);
    const auto d = read_json(path("d.json"));
    const double A = d.at("A").get<double>(), B = d.at("B").get<double>();
    EXPECT_GT(A, 0.0);
    EXPECT_LT(A, B);
    EXPECT_TRUE(std::isfinite(B));
    EXPECT_FALSE(d.at("trivial").get<bool>());
    EXPECT_EQ(d.at("config").at("command"), "design");

    const auto spec = load_model(model("bernoulli.json"));
    const auto k = make_stage_kernel(spec.model, spec.groups.support, spec.groups.pmf, CostModel::constant(0.02));
    const auto t = solve_thresholds(stationary_value(k, 0.02, {5.0, 5.0}));
    EXPECT_NEAR(A, t.A, 1e-12 * t.A);
    EXPECT_NEAR(B, t.B, 1e-12 * t.B);

    const auto rule = load_rule(path("r.json"));
    EXPECT_EQ(rule.stages[0].A, A);
}

TEST_F(Cli, InverseDesignResiduals) {
    ASSERT_EQ(run("design --model " + model("bernoulli.json") + " --A 0.1111 --B 9 --out " + path("d.json")), 0);
    const auto d = read_json(path("d.json"));
    EXPECT_LT(std::abs(d.at("residuals").at("threshold_A").get<double>()), 1e-9);
    EXPECT_LT(std::abs(d.at("residuals").at("G").get<double>()), 1e-9);
    EXPECT_EQ(d.at("A").get<double>(), 0.1111);
    EXPECT_EQ(d.at("B").get<double>(), 9.0);

    // Independent check of both equations at the reported (lambda, c).
    const auto spec = load_model(model("bernoulli.json"));
    const double lambda = d.at("lambda0").get<double>(), c = d.at("c").get<double>();
    FixedPointOptions fo;
    fo.tol = 1e-12;
    fo.max_iter = 100000;
    const auto sv = rho_fixed_point(spec.kernels().tail(), c, lambda, fo);
    EXPECT_LT(std::abs(c + sv.rho_bar(0.1111) - 0.1111), 1e-9);
    EXPECT_LT(std::abs(lambda - sv.rho_bar(9.0) - c), 1e-9);
}

TEST_F(Cli, MissingModelIsConfigError) {
    EXPECT_EQ(run("design --model " + path("absent.json") + " --out " + path("d.json") + " --rule-out " +
                  path("r.json")),
              2);
    EXPECT_FALSE(fs::exists(path("d.json")));
    EXPECT_FALSE(fs::exists(path("r.json")));
}

TEST_F(Cli, CorruptedPmfIsConfigError) {
    std::ofstream(path("bad.json")) << R"({"f0": [0.6, 0.3], "f1": [0.3, 0.7]})";
    EXPECT_EQ(run("verify --model " + path("bad.json") + " --out " + path("v.json")), 2);
    EXPECT_FALSE(fs::exists(path("v.json")));
}

TEST_F(Cli, UnknownFlagIsConfigError) {
    EXPECT_EQ(run("design --model " + model("bernoulli.json") + " --lambda2 3"), 2);
    EXPECT_EQ(run("design --model " + model("bernoulli.json") + " --A 0.5"), 2);
}

TEST_F(Cli, EvaluateAndSimulateCarryConfigAndSeed) {
    ASSERT_EQ(run("design --model " + model("bernoulli.json") + " --A 0.1111 --B 9 --rule-out " + path("r.json") +
                  " --out " + path("d.json")),
              0);
    ASSERT_EQ(run("evaluate --model " + model("bernoulli.json") + " --rule " + path("r.json") + " --out " +
                  path("e.json") + " --csv " + path("tail.csv")),
              0);
    const auto e = read_json(path("e.json"));
    EXPECT_TRUE(fs::exists(path("tail.csv")));
    EXPECT_LT(e.at("tail_fit").at("r_hat").get<double>(), 1.0);

    ASSERT_EQ(run("simulate --model " + model("bernoulli.json") + " --rule " + path("r.json") +
                  " --reps 20000 --seed 77 --threads 3 --out " + path("s1.json")),
              0);
    const auto s1 = read_json(path("s1.json"));
    EXPECT_EQ(s1.at("seed").get<std::uint64_t>(), 77u);
    EXPECT_EQ(s1.at("config").at("flags").at("seed").get<std::uint64_t>(), 77u);
    EXPECT_LE(std::abs(s1.at("alpha").get<double>() - e.at("alpha").get<double>()),
              4 * s1.at("std_errors").at("alpha").get<double>() + 1e-12);

    // Replaying the emitted config reproduces the report exactly.
    ASSERT_EQ(run("simulate --config " + path("s1.json") + " --threads 1 --out " + path("s2.json")), 0);
    auto s2 = read_json(path("s2.json"));
    auto strip = [](json j) {
        j.erase("config");
        return j;
    };
    EXPECT_EQ(strip(s1).dump(), strip(s2).dump());
}

TEST_F(Cli, ValueDumpWritesCsv) {
    ASSERT_EQ(run("value-dump --model " + model("uniform_counterexample.json") + " --grid-points 512 --csv " +
                  path("v.csv")),
              0);
    std::ifstream in(path("v.csv"));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "z,g,rho,rho_bar,continue_flag");
}

TEST_F(Cli, FrontierMeetsTargets) {
    ASSERT_EQ(run("frontier --model " + model("bernoulli.json") + " --c 0.02 --alpha 0.05 --beta 0.05 --out " +
                  path("f.json")),
              0);
    const auto f = read_json(path("f.json"));
    EXPECT_TRUE(f.at("met").get<bool>());
    const auto spec = load_model(model("bernoulli.json"));
    const KernelSequence ks(make_stage_kernel(spec.model, spec.groups.support, spec.groups.pmf, CostModel::constant(0.02)));
    const auto oc = exact_oc(rule_from_json(f.at("rule")), ks);
    EXPECT_LE(oc.alpha, 0.05);
    EXPECT_LE(oc.beta, 0.05);
}

TEST_F(Cli, FrontierVacuousTargets) {
    ASSERT_EQ(run("frontier --model " + model("bernoulli.json") + " --alpha 0.999 --beta 0.999 --out " +
                  path("f.json")),
              0);
    EXPECT_EQ(read_json(path("f.json")).at("probes").get<int>(), 1);
}

TEST_F(Cli, FrontierBestEffort) {
    EXPECT_EQ(run("frontier --model " + model("bernoulli.json") +
                  " --c 1e6 --lambda-max 10 --alpha 0.01 --beta 0.01 --out " + path("f.json")),
              4);
    const auto f = read_json(path("f.json"));
    EXPECT_FALSE(f.at("met").get<bool>());
}

class CliVerify : public Cli, public ::testing::WithParamInterface<const char*> {};

TEST_P(CliVerify, BundledModelPasses) {
    EXPECT_EQ(run(std::string("verify --model ") + model(GetParam()) + " --out " + path("v.json")), 0);
    const auto v = read_json(path("v.json"));
    EXPECT_TRUE(v.at("passed").get<bool>());
}

INSTANTIATE_TEST_SUITE_P(Models, CliVerify,
                         ::testing::Values("bernoulli.json", "bernoulli_groups.json", "uniform_counterexample.json",
                                           "trinary_zero.json"),
                         [](const auto& info) {
                             std::string s = info.param;
                             return s.substr(0, s.find('.'));
                         });

TEST_F(Cli, VerifyCounterexampleExpectations) {
    ASSERT_EQ(run("verify --model " + model("uniform_counterexample.json") + " --lambda0 2 --c 0.5 --out " +
                  path("v.json")),
              0);
    const auto v = read_json(path("v.json"));
    std::set<std::string> passed;
    for (const auto& c : v.at("checks")) {
        if (c.at("status") == "pass") passed.insert(c.at("name").get<std::string>());
    }
    EXPECT_TRUE(passed.count("one_sided_alpha_zero"));
    EXPECT_TRUE(passed.count("one_sided_h1_never_stops"));
}
