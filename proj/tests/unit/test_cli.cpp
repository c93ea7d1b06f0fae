#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "iwocf/cli.hpp"
#include "iwocf/error.hpp"
#include "synthetic.hpp"

using namespace iwocf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "iwocf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("iwocf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        data_ = dir_ / "ratings.txt";
        std::ofstream out(data_);
        for (const auto& t : iwocf::testing::twin_population(5, 4, 4, 30).triples()) {
            out << raw(t.user) << ' ' << raw(t.item) << ' ' << t.rating << '\n';
        }
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::vector<std::string> base(const std::string& cmd) {
        return {cmd, "--dataset", data_.string(), "--format", "filmtrust", "--iterations", "40",
                "--workers", "1", "--output-dir", (dir_ / "out").string()};
    }

    fs::path dir_;
    fs::path data_;
};

}  // namespace

TEST(CliDefaults, MatchPublishedConstants) {
    const auto d = cli::default_key_values();
    EXPECT_EQ(d.at("k"), "0.20000000000000001");
    EXPECT_EQ(d.at("theta"), "0.59999999999999998");
    EXPECT_EQ(d.at("s-min"), "0");
    EXPECT_EQ(d.at("s-max"), "7");
    EXPECT_EQ(d.at("sigma-initial"), "1");
    EXPECT_EQ(d.at("sigma-final"), "0.001");
    EXPECT_EQ(d.at("modulation"), "5");
    EXPECT_EQ(d.at("iterations"), "300");
    EXPECT_EQ(d.at("pop-initial"), "10");
    EXPECT_EQ(d.at("pop-max"), "200");
    const auto c = cli::to_run_config(d);
    EXPECT_EQ(c.experiment.sim.k, 0.2);
    EXPECT_EQ(c.experiment.sim.theta, 0.6);
    EXPECT_EQ(c.experiment.iwo.sigma_final, 0.001);
    EXPECT_EQ(c.experiment.split.test_fraction, 0.2);
    EXPECT_EQ(c.experiment.fitness_holdout_fraction, 0.25);
}

TEST(CliConfig, ParsesAndRejects) {
    std::istringstream good("# comment\ntheta = 0.5  # trailing\n\nk=0.1\n");
    const auto kv = cli::parse_config_text(good);
    EXPECT_EQ(kv.at("theta"), "0.5");
    EXPECT_EQ(kv.at("k"), "0.1");
    std::istringstream unknown("thetta = 0.5\n");
    EXPECT_THROW(cli::parse_config_text(unknown), ParseError);
    std::istringstream no_eq("theta 0.5\n");
    EXPECT_THROW(cli::parse_config_text(no_eq), ParseError);
    EXPECT_THROW(cli::to_run_config({{"theta", "abc"}}), Error);
    EXPECT_THROW(cli::to_run_config({{"baseline", "magic"}}), Error);
}

TEST_F(CliTest, ValidateSummary) {
    auto r = run_cli(base("validate"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("users"), std::string::npos);
    EXPECT_NE(r.out.find("scale [0.5, 4]"), std::string::npos);
}

TEST_F(CliTest, ValidateOutOfScale) {
    const auto bad = dir_ / "bad.txt";
    std::ofstream(bad) << "1 1 2.0\n1 2 3.0\n2 1 9.0\n";
    auto r = run_cli({"validate", "--dataset", bad.string(), "--format", "filmtrust"});
    EXPECT_EQ(r.code, cli::exit_config);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, ValidateMissingFile) {
    auto r = run_cli({"validate", "--dataset", (dir_ / "nope.txt").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("file not found"), std::string::npos);
}

TEST_F(CliTest, ValidateBadParameters) {
    auto args = base("validate");
    args.insert(args.end(), {"--theta", "1.5"});
    EXPECT_EQ(run_cli(args).code, cli::exit_config);
}

TEST_F(CliTest, EvaluateUserMeanHasFullCoverage) {
    auto args = base("evaluate");
    args.insert(args.end(), {"--baseline", "user-mean"});
    auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "out" / "report-user-mean.json"));
    EXPECT_EQ(j["coverage"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "pairs-user-mean.csv"));
    EXPECT_NE(r.out.find("Bobadilla"), std::string::npos);
}

TEST_F(CliTest, EvaluateIsByteDeterministic) {
    auto r1 = run_cli(base("evaluate"));
    ASSERT_EQ(r1.code, 0) << r1.err;
    const auto first = slurp(dir_ / "out" / "report-proposed.json");
    auto r2 = run_cli(base("evaluate"));
    ASSERT_EQ(r2.code, 0);
    EXPECT_EQ(first, slurp(dir_ / "out" / "report-proposed.json"));
}

TEST_F(CliTest, EvaluateAllWritesEveryBaseline) {
    auto args = base("evaluate");
    args.insert(args.end(), {"--baseline", "all"});
    ASSERT_EQ(run_cli(args).code, 0);
    for (const char* name : {"proposed", "user-mean", "pcc-topk-unweighted"}) {
        EXPECT_TRUE(fs::exists(dir_ / "out" / (std::string("report-") + name + ".json"))) << name;
    }
}

TEST_F(CliTest, ConfigRoundTripReproducesReport) {
    auto dump = base("evaluate");
    dump.push_back("--dump-config");
    auto d = run_cli(dump);
    ASSERT_EQ(d.code, 0);
    const auto cfg = dir_ / "effective.conf";
    std::ofstream(cfg) << d.out;

    ASSERT_EQ(run_cli(base("evaluate")).code, 0);
    const auto direct = slurp(dir_ / "out" / "report-proposed.json");
    fs::remove_all(dir_ / "out");
    auto r = run_cli({"evaluate", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(direct, slurp(dir_ / "out" / "report-proposed.json"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
    const auto cfg = dir_ / "c.conf";
    std::ofstream(cfg) << "theta = 0.3\nk = 0.1\n";
    auto r = run_cli({"validate", "--config", cfg.string(), "--theta", "0.7", "--dump-config"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("theta = 0.69999999999999996"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("k = 0.10000000000000001"), std::string::npos);
}

TEST_F(CliTest, SeedFromEnvironment) {
    ::setenv(cli::seed_env_var, "12345", 1);
    auto r = run_cli({"validate", "--dump-config"});
    ::unsetenv(cli::seed_env_var);
    EXPECT_NE(r.out.find("global-seed = 12345"), std::string::npos);
    auto flag = run_cli({"validate", "--dump-config", "--global-seed", "7"});
    EXPECT_NE(flag.out.find("global-seed = 7"), std::string::npos);
}

TEST_F(CliTest, PredictPaths) {
    // Users 1 and 2 are twins, so user 1 has an important user who rated
    // every item user 1 rated.
    auto args = base("predict");
    const auto cache = dir_ / "models.txt";
    args.insert(args.end(), {"--model-cache", cache.string(), "--user", "1", "--item", "999999"});
    auto miss = run_cli(args);
    ASSERT_EQ(miss.code, 0) << miss.err;
    EXPECT_NE(miss.out.find("fallback=true"), std::string::npos);
    EXPECT_NE(miss.out.find("tier=user-mean"), std::string::npos);
    EXPECT_NE(miss.out.find("model=fitted"), std::string::npos);
    EXPECT_TRUE(fs::exists(cache));

    // An item the twin rated.
    const auto m = parse_ratings_file(data_, DatasetFormat::filmtrust);
    const auto row = m.user_row(m.require_user(UserId{2}));
    const auto item = std::to_string(raw(m.item_id(row.front().index)));
    auto hit_args = base("predict");
    hit_args.insert(hit_args.end(), {"--model-cache", cache.string(), "--user", "1", "--item", item});
    auto hit = run_cli(hit_args);
    ASSERT_EQ(hit.code, 0) << hit.err;
    EXPECT_NE(hit.out.find("fallback=false"), std::string::npos) << hit.out;
    EXPECT_NE(hit.out.find("model=cached"), std::string::npos);

    auto unknown = base("predict");
    unknown.insert(unknown.end(), {"--user", "424242", "--item", "1"});
    EXPECT_EQ(run_cli(unknown).code, cli::exit_data_ref);
}

TEST_F(CliTest, TraceCsv) {
    auto args = base("trace");
    args.insert(args.end(), {"--user", "1"});
    auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("t,best,worst,pop,sigma\n", 0), 0u);
    EXPECT_NE(r.out.find("\n40,"), std::string::npos);

    auto unknown = base("trace");
    unknown.insert(unknown.end(), {"--user", "999"});
    EXPECT_EQ(run_cli(unknown).code, cli::exit_data_ref);
}

TEST(CliUsage, NoSubcommandFails) {
    auto r = run_cli({});
    EXPECT_NE(r.code, 0);
}
