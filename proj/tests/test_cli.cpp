#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "phirl/cli.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = phirl::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string small_profile() { return (fs::path(PHIRL_PROFILE_DIR) / "small.json").string(); }

}  // namespace

TEST(Cli, SynthValidateEmerge) {
    const auto dir = testutil::temp_dir("cli_pipeline");
    const auto bundle = (dir / "run").string();
    const auto s = run({"synth", "--profile", small_profile(), "--out", bundle, "--seed", "3"});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto synth = nlohmann::json::parse(s.out);
    EXPECT_EQ(synth["command"], "synth");

    const auto v = run({"validate", bundle});
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_EQ(nlohmann::json::parse(v.out)["results"]["valid"], true);

    const auto e = run({"emerge", bundle, "--threads", "2"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = nlohmann::json::parse(e.out);
    EXPECT_EQ(j["tool_version"], "0.1.0");
    EXPECT_EQ(j["config"]["window"], 100);
    EXPECT_EQ(j["config"]["stride"], 10);
    EXPECT_FALSE(j["config"].contains("threads"));
    ASSERT_EQ(j["results"]["checkpoints"].size(), 8u);
    for (const auto& ck : j["results"]["checkpoints"]) EXPECT_TRUE(ck["phi_r"].is_number());
    EXPECT_EQ(j["results"]["series"]["phi_r"].size(), 8u);
}

TEST(Cli, WindowLargerThanEpisode) {
    const auto dir = testutil::temp_dir("cli_window");
    ASSERT_EQ(run({"synth", "--profile", small_profile(), "--out", (dir / "run").string()}).code, 0);
    const auto e = run({"emerge", (dir / "run").string(), "--window", "500"});
    EXPECT_EQ(e.code, 1);
    EXPECT_NE(e.err.find("reduce --window"), std::string::npos) << e.err;
    EXPECT_TRUE(e.out.empty());
}

TEST(Cli, UsageErrors) {
    const auto a = run({"emerge", "--bogus-flag"});
    EXPECT_EQ(a.code, 1);
    EXPECT_NE(a.err.find("Usage"), std::string::npos) << a.err;
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"predict", "x", "--model", "svm"}).code, 1);
}

TEST(Cli, InvalidBundle) {
    const auto dir = testutil::temp_dir("cli_invalid");
    ASSERT_EQ(run({"synth", "--profile", small_profile(), "--out", (dir / "run").string()}).code, 0);
    fs::resize_file(dir / "run" / "data" / "0_0.lat", 10);
    const auto v = run({"validate", (dir / "run").string()});
    EXPECT_EQ(v.code, 1);
    const auto j = nlohmann::json::parse(v.out);
    EXPECT_EQ(j["results"]["valid"], false);
    EXPECT_GE(j["results"]["n_issues"], 1);
    EXPECT_EQ(run({"emerge", (dir / "run").string()}).code, 1);
    EXPECT_EQ(run({"emerge", (dir / "missing").string()}).code, 1);
}

TEST(Cli, OutFileAndCsv) {
    const auto dir = testutil::temp_dir("cli_files");
    const auto bundle = (dir / "run").string();
    ASSERT_EQ(run({"synth", "--profile", small_profile(), "--out", bundle}).code, 0);
    const auto to_stdout = run({"metrics", bundle});
    ASSERT_EQ(to_stdout.code, 0);
    const auto to_file = run({"metrics", bundle, "--out", (dir / "m.json").string(), "--csv", (dir / "csv").string()});
    ASSERT_EQ(to_file.code, 0);
    EXPECT_EQ(slurp(dir / "m.json"), to_stdout.out);
    EXPECT_TRUE(fs::exists(dir / "csv" / "metrics.csv"));
    EXPECT_FALSE(slurp(dir / "csv" / "metrics.csv").empty());
}

TEST(Cli, CohortCommandsAreThreadIndependent) {
    const auto dir = testutil::temp_dir("cli_cohort");
    const auto cohort = (dir / "cohort").string();
    ASSERT_EQ(run({"synth", "--profile", small_profile(), "--out", cohort, "--runs", "10", "--seed", "4"}).code, 0);
    EXPECT_EQ(run({"synth", "--profile", small_profile(), "--out", (dir / "again").string(), "--runs", "10", "--seed", "4",
                   "--threads", "3"}).code, 0);
    for (int r = 0; r < 10; ++r) {
        char name[16];
        std::snprintf(name, sizeof name, "run_%03d", r);
        EXPECT_EQ(slurp(fs::path(cohort) / name / "manifest.json"), slurp(dir / "again" / name / "manifest.json"));
    }
    const std::vector<std::vector<std::string>> commands{
        {"screen", cohort},
        {"align", cohort, "--null-draws", "200", "--seed", "2"},
        {"predict", cohort, "--repeats", "2", "--trees", "20", "--seed", "2"},
    };
    for (auto args : commands) {
        auto one = args, three = args;
        one.insert(one.end(), {"--threads", "1"});
        three.insert(three.end(), {"--threads", "3"});
        const auto a = run(one), b = run(three);
        EXPECT_EQ(a.code, 0) << args[0] << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << args[0];
        EXPECT_EQ(nlohmann::json::parse(a.out)["results"]["n_runs"], 10);
    }
}
