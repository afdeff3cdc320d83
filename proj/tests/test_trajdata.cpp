#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <json.hpp>

#include "phirl/error.hpp"
#include "phirl/trajdata.hpp"
#include "test_util.hpp"

using namespace phirl;
namespace fs = std::filesystem;

namespace {

bool has_issue(const ValidationReport& r, const std::string& location_part, const std::string& message_part) {
    for (const auto& i : r.issues) {
        if (i.location.find(location_part) != std::string::npos && i.message.find(message_part) != std::string::npos) {
            return true;
        }
    }
    return false;
}

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream f(dir / "manifest.json");
    return nlohmann::json::parse(f);
}

void write_manifest(const fs::path& dir, const nlohmann::json& j) {
    std::ofstream f(dir / "manifest.json");
    f << j.dump(2);
}

}  // namespace

TEST(Bundle, SmallestLegalBundle) {
    const auto dir = testutil::temp_dir("smallest");
    RunRecord run;
    run.run_id = "r";
    run.n_units = 2;
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    run.checkpoints.push_back(make_checkpoint(0, {make_episode(testutil::from_matrix(m, "0_0"), {0.5, 0.25}, 3)}));
    write_bundle(run, dir);
    EXPECT_EQ(fs::file_size(dir / "data" / "0_0.lat"), 16u);
    EXPECT_EQ(fs::file_size(dir / "data" / "0_0.rew"), 16u);
    const auto j = read_manifest(dir);
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["checkpoints"][0]["episodes"][0]["T"], 2);
    EXPECT_EQ(read_bundle(dir), run);
}

TEST(Bundle, LatentsAreLittleEndianFloat32RowMajor) {
    const auto dir = testutil::temp_dir("layout");
    auto run = testutil::random_run(1, 1, 1, 5, 3);
    write_bundle(run, dir);
    std::ifstream f(dir / "data" / "0_0.lat", std::ios::binary);
    unsigned char bytes[4];
    f.seekg(4 * (2 * 3 + 1));
    f.read(reinterpret_cast<char*>(bytes), 4);
    const std::uint32_t bits = bytes[0] | bytes[1] << 8 | bytes[2] << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
    float v;
    std::memcpy(&v, &bits, 4);
    EXPECT_EQ(static_cast<double>(v), run.checkpoints[0].episodes[0].latents.values(2, 1));
}

TEST(Bundle, RoundTripRandomRuns) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto dir = testutil::temp_dir("roundtrip");
        auto run = testutil::random_run(seed, 1 + seed % 4, 1 + seed % 3, 2 + seed * 3, 2 + seed % 5);
        if (seed % 2) run.annotations["coupling"] = std::vector<double>(run.checkpoints.size(), 0.125);
        write_bundle(run, dir);
        EXPECT_TRUE(validate_bundle(dir).ok());
        EXPECT_EQ(read_bundle(dir), run);
    }
}

TEST(Bundle, SixtyFourUnitsRecorded) {
    const auto dir = testutil::temp_dir("n64");
    write_bundle(testutil::random_run(2, 1, 1, 10, 64), dir);
    EXPECT_EQ(read_manifest(dir)["n_units"], 64);
    EXPECT_EQ(read_bundle(dir).checkpoints[0].episodes[0].latents.units(), 64u);
}

TEST(Bundle, CheckpointRewardIsMedianOfReturns) {
    auto run = testutil::random_run(3, 2, 4);
    for (const auto& ck : run.checkpoints) {
        std::vector<double> r;
        for (const auto& ep : ck.episodes) r.push_back(ep.episode_return);
        std::sort(r.begin(), r.end());
        EXPECT_DOUBLE_EQ(ck.checkpoint_reward, 0.5 * (r[1] + r[2]));
    }
}

TEST(Bundle, TruncatedLatentFileNamesEpisode) {
    const auto dir = testutil::temp_dir("truncated");
    write_bundle(testutil::random_run(4, 2, 2, 10, 3), dir);
    const auto file = dir / "data" / "1000_1.lat";
    fs::resize_file(file, fs::file_size(file) - 4);
    const auto report = validate_bundle(dir);
    EXPECT_TRUE(has_issue(report, "checkpoint 1 (train_step 1000) episode 1", "shape mismatch"));
    try {
        read_bundle(dir);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
    }
}

TEST(Bundle, RewardLengthMismatch) {
    const auto dir = testutil::temp_dir("rewards");
    write_bundle(testutil::random_run(5, 1, 1, 10, 3), dir);
    auto j = read_manifest(dir);
    j["checkpoints"][0]["episodes"][0]["T"] = 9;
    write_manifest(dir, j);
    const auto report = validate_bundle(dir);
    EXPECT_FALSE(report.ok());
    EXPECT_THROW(read_bundle(dir), Error);
}

TEST(Bundle, NaNReportedWithRowAndColumn) {
    const auto dir = testutil::temp_dir("nan");
    write_bundle(testutil::random_run(6, 1, 1, 10, 8), dir);
    std::fstream f(dir / "data" / "0_0.lat", std::ios::in | std::ios::out | std::ios::binary);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    f.seekp(4 * (3 * 8 + 5));
    f.write(reinterpret_cast<const char*>(&nan), 4);
    f.close();
    const auto report = validate_bundle(dir);
    ASSERT_EQ(report.issues.size(), 1u);
    EXPECT_TRUE(has_issue(report, "episode 0", "row 3, column 5"));
}

TEST(Bundle, NonMonotoneTrainStep) {
    const auto dir = testutil::temp_dir("order");
    write_bundle(testutil::random_run(7, 3, 1, 10, 2), dir);
    auto j = read_manifest(dir);
    j["checkpoints"][2]["train_step"] = 500;
    write_manifest(dir, j);
    EXPECT_TRUE(has_issue(validate_bundle(dir), "checkpoint 2", "not strictly greater"));
}

TEST(Bundle, MissingOrCorruptManifestAndSchema) {
    const auto dir = testutil::temp_dir("manifest");
    EXPECT_TRUE(has_issue(validate_bundle(dir), "manifest.json", "missing manifest"));
    {
        std::ofstream f(dir / "manifest.json");
        f << "{not json";
    }
    EXPECT_TRUE(has_issue(validate_bundle(dir), "manifest.json", "corrupt"));
    write_bundle(testutil::random_run(8, 1, 1, 4, 2), dir);
    auto j = read_manifest(dir);
    j["schema_version"] = 2;
    write_manifest(dir, j);
    EXPECT_TRUE(has_issue(validate_bundle(dir), "manifest.json", "unsupported schema_version"));
}

TEST(Bundle, RefusesToWriteInvalidRun) {
    auto run = testutil::random_run(9, 2, 1, 4, 2);
    std::swap(run.checkpoints[0], run.checkpoints[1]);
    EXPECT_FALSE(validate_run(run).ok());
    const auto dir = testutil::temp_dir("invalid");
    EXPECT_THROW(write_bundle(run, dir / "b"), Error);
    EXPECT_FALSE(fs::exists(dir / "b" / "manifest.json"));
}

TEST(Bundle, ReturnMustMatchStepRewards) {
    const auto dir = testutil::temp_dir("return");
    write_bundle(testutil::random_run(10, 1, 1, 4, 2), dir);
    auto j = read_manifest(dir);
    j["checkpoints"][0]["episodes"][0]["episode_return"] = 1e6;
    write_manifest(dir, j);
    EXPECT_TRUE(has_issue(validate_bundle(dir), "episode 0", "episode_return"));
}
