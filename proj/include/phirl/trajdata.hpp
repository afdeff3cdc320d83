#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phirl {

// Latent activations of one episode: row t is z_t, column i is unit i.
struct LatentTrajectory {
    Eigen::MatrixXd values;
    std::string episode_id;

    std::size_t steps() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t units() const { return static_cast<std::size_t>(values.cols()); }

    bool operator==(const LatentTrajectory&) const = default;
};

struct EpisodeRecord {
    LatentTrajectory latents;
    std::vector<double> step_rewards;
    double episode_return = 0.0;
    std::int64_t seed = 0;

    bool operator==(const EpisodeRecord&) const = default;
};

struct CheckpointRecord {
    std::int64_t train_step = 0;
    std::vector<EpisodeRecord> episodes;
    double checkpoint_reward = 0.0;  // median of episode returns

    bool operator==(const CheckpointRecord&) const = default;
};

struct RunRecord {
    std::string run_id;
    std::string env_name;
    std::string algorithm;
    std::string architecture;
    std::vector<CheckpointRecord> checkpoints;
    std::size_t n_units = 0;
    // Optional named per-run series, e.g. the programmed ground truth of a
    // synthetic run. Stored under "annotations" in the manifest when present.
    std::map<std::string, std::vector<double>> annotations;

    bool operator==(const RunRecord&) const = default;
};

// Builds an episode whose return is the sum of its step rewards.
EpisodeRecord make_episode(LatentTrajectory latents, std::vector<double> step_rewards,
                           std::int64_t seed);
// Builds a checkpoint whose reward is the median episode return.
CheckpointRecord make_checkpoint(std::int64_t train_step, std::vector<EpisodeRecord> episodes);

// Canonical episode id used by the bundle reader: "<train_step>_<index>".
std::string episode_name(std::int64_t train_step, std::size_t episode_index);

// Throws Error unless T >= 2, n >= 2 and every value is finite.
void check_trajectory(const LatentTrajectory& traj);

struct ValidationIssue {
    std::string location;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

// In-memory invariant check of a run.
ValidationReport validate_run(const RunRecord& run);

// Bundle layout: <dir>/manifest.json plus <dir>/data/<train_step>_<i>.lat
// (float32 LE, row-major T x n) and .rew (float64 LE, length T).
inline constexpr int kSchemaVersion = 1;

// Latents are narrowed to float32 on write; values that are not exactly
// representable in float32 will not round-trip bit-identically.
void write_bundle(const RunRecord& run, const std::filesystem::path& dir);
RunRecord read_bundle(const std::filesystem::path& dir);
ValidationReport validate_bundle(const std::filesystem::path& dir);

}  // namespace phirl
