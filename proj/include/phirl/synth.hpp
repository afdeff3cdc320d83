#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phirl/phiid.hpp"
#include "phirl/trajdata.hpp"

namespace phirl {

// x(t+1) = A x(t) + e(t), e ~ N(0, noise_cov).
struct Var1System {
    Eigen::MatrixXd transition;
    Eigen::MatrixXd noise_cov;
};

double spectral_radius(const Eigen::MatrixXd& m);

// Throws unless A is square with spectral radius < 1 and noise_cov is a
// symmetric PSD matrix of matching size.
void check_var1(const Var1System& sys);

// T samples starting from a stationary draw; reproducible for a given seed.
LatentTrajectory gen_var1(const Var1System& sys, std::size_t T, std::uint64_t seed);

// Time-varying variant: step t uses systems[t - 1]; x_0 is drawn from the
// stationary law of systems.front(). Needs T - 1 systems of equal size.
LatentTrajectory gen_var1_path(const std::vector<Var1System>& systems, std::uint64_t seed);

struct StationaryCovariance {
    Eigen::MatrixXd cov;   // Cov(x_t)
    Eigen::MatrixXd lag1;  // Cov(x_t, x_{t+1}) = cov * A^T
    std::size_t iterations = 0;
};

// Solves cov = A cov A^T + noise_cov by fixed-point iteration to 1e-12.
StationaryCovariance stationary_cov_var1(const Var1System& sys);

// Exact joint covariance of the coarse-grained (part means at t, t+1).
Eigen::Matrix4d analytic_pair_covariance(const Var1System& sys, const Bipartition& part);

// Exact atoms of the coarse-grained system.
PhiAtoms analytic_atoms(const Var1System& sys, const Bipartition& part);

// Per-checkpoint schedule as a function of training progress p in [0, 1].
struct Curve {
    enum class Kind { constant, linear, saturating, sigmoid, coupling };
    Kind kind = Kind::constant;
    double start = 0.0;      // constant: the value
    double end = 0.0;
    double rate = 3.0;       // saturating: 1 - exp(-rate p), normalized
    double midpoint = 0.5;   // sigmoid
    double steepness = 10.0; // sigmoid
    double offset = 0.0;     // coupling: offset + scale * coupling(p)
    double scale = 1.0;

    double at(double progress, double coupling = 0.0) const;
};

// Two-block family: A = self I + block B + coupling G, where B averages within
// each half of the units and G averages over all units. Noise is noise^2 I.
struct SystemFamily {
    double self = 0.3;
    double block = 0.2;
    double noise = 1.0;
};

Var1System family_system(std::size_t n_units, const SystemFamily& family, double coupling);

struct RunProfile {
    std::string env_name = "synthetic";
    std::string algorithm = "none";
    std::string architecture = "var1";
    std::size_t n_units = 8;
    std::size_t T = 300;
    std::size_t n_checkpoints = 11;
    std::size_t episodes_per_checkpoint = 3;
    std::int64_t checkpoint_interval = 50000;
    SystemFamily system;
    Curve coupling_curve;
    Curve reward_curve;
    double reward_noise = 0.05;  // noise sd as a fraction of the reward range
    // When true, coupling inside each episode moves linearly from ramp_start to
    // the checkpoint's value instead of staying fixed.
    bool ramp_within_episode = false;
    double ramp_start = 0.0;
    // When set, each run draws coupling_curve.end uniformly from this range.
    std::optional<std::pair<double, double>> vary_coupling_end;
};

RunProfile parse_profile(const std::string& json_text);
RunProfile load_profile(const std::filesystem::path& path);
std::string profile_to_json(const RunProfile& profile);

// Ground truth lands in run.annotations: "coupling" and "reward" per checkpoint
// and "coupling_end" (single value). Latents are rounded to float32 so that the
// run survives a bundle round trip bit-exactly.
RunRecord gen_synthetic_run(const RunProfile& profile, std::uint64_t seed, std::string run_id = {});

std::vector<RunRecord> gen_synthetic_cohort(const RunProfile& profile, std::size_t n_runs, std::uint64_t seed,
                                            unsigned threads = 1);

}  // namespace phirl
