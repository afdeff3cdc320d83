#include "phirl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "phirl/error.hpp"
#include "phirl/parallel.hpp"
#include "phirl/rng.hpp"

namespace phirl {

namespace {

// Symmetric square root of a PSD matrix (negative eigenvalues clamped).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

Curve::Kind curve_kind(const std::string& s) {
    if (s == "constant") return Curve::Kind::constant;
    if (s == "linear") return Curve::Kind::linear;
    if (s == "saturating") return Curve::Kind::saturating;
    if (s == "sigmoid") return Curve::Kind::sigmoid;
    if (s == "coupling") return Curve::Kind::coupling;
    throw Error("unknown curve kind '" + s + "'");
}

const char* curve_kind_name(Curve::Kind k) {
    switch (k) {
        case Curve::Kind::constant: return "constant";
        case Curve::Kind::linear: return "linear";
        case Curve::Kind::saturating: return "saturating";
        case Curve::Kind::sigmoid: return "sigmoid";
        case Curve::Kind::coupling: return "coupling";
    }
    return "constant";
}

Curve curve_from_json(const nlohmann::json& j) {
    Curve c;
    c.kind = curve_kind(j.at("kind").get<std::string>());
    if (c.kind == Curve::Kind::constant) {
        c.start = c.end = j.at("value").get<double>();
        return c;
    }
    c.start = j.value("start", 0.0);
    c.end = j.value("end", 0.0);
    c.rate = j.value("rate", c.rate);
    c.midpoint = j.value("midpoint", c.midpoint);
    c.steepness = j.value("steepness", c.steepness);
    c.offset = j.value("offset", c.offset);
    c.scale = j.value("scale", c.scale);
    return c;
}

nlohmann::ordered_json curve_to_json(const Curve& c) {
    nlohmann::ordered_json j;
    j["kind"] = curve_kind_name(c.kind);
    switch (c.kind) {
        case Curve::Kind::constant: j["value"] = c.start; break;
        case Curve::Kind::linear:
            j["start"] = c.start;
            j["end"] = c.end;
            break;
        case Curve::Kind::saturating:
            j["start"] = c.start;
            j["end"] = c.end;
            j["rate"] = c.rate;
            break;
        case Curve::Kind::sigmoid:
            j["start"] = c.start;
            j["end"] = c.end;
            j["midpoint"] = c.midpoint;
            j["steepness"] = c.steepness;
            break;
        case Curve::Kind::coupling:
            j["offset"] = c.offset;
            j["scale"] = c.scale;
            break;
    }
    return j;
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw Error("spectral_radius: matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void check_var1(const Var1System& sys) {
    const Eigen::Index n = sys.transition.rows();
    if (n < 1 || sys.transition.cols() != n) throw Error("var1: transition matrix must be square");
    if (sys.noise_cov.rows() != n || sys.noise_cov.cols() != n) throw Error("var1: noise covariance has the wrong size");
    if (!sys.transition.allFinite() || !sys.noise_cov.allFinite()) throw Error("var1: non-finite parameters");
    if ((sys.noise_cov - sys.noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error("var1: noise covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.noise_cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10) throw Error("var1: noise covariance is not PSD");
    const double rho = spectral_radius(sys.transition);
    if (!(rho < 1.0)) throw Error("var1: spectral radius " + std::to_string(rho) + " is not below 1");
}

StationaryCovariance stationary_cov_var1(const Var1System& sys) {
    check_var1(sys);
    const Eigen::MatrixXd& A = sys.transition;
    StationaryCovariance out;
    Eigen::MatrixXd cov = sys.noise_cov;
    constexpr std::size_t kMaxIterations = 1'000'000;
    for (std::size_t it = 1; it <= kMaxIterations; ++it) {
        Eigen::MatrixXd next = A * cov * A.transpose() + sys.noise_cov;
        const double change = (next - cov).cwiseAbs().maxCoeff();
        cov = std::move(next);
        if (change <= 1e-12) {
            out.iterations = it;
            out.cov = 0.5 * (cov + cov.transpose());
            out.lag1 = out.cov * A.transpose();
            return out;
        }
    }
    throw Error("stationary_cov_var1: no convergence within 1e6 iterations");
}

LatentTrajectory gen_var1(const Var1System& sys, std::size_t T, std::uint64_t seed) {
    check_var1(sys);
    const Eigen::Index n = sys.transition.rows();
    const Eigen::MatrixXd noise_root = psd_sqrt(sys.noise_cov);
    const Eigen::MatrixXd stationary_root = psd_sqrt(stationary_cov_var1(sys).cov);
    Rng rng(seed);
    LatentTrajectory out;
    out.values.resize(static_cast<Eigen::Index>(T), n);
    if (T == 0) return out;
    Eigen::VectorXd x = stationary_root * normal_vector(rng, n);
    out.values.row(0) = x.transpose();
    for (Eigen::Index t = 1; t < static_cast<Eigen::Index>(T); ++t) {
        x = sys.transition * x + noise_root * normal_vector(rng, n);
        out.values.row(t) = x.transpose();
    }
    return out;
}

LatentTrajectory gen_var1_path(const std::vector<Var1System>& systems, std::uint64_t seed) {
    if (systems.empty()) throw Error("gen_var1_path: need at least one system");
    const Eigen::Index n = systems.front().transition.rows();
    for (const auto& sys : systems) {
        check_var1(sys);
        if (sys.transition.rows() != n) throw Error("gen_var1_path: systems differ in size");
    }
    const Eigen::MatrixXd stationary_root = psd_sqrt(stationary_cov_var1(systems.front()).cov);
    Rng rng(seed);
    LatentTrajectory out;
    out.values.resize(static_cast<Eigen::Index>(systems.size()) + 1, n);
    Eigen::VectorXd x = stationary_root * normal_vector(rng, n);
    out.values.row(0) = x.transpose();
    const Eigen::MatrixXd* last_noise = nullptr;
    Eigen::MatrixXd noise_root;
    for (std::size_t t = 0; t < systems.size(); ++t) {
        if (last_noise == nullptr || *last_noise != systems[t].noise_cov) {
            noise_root = psd_sqrt(systems[t].noise_cov);
            last_noise = &systems[t].noise_cov;
        }
        x = systems[t].transition * x + noise_root * normal_vector(rng, n);
        out.values.row(static_cast<Eigen::Index>(t) + 1) = x.transpose();
    }
    return out;
}

Eigen::Matrix4d analytic_pair_covariance(const Var1System& sys, const Bipartition& part) {
    const auto stat = stationary_cov_var1(sys);
    const Eigen::Index n = sys.transition.rows();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2, n);
    for (int c = 0; c < 2; ++c) {
        const auto& side = c == 0 ? part.side_a : part.side_b;
        if (side.empty()) throw Error("analytic_pair_covariance: empty side");
        for (std::size_t i : side) {
            if (static_cast<Eigen::Index>(i) >= n) throw Error("analytic_pair_covariance: unit out of range");
            P(c, static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(side.size());
        }
    }
    Eigen::Matrix4d joint;
    const Eigen::MatrixXd same = P * stat.cov * P.transpose();
    const Eigen::MatrixXd cross = P * stat.lag1 * P.transpose();
    joint.topLeftCorner<2, 2>() = same;
    joint.bottomRightCorner<2, 2>() = same;
    joint.topRightCorner<2, 2>() = cross;
    joint.bottomLeftCorner<2, 2>() = cross.transpose();
    return joint;
}

PhiAtoms analytic_atoms(const Var1System& sys, const Bipartition& part) {
    return phiid_atoms_from_cov(analytic_pair_covariance(sys, part));
}

double Curve::at(double progress, double coupling) const {
    switch (kind) {
        case Kind::constant: return start;
        case Kind::linear: return start + (end - start) * progress;
        case Kind::saturating: {
            if (rate == 0.0) return start + (end - start) * progress;
            return start + (end - start) * (1.0 - std::exp(-rate * progress)) / (1.0 - std::exp(-rate));
        }
        case Kind::sigmoid: {
            auto s = [&](double p) { return 1.0 / (1.0 + std::exp(-steepness * (p - midpoint))); };
            const double lo = s(0.0), hi = s(1.0);
            return start + (end - start) * (s(progress) - lo) / (hi - lo);
        }
        case Kind::coupling: return offset + scale * coupling;
    }
    return start;
}

Var1System family_system(std::size_t n_units, const SystemFamily& family, double coupling) {
    if (n_units < 2) throw Error("family_system: need at least 2 units");
    const auto n = static_cast<Eigen::Index>(n_units);
    const Eigen::Index half = n / 2;
    Var1System sys;
    sys.transition = family.self * Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool first_i = i < half;
        const double block_size = static_cast<double>(first_i ? half : n - half);
        for (Eigen::Index j = 0; j < n; ++j) {
            if ((j < half) == first_i) sys.transition(i, j) += family.block / block_size;
            sys.transition(i, j) += coupling / static_cast<double>(n);
        }
    }
    sys.noise_cov = family.noise * family.noise * Eigen::MatrixXd::Identity(n, n);
    return sys;
}

RunProfile parse_profile(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(std::string("profile is not valid JSON: ") + e.what());
    }
    RunProfile p;
    try {
        p.env_name = j.value("env_name", p.env_name);
        p.algorithm = j.value("algorithm", p.algorithm);
        p.architecture = j.value("architecture", p.architecture);
        p.n_units = j.value("n_units", p.n_units);
        p.T = j.value("T", p.T);
        p.n_checkpoints = j.value("n_checkpoints", p.n_checkpoints);
        p.episodes_per_checkpoint = j.value("episodes_per_checkpoint", p.episodes_per_checkpoint);
        p.checkpoint_interval = j.value("checkpoint_interval", p.checkpoint_interval);
        if (j.contains("system")) {
            const auto& s = j["system"];
            p.system.self = s.value("self", p.system.self);
            p.system.block = s.value("block", p.system.block);
            p.system.noise = s.value("noise", p.system.noise);
        }
        p.coupling_curve = curve_from_json(j.at("coupling_curve"));
        p.reward_curve = curve_from_json(j.at("reward_curve"));
        p.reward_noise = j.value("reward_noise", p.reward_noise);
        p.ramp_within_episode = j.value("ramp_within_episode", p.ramp_within_episode);
        p.ramp_start = j.value("ramp_start", p.ramp_start);
        if (j.contains("vary_coupling_end")) {
            const auto& r = j["vary_coupling_end"];
            p.vary_coupling_end = std::make_pair(r.at(0).get<double>(), r.at(1).get<double>());
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string("invalid profile: ") + e.what());
    }
    if (p.n_units < 2 || p.T < 2 || p.n_checkpoints < 1 || p.episodes_per_checkpoint < 1 || p.checkpoint_interval < 1) {
        throw Error("invalid profile: counts must be >= 1, n_units and T >= 2");
    }
    if (p.coupling_curve.kind == Curve::Kind::coupling) throw Error("invalid profile: coupling_curve cannot be of kind 'coupling'");
    if (p.reward_noise < 0.0) throw Error("invalid profile: reward_noise must be >= 0");
    return p;
}

RunProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile " + path.string());
    return parse_profile({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::string profile_to_json(const RunProfile& p) {
    nlohmann::ordered_json j;
    j["env_name"] = p.env_name;
    j["algorithm"] = p.algorithm;
    j["architecture"] = p.architecture;
    j["n_units"] = p.n_units;
    j["T"] = p.T;
    j["n_checkpoints"] = p.n_checkpoints;
    j["episodes_per_checkpoint"] = p.episodes_per_checkpoint;
    j["checkpoint_interval"] = p.checkpoint_interval;
    j["system"] = {{"self", p.system.self}, {"block", p.system.block}, {"noise", p.system.noise}};
    j["coupling_curve"] = curve_to_json(p.coupling_curve);
    j["reward_curve"] = curve_to_json(p.reward_curve);
    j["reward_noise"] = p.reward_noise;
    j["ramp_within_episode"] = p.ramp_within_episode;
    j["ramp_start"] = p.ramp_start;
    if (p.vary_coupling_end) j["vary_coupling_end"] = {p.vary_coupling_end->first, p.vary_coupling_end->second};
    return j.dump(2);
}

RunRecord gen_synthetic_run(const RunProfile& profile, std::uint64_t seed, std::string run_id) {
    Curve coupling_curve = profile.coupling_curve;
    Rng run_rng(derive_seed({seed, 0x72756eULL}));
    if (profile.vary_coupling_end) {
        const auto [lo, hi] = *profile.vary_coupling_end;
        coupling_curve.end = lo + (hi - lo) * run_rng.uniform();
    }
    const std::size_t K = profile.n_checkpoints;
    std::vector<double> coupling(K), reward(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double progress = K > 1 ? static_cast<double>(k) / static_cast<double>(K - 1) : 0.0;
        coupling[k] = coupling_curve.at(progress);
        reward[k] = profile.reward_curve.at(progress, coupling[k]);
    }
    const auto [rmin, rmax] = std::minmax_element(reward.begin(), reward.end());
    const double reward_sd = profile.reward_noise * (*rmax - *rmin);

    RunRecord run;
    run.run_id = run_id.empty() ? "synthetic_" + std::to_string(seed) : std::move(run_id);
    run.env_name = profile.env_name;
    run.algorithm = profile.algorithm;
    run.architecture = profile.architecture;
    run.n_units = profile.n_units;
    const double T = static_cast<double>(profile.T);
    for (std::size_t k = 0; k < K; ++k) {
        const Var1System sys = family_system(profile.n_units, profile.system, coupling[k]);
        const std::int64_t step = static_cast<std::int64_t>(k) * profile.checkpoint_interval;
        std::vector<EpisodeRecord> episodes;
        for (std::size_t e = 0; e < profile.episodes_per_checkpoint; ++e) {
            const std::uint64_t ep_seed = derive_seed({seed, k, e});
            LatentTrajectory z;
            if (profile.ramp_within_episode) {
                std::vector<Var1System> path;
                path.reserve(profile.T - 1);
                for (std::size_t t = 1; t < profile.T; ++t) {
                    const double f = static_cast<double>(t) / (T - 1.0);
                    const double c = profile.ramp_start + (coupling[k] - profile.ramp_start) * f;
                    path.push_back(family_system(profile.n_units, profile.system, c));
                }
                z = gen_var1_path(path, ep_seed);
            } else {
                z = gen_var1(sys, profile.T, ep_seed);
            }
            z.values = z.values.cast<float>().cast<double>();
            z.episode_id = episode_name(step, e);
            Rng reward_rng(derive_seed({ep_seed, 0x726577ULL}));
            const double ret = reward[k] + reward_sd * reward_rng.normal();
            std::vector<double> steps(profile.T, ret / T);
            episodes.push_back(make_episode(std::move(z), std::move(steps), static_cast<std::int64_t>(ep_seed >> 1)));
        }
        run.checkpoints.push_back(make_checkpoint(step, std::move(episodes)));
    }
    run.annotations["coupling"] = coupling;
    run.annotations["reward"] = reward;
    run.annotations["coupling_end"] = {coupling_curve.end};
    return run;
}

std::vector<RunRecord> gen_synthetic_cohort(const RunProfile& profile, std::size_t n_runs, std::uint64_t seed,
                                            unsigned threads) {
    std::vector<RunRecord> runs(n_runs);
    parallel_for(n_runs, threads, [&](std::size_t r) {
        char id[32];
        std::snprintf(id, sizeof id, "run_%03zu", r);
        runs[r] = gen_synthetic_run(profile, derive_seed({seed, r}), id);
    });
    return runs;
}

}  // namespace phirl
