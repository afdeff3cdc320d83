#include "phirl/trajdata.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "phirl/error.hpp"
#include "phirl/numeric.hpp"

namespace phirl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <class UInt>
void put_le(std::string& out, UInt bits) {
    for (std::size_t b = 0; b < sizeof(UInt); ++b) {
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
    }
}

template <class UInt>
UInt get_le(const char* p) {
    UInt bits = 0;
    for (std::size_t b = 0; b < sizeof(UInt); ++b) {
        bits |= static_cast<UInt>(static_cast<unsigned char>(p[b])) << (8 * b);
    }
    return bits;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

std::string episode_location(std::size_t ci, std::int64_t step, std::size_t ei) {
    std::ostringstream os;
    os << "checkpoint " << ci << " (train_step " << step << ") episode " << ei;
    return os.str();
}

bool returns_match(double declared, double sum) {
    return std::abs(declared - sum) <= 1e-9 * std::max(1.0, std::abs(sum));
}

// Shared loader: collects every problem into `report` and returns a record
// only when no problem was found.
std::optional<RunRecord> load(const fs::path& dir, ValidationReport& report) {
    auto issue = [&](std::string where, std::string what) {
        report.issues.push_back({std::move(where), std::move(what)});
    };

    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::is_regular_file(manifest_path)) {
        issue("manifest.json", "missing manifest");
        return std::nullopt;
    }
    ojson manifest;
    try {
        manifest = ojson::parse(read_file(manifest_path));
    } catch (const std::exception& e) {
        issue("manifest.json", std::string("corrupt manifest: ") + e.what());
        return std::nullopt;
    }
    if (!manifest.is_object()) {
        issue("manifest.json", "manifest is not a JSON object");
        return std::nullopt;
    }
    if (!manifest.contains("schema_version") || !manifest["schema_version"].is_number_integer()) {
        issue("manifest.json", "missing integer schema_version");
        return std::nullopt;
    }
    if (manifest["schema_version"].get<int>() != kSchemaVersion) {
        issue("manifest.json", "unsupported schema_version " + manifest["schema_version"].dump());
        return std::nullopt;
    }

    RunRecord run;
    bool header_ok = true;
    auto get_string = [&](const char* key, std::string& out) {
        if (!manifest.contains(key) || !manifest[key].is_string()) {
            issue("manifest.json", std::string("missing string field '") + key + "'");
            header_ok = false;
            return;
        }
        out = manifest[key].get<std::string>();
    };
    get_string("run_id", run.run_id);
    get_string("env_name", run.env_name);
    get_string("algorithm", run.algorithm);
    get_string("architecture", run.architecture);
    if (!manifest.contains("n_units") || !manifest["n_units"].is_number_unsigned()) {
        issue("manifest.json", "missing non-negative integer field 'n_units'");
        header_ok = false;
    } else {
        run.n_units = manifest["n_units"].get<std::size_t>();
        if (run.n_units < 2) {
            issue("manifest.json", "n_units must be >= 2");
            header_ok = false;
        }
    }
    if (manifest.contains("annotations")) {
        const auto& ann = manifest["annotations"];
        if (!ann.is_object()) {
            issue("manifest.json", "annotations must be an object");
        } else {
            for (const auto& [key, val] : ann.items()) {
                if (!val.is_array()) {
                    issue("manifest.json", "annotation '" + key + "' is not an array");
                    continue;
                }
                std::vector<double> series;
                for (const auto& x : val) {
                    if (!x.is_number()) {
                        issue("manifest.json", "annotation '" + key + "' has a non-numeric entry");
                        break;
                    }
                    series.push_back(x.get<double>());
                }
                run.annotations[key] = std::move(series);
            }
        }
    }
    if (!manifest.contains("checkpoints") || !manifest["checkpoints"].is_array()) {
        issue("manifest.json", "missing array field 'checkpoints'");
        return std::nullopt;
    }
    const auto& checkpoints = manifest["checkpoints"];
    if (checkpoints.empty()) issue("manifest.json", "run has no checkpoints");

    std::optional<std::int64_t> previous_step;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        const auto& cj = checkpoints[ci];
        const std::string cloc = "checkpoint " + std::to_string(ci);
        if (!cj.is_object() || !cj.contains("train_step") || !cj["train_step"].is_number_integer()) {
            issue(cloc, "missing integer train_step");
            continue;
        }
        CheckpointRecord ck;
        ck.train_step = cj["train_step"].get<std::int64_t>();
        if (previous_step && ck.train_step <= *previous_step) {
            issue(cloc, "train_step " + std::to_string(ck.train_step) +
                            " is not strictly greater than the previous " +
                            std::to_string(*previous_step));
        }
        previous_step = ck.train_step;
        if (!cj.contains("episodes") || !cj["episodes"].is_array() || cj["episodes"].empty()) {
            issue(cloc, "checkpoint has no episodes");
            continue;
        }
        for (std::size_t ei = 0; ei < cj["episodes"].size(); ++ei) {
            const auto& ej = cj["episodes"][ei];
            const std::string eloc = episode_location(ci, ck.train_step, ei);
            bool ok = ej.is_object();
            for (const char* key : {"latents_file", "rewards_file"}) {
                if (!ok || !ej.contains(key) || !ej[key].is_string()) {
                    issue(eloc, std::string("missing string field '") + key + "'");
                    ok = false;
                }
            }
            if (!ok || !ej.contains("T") || !ej["T"].is_number_unsigned()) {
                issue(eloc, "missing non-negative integer field 'T'");
                ok = false;
            }
            if (!ok || !ej.contains("seed") || !ej["seed"].is_number_integer()) {
                issue(eloc, "missing integer field 'seed'");
                ok = false;
            }
            if (!ok || !ej.contains("episode_return") || !ej["episode_return"].is_number()) {
                issue(eloc, "missing numeric field 'episode_return'");
                ok = false;
            }
            if (!ok || !header_ok) continue;

            const std::size_t T = ej["T"].get<std::size_t>();
            const std::size_t n = run.n_units;
            if (T < 2) {
                issue(eloc, "T must be >= 2, got " + std::to_string(T));
                continue;
            }
            const fs::path lat_rel = ej["latents_file"].get<std::string>();
            const fs::path rew_rel = ej["rewards_file"].get<std::string>();
            if (lat_rel.is_absolute() || rew_rel.is_absolute()) {
                issue(eloc, "data file paths must be relative");
                continue;
            }
            std::string lat_bytes, rew_bytes;
            try {
                lat_bytes = read_file(dir / lat_rel);
                rew_bytes = read_file(dir / rew_rel);
            } catch (const Error& e) {
                issue(eloc, e.what());
                continue;
            }
            const std::size_t lat_expected = 4 * T * n;
            const std::size_t rew_expected = 8 * T;
            if (lat_bytes.size() != lat_expected) {
                issue(eloc, "shape mismatch: " + lat_rel.string() + " has " +
                                std::to_string(lat_bytes.size()) + " bytes, expected " +
                                std::to_string(lat_expected) + " (T=" + std::to_string(T) +
                                ", n=" + std::to_string(n) + ")");
                continue;
            }
            if (rew_bytes.size() != rew_expected) {
                issue(eloc, "reward length mismatch: " + rew_rel.string() + " has " +
                                std::to_string(rew_bytes.size() / 8) + " values, expected T=" +
                                std::to_string(T));
                continue;
            }

            EpisodeRecord ep;
            ep.seed = ej["seed"].get<std::int64_t>();
            ep.episode_return = ej["episode_return"].get<double>();
            ep.latents.episode_id = episode_name(ck.train_step, ei);
            ep.latents.values.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
            std::size_t bad = 0;
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t u = 0; u < n; ++u) {
                    const auto bits = get_le<std::uint32_t>(lat_bytes.data() + 4 * (t * n + u));
                    const float v = std::bit_cast<float>(bits);
                    if (!std::isfinite(v)) {
                        if (bad < 10) {
                            issue(eloc, "non-finite latent at row " + std::to_string(t) +
                                            ", column " + std::to_string(u));
                        }
                        ++bad;
                    }
                    ep.latents.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) = v;
                }
            }
            if (bad > 10) {
                issue(eloc, std::to_string(bad - 10) + " further non-finite latents not listed");
            }
            ep.step_rewards.resize(T);
            double sum = 0.0;
            bool rewards_finite = true;
            for (std::size_t t = 0; t < T; ++t) {
                ep.step_rewards[t] = std::bit_cast<double>(get_le<std::uint64_t>(rew_bytes.data() + 8 * t));
                if (!std::isfinite(ep.step_rewards[t])) {
                    issue(eloc, "non-finite reward at step " + std::to_string(t));
                    rewards_finite = false;
                }
                sum += ep.step_rewards[t];
            }
            if (rewards_finite && !returns_match(ep.episode_return, sum)) {
                issue(eloc, "episode_return does not equal the sum of step rewards");
            }
            ck.episodes.push_back(std::move(ep));
        }
        if (!ck.episodes.empty()) {
            std::vector<double> returns;
            for (const auto& ep : ck.episodes) returns.push_back(ep.episode_return);
            ck.checkpoint_reward = median(returns);
        }
        run.checkpoints.push_back(std::move(ck));
    }
    if (!report.ok()) return std::nullopt;
    return run;
}

ojson manifest_for(const RunRecord& run) {
    ojson m;
    m["schema_version"] = kSchemaVersion;
    m["run_id"] = run.run_id;
    m["env_name"] = run.env_name;
    m["algorithm"] = run.algorithm;
    m["architecture"] = run.architecture;
    m["n_units"] = run.n_units;
    ojson cks = ojson::array();
    for (const auto& ck : run.checkpoints) {
        ojson cj;
        cj["train_step"] = ck.train_step;
        ojson eps = ojson::array();
        for (std::size_t ei = 0; ei < ck.episodes.size(); ++ei) {
            const auto& ep = ck.episodes[ei];
            const std::string stem = "data/" + episode_name(ck.train_step, ei);
            ojson ej;
            ej["latents_file"] = stem + ".lat";
            ej["rewards_file"] = stem + ".rew";
            ej["T"] = ep.latents.steps();
            ej["seed"] = ep.seed;
            ej["episode_return"] = ep.episode_return;
            eps.push_back(std::move(ej));
        }
        cj["episodes"] = std::move(eps);
        cks.push_back(std::move(cj));
    }
    m["checkpoints"] = std::move(cks);
    if (!run.annotations.empty()) {
        ojson ann = ojson::object();
        for (const auto& [key, series] : run.annotations) ann[key] = series;
        m["annotations"] = std::move(ann);
    }
    return m;
}

}  // namespace

std::string episode_name(std::int64_t train_step, std::size_t episode_index) {
    return std::to_string(train_step) + "_" + std::to_string(episode_index);
}

EpisodeRecord make_episode(LatentTrajectory latents, std::vector<double> step_rewards,
                           std::int64_t seed) {
    EpisodeRecord ep;
    ep.latents = std::move(latents);
    ep.step_rewards = std::move(step_rewards);
    ep.episode_return = 0.0;
    for (double r : ep.step_rewards) ep.episode_return += r;
    ep.seed = seed;
    return ep;
}

CheckpointRecord make_checkpoint(std::int64_t train_step, std::vector<EpisodeRecord> episodes) {
    if (episodes.empty()) throw Error("checkpoint needs at least one episode");
    CheckpointRecord ck;
    ck.train_step = train_step;
    std::vector<double> returns;
    for (const auto& ep : episodes) returns.push_back(ep.episode_return);
    ck.checkpoint_reward = median(returns);
    ck.episodes = std::move(episodes);
    return ck;
}

void check_trajectory(const LatentTrajectory& traj) {
    if (traj.steps() < 2) throw Error("trajectory '" + traj.episode_id + "' needs T >= 2");
    if (traj.units() < 2) throw Error("trajectory '" + traj.episode_id + "' needs n >= 2 units");
    if (!traj.values.allFinite()) {
        throw Error("trajectory '" + traj.episode_id + "' contains non-finite values");
    }
}

ValidationReport validate_run(const RunRecord& run) {
    ValidationReport report;
    auto issue = [&](std::string where, std::string what) {
        report.issues.push_back({std::move(where), std::move(what)});
    };
    if (run.n_units < 2) issue("run", "n_units must be >= 2");
    if (run.checkpoints.empty()) issue("run", "run has no checkpoints");
    for (std::size_t ci = 0; ci < run.checkpoints.size(); ++ci) {
        const auto& ck = run.checkpoints[ci];
        const std::string cloc = "checkpoint " + std::to_string(ci);
        if (ci > 0 && ck.train_step <= run.checkpoints[ci - 1].train_step) {
            issue(cloc, "train_step is not strictly increasing");
        }
        if (ck.episodes.empty()) {
            issue(cloc, "checkpoint has no episodes");
            continue;
        }
        std::vector<double> returns;
        for (std::size_t ei = 0; ei < ck.episodes.size(); ++ei) {
            const auto& ep = ck.episodes[ei];
            const std::string eloc = episode_location(ci, ck.train_step, ei);
            returns.push_back(ep.episode_return);
            const auto& z = ep.latents;
            if (z.steps() < 2) issue(eloc, "T must be >= 2");
            if (z.units() != run.n_units) {
                issue(eloc, "episode has " + std::to_string(z.units()) + " units, run declares " +
                                std::to_string(run.n_units));
            }
            if (!z.values.allFinite()) issue(eloc, "latents contain non-finite values");
            if (!z.values.cast<float>().allFinite()) issue(eloc, "latents overflow float32");
            if (ep.step_rewards.size() != z.steps()) {
                issue(eloc, "step_rewards length " + std::to_string(ep.step_rewards.size()) +
                                " differs from T=" + std::to_string(z.steps()));
            }
            double sum = 0.0;
            for (double r : ep.step_rewards) sum += r;
            if (!std::isfinite(sum)) {
                issue(eloc, "non-finite step reward");
            } else if (!returns_match(ep.episode_return, sum)) {
                issue(eloc, "episode_return does not equal the sum of step rewards");
            }
        }
        if (median(returns) != ck.checkpoint_reward) {
            issue(cloc, "checkpoint_reward is not the median of episode returns");
        }
    }
    return report;
}

void write_bundle(const RunRecord& run, const fs::path& dir) {
    const ValidationReport report = validate_run(run);
    if (!report.ok()) {
        throw Error("refusing to write invalid run: " + report.issues.front().location + ": " +
                    report.issues.front().message);
    }
    std::error_code ec;
    fs::create_directories(dir / "data", ec);
    if (ec) throw Error("cannot create " + (dir / "data").string() + ": " + ec.message());

    for (const auto& ck : run.checkpoints) {
        for (std::size_t ei = 0; ei < ck.episodes.size(); ++ei) {
            const auto& ep = ck.episodes[ei];
            const auto& v = ep.latents.values;
            std::string lat;
            lat.reserve(static_cast<std::size_t>(v.size()) * 4);
            for (Eigen::Index t = 0; t < v.rows(); ++t) {
                for (Eigen::Index u = 0; u < v.cols(); ++u) {
                    put_le(lat, std::bit_cast<std::uint32_t>(static_cast<float>(v(t, u))));
                }
            }
            std::string rew;
            rew.reserve(ep.step_rewards.size() * 8);
            for (double r : ep.step_rewards) put_le(rew, std::bit_cast<std::uint64_t>(r));
            const fs::path stem = dir / "data" / episode_name(ck.train_step, ei);
            write_file(fs::path(stem).concat(".lat"), lat);
            write_file(fs::path(stem).concat(".rew"), rew);
        }
    }
    write_file(dir / "manifest.json", manifest_for(run).dump(2) + "\n");
}

RunRecord read_bundle(const fs::path& dir) {
    ValidationReport report;
    auto run = load(dir, report);
    if (!run) {
        std::string msg = "invalid bundle " + dir.string();
        for (const auto& is : report.issues) msg += "\n  " + is.location + ": " + is.message;
        throw Error(msg);
    }
    return std::move(*run);
}

ValidationReport validate_bundle(const fs::path& dir) {
    ValidationReport report;
    load(dir, report);
    return report;
}

}  // namespace phirl
