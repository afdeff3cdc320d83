#include "phirl/series.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "phirl/error.hpp"
#include "phirl/numeric.hpp"
#include "phirl/parallel.hpp"

namespace phirl {

std::vector<double> elementwise_median(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw Error("elementwise_median: no sequences");
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& r : rows) len = std::min(len, r.size());
    std::vector<double> out(len), column(rows.size());
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t e = 0; e < rows.size(); ++e) column[e] = rows[e][i];
        out[i] = median(column);
    }
    return out;
}

Eigen::MatrixXd profile_descriptors(const RunSeries& run, std::size_t flatness_interval) {
    const auto K = static_cast<Eigen::Index>(run.phi_profiles.size());
    Eigen::MatrixXd out(K, 8);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& profile = run.phi_profiles[static_cast<std::size_t>(k)];
        if (profile.size() < 3) {
            throw Error("run " + run.run_id + ": checkpoint " + std::to_string(k) + " has " +
                        std::to_string(profile.size()) + " emergence windows, descriptors need 3 (reduce --stride)");
        }
        const auto d = descriptors(profile, flatness_interval).as_array();
        for (Eigen::Index j = 0; j < 8; ++j) out(k, j) = d[static_cast<std::size_t>(j)];
    }
    return out;
}

RunSeries compute_series(const RunRecord& run, const SeriesOptions& options, unsigned threads) {
    RunSeries out;
    out.run_id = run.run_id;
    out.env_name = run.env_name;
    const std::size_t K = run.checkpoints.size();
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    out.episodes.resize(K);
    out.baseline.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& ck = run.checkpoints[k];
        out.train_steps.push_back(ck.train_step);
        out.rewards.push_back(ck.checkpoint_reward);
        out.episodes[k].resize(options.with_emergence ? ck.episodes.size() : 0);
        out.baseline[k].resize(options.with_metrics ? ck.episodes.size() : 0);
        for (std::size_t e = 0; e < ck.episodes.size(); ++e) jobs.emplace_back(k, e);
    }
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const auto [k, e] = jobs[j];
        const auto& ep = run.checkpoints[k].episodes[e];
        try {
            if (options.with_emergence) out.episodes[k][e] = emergence_trajectory(ep, options.window);
            if (options.with_metrics) out.baseline[k][e] = baseline_metrics(ep.latents);
        } catch (const Error& err) {
            throw Error("run " + run.run_id + ", episode " + ep.latents.episode_id + ": " + err.what());
        }
    });
    for (std::size_t k = 0; k < K; ++k) {
        if (options.with_emergence) {
            std::vector<double> medians;
            std::vector<std::vector<double>> profiles;
            for (const auto& tr : out.episodes[k]) {
                medians.push_back(tr.median);
                profiles.push_back(tr.values);
            }
            out.phi_r.push_back(median(medians));
            out.phi_profiles.push_back(elementwise_median(profiles));
        }
        if (options.with_metrics) {
            for (std::size_t m = 0; m < 5; ++m) {
                std::vector<double> v;
                for (const auto& mv : out.baseline[k]) v.push_back(mv.as_array()[m]);
                out.metric_series[m].push_back(median(v));
            }
        }
    }
    return out;
}

}  // namespace phirl
