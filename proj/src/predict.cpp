#include "phirl/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phirl/error.hpp"
#include "phirl/metrics.hpp"
#include "phirl/numeric.hpp"
#include "phirl/parallel.hpp"
#include "phirl/rng.hpp"

namespace phirl {

namespace {

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

constexpr std::uint64_t kFoldTag = 0x666f6c64;  // "fold"
constexpr std::uint64_t kPermuteTag = 0x7065726d;

std::vector<std::string> resolve_sets(const std::vector<std::string>& requested) {
    if (requested.empty()) return {kFeatureSetNames.begin(), kFeatureSetNames.end()};
    for (const auto& s : requested) {
        if (std::find(kFeatureSetNames.begin(), kFeatureSetNames.end(), s) == kFeatureSetNames.end()) {
            throw Error("unknown feature set '" + s + "'");
        }
    }
    return requested;
}

}  // namespace

ScreenReport screen_series(const std::vector<RunSeries>& runs, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("screen: alpha must be in (0, 1)");
    ScreenReport out;
    out.alpha = alpha;
    std::array<std::size_t, 5> hits{};
    for (const auto& run : runs) {
        if (run.size() < kMinScreenCheckpoints) {
            out.warnings.push_back("run " + run.run_id + " skipped: " + std::to_string(run.size()) +
                                   " checkpoints, need " + std::to_string(kMinScreenCheckpoints));
            continue;
        }
        if (is_constant(run.phi_r)) {
            out.warnings.push_back("run " + run.run_id + " skipped: constant Phi^r series");
            continue;
        }
        for (std::size_t m = 0; m < 5; ++m) {
            const auto& series = run.metric_series[m];
            const std::string name(kMetricNames[m]);
            if (is_constant(series)) {
                out.warnings.push_back("run " + run.run_id + ", " + name + " skipped: constant series");
                continue;
            }
            const TestResult r = spearman(series, run.phi_r);
            ScreenCell cell{run.run_id, name, r.statistic, r.p_value, r.p_value < alpha};
            ++out.runs_screened[m];
            if (cell.significant) ++hits[m];
            out.cells.push_back(std::move(cell));
        }
    }
    for (std::size_t m = 0; m < 5; ++m) {
        out.fraction_significant[m] =
            out.runs_screened[m] > 0 ? static_cast<double>(hits[m]) / static_cast<double>(out.runs_screened[m]) : 0.0;
    }
    return out;
}

std::vector<std::size_t> cv_folds(std::size_t n, std::size_t folds, std::uint64_t seed, std::size_t repeat) {
    if (folds < 2) throw Error("cross-validation needs at least 2 folds");
    if (n < folds) throw Error("cross-validation: fewer items (" + std::to_string(n) + ") than folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed({seed, kFoldTag, repeat}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
    return fold;
}

std::size_t early_checkpoints(std::size_t n_checkpoints, double early_fraction) {
    if (!(early_fraction > 0.0 && early_fraction < 1.0)) throw Error("early fraction must be in (0, 1)");
    const double raw = early_fraction * static_cast<double>(n_checkpoints);
    auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    k = std::max<std::size_t>(k, 3);
    if (k > n_checkpoints) {
        throw Error("early window needs at least 3 checkpoints, run has " + std::to_string(n_checkpoints));
    }
    return k;
}

Eigen::MatrixXd feature_matrix(const std::vector<RunSeries>& runs, std::string_view feature_set,
                               double early_fraction, std::size_t flatness_interval) {
    auto series_of = [&](const RunSeries& run) {
        std::vector<const std::vector<double>*> s;
        const bool emergence = feature_set == "emergence_descriptors" || feature_set == "all_plus_emergence";
        const bool all = feature_set == "all_baselines" || feature_set == "all_plus_emergence";
        if (emergence) s.push_back(&run.phi_r);
        for (std::size_t m = 0; m < 5; ++m) {
            if (all || feature_set == kMetricNames[m]) s.push_back(&run.metric_series[m]);
        }
        if (s.empty()) throw Error("unknown feature set '" + std::string(feature_set) + "'");
        return s;
    };
    if (runs.empty()) return {};
    const std::size_t width = series_of(runs.front()).size() * 8;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(runs.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const std::size_t k = early_checkpoints(runs[r].size(), early_fraction);
        const auto all = series_of(runs[r]);
        for (std::size_t s = 0; s < all.size(); ++s) {
            if (all[s]->size() < runs[r].size()) {
                throw Error("run " + runs[r].run_id + " lacks the series needed for " + std::string(feature_set));
            }
            const auto d = descriptors(std::span<const double>(all[s]->data(), k), flatness_interval).as_array();
            for (std::size_t j = 0; j < 8; ++j) {
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s * 8 + j)) = d[j];
            }
        }
    }
    return x;
}

PredictionReport fit_predict_final_reward(const std::vector<RunSeries>& runs, const PredictOptions& options,
                                          unsigned threads) {
    const std::size_t n = runs.size();
    if (n < 10) throw Error("prediction needs at least 10 runs, got " + std::to_string(n));
    if (options.folds < 2) throw Error("prediction needs at least 2 folds");
    if (options.folds > n) throw Error("more folds than runs");
    if (options.repeats < 1) throw Error("prediction needs at least 1 repeat");
    const auto sets = resolve_sets(options.feature_sets);

    PredictionReport out;
    out.model = std::string(model_name(options.model));
    out.fold_seed = options.seed;
    out.n_runs = n;
    std::size_t min_k = runs.front().size();
    for (const auto& r : runs) min_k = std::min(min_k, r.size());
    out.early_checkpoints = early_checkpoints(min_k, options.early_fraction);

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        if (runs[r].rewards.empty()) throw Error("run " + runs[r].run_id + " has no checkpoints");
        y(static_cast<Eigen::Index>(r)) = runs[r].rewards.back();
    }
    if (is_constant(std::span<const double>(y.data(), n))) throw Error("final rewards are all equal; nothing to predict");
    out.targets.assign(y.data(), y.data() + n);
    // The control draws a fresh permutation for every repeat.
    auto targets_for = [&](std::size_t rep) {
        Eigen::VectorXd t = y;
        if (!options.permute_targets) return t;
        Rng rng(derive_seed({options.seed, kPermuteTag, rep}));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(t(static_cast<Eigen::Index>(i - 1)), t(static_cast<Eigen::Index>(rng.index(i))));
        }
        return t;
    };

    for (const auto& set : sets) {
        const Eigen::MatrixXd x = feature_matrix(runs, set, options.early_fraction, options.flatness_interval);
        FeatureSetScores scores;
        scores.name = set;
        for (std::size_t rep = 0; rep < options.repeats; ++rep) {
            const auto fold = cv_folds(n, options.folds, options.seed, rep);
            const Eigen::VectorXd target = targets_for(rep);
            Eigen::VectorXd pred(static_cast<Eigen::Index>(n));
            for (std::size_t f = 0; f < options.folds; ++f) {
                std::vector<Eigen::Index> train, test;
                for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
                const Eigen::MatrixXd xtr = x(train, Eigen::all);
                const Eigen::VectorXd ytr = target(train);
                const Eigen::MatrixXd xte = x(test, Eigen::all);
                Eigen::VectorXd p;
                if (options.model == ModelKind::forest) {
                    std::vector<std::uint64_t> seeds(options.forest.n_trees);
                    for (std::size_t t = 0; t < seeds.size(); ++t) seeds[t] = derive_seed({options.seed, rep, f, t});
                    p = fit_forest(xtr, ytr, options.forest, seeds, threads).predict(xte);
                } else {
                    p = fit_linear(xtr, ytr).predict(xte);
                }
                for (std::size_t i = 0; i < test.size(); ++i) pred(test[i]) = p(static_cast<Eigen::Index>(i));
            }
            double rho = 0.0;
            if (is_constant(std::span<const double>(pred.data(), n))) {
                out.warnings.push_back(set + ", repeat " + std::to_string(rep) + ": constant predictions, rho set to 0");
            } else {
                rho = spearman(std::span<const double>(pred.data(), n), std::span<const double>(target.data(), n)).statistic;
            }
            scores.rho.push_back(rho);
        }
        scores.median_rho = median(scores.rho);
        out.feature_sets.push_back(std::move(scores));
    }
    for (std::size_t a = 0; a < out.feature_sets.size(); ++a) {
        for (std::size_t b = a + 1; b < out.feature_sets.size(); ++b) {
            out.comparisons.push_back({out.feature_sets[a].name, out.feature_sets[b].name,
                                       mannwhitney(out.feature_sets[a].rho, out.feature_sets[b].rho)});
        }
    }
    return out;
}

}  // namespace phirl
