#include "phirl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "phirl/alignment.hpp"
#include "phirl/error.hpp"
#include "phirl/metrics.hpp"
#include "phirl/numeric.hpp"
#include "phirl/parallel.hpp"
#include "phirl/predict.hpp"
#include "phirl/report.hpp"
#include "phirl/series.hpp"
#include "phirl/synth.hpp"
#include "phirl/trajdata.hpp"

namespace phirl {

namespace {

namespace fs = std::filesystem;

struct Common {
    unsigned threads = 0;
    std::string out;
    std::string csv;
};

struct Windowing {
    std::size_t window = 100;
    std::size_t stride = 10;
    std::size_t interval = kDefaultFlatnessInterval;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--threads", c.threads, "Worker threads (0: $PHIRL_THREADS or all cores)");
    if (with_out) cmd->add_option("--out", c.out, "Write the JSON report here instead of stdout");
    cmd->add_option("--csv", c.csv, "Also write flat CSV tables into this directory");
}

void add_windowing(CLI::App* cmd, Windowing& w, bool with_interval) {
    cmd->add_option("--window", w.window, "Emergence window length")->check(CLI::PositiveNumber);
    cmd->add_option("--stride", w.stride, "Emergence window stride")->check(CLI::PositiveNumber);
    if (with_interval) {
        cmd->add_option("--interval", w.interval, "Flatness interval of the descriptors")->check(CLI::PositiveNumber);
    }
}

Json windowing_config(const Windowing& w, bool with_interval) {
    Json j;
    j["window"] = w.window;
    j["stride"] = w.stride;
    if (with_interval) j["flatness_interval"] = w.interval;
    return j;
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Bundles named directly, or every bundle directly under a directory.
std::vector<fs::path> expand_bundles(const std::vector<std::string>& paths) {
    std::vector<fs::path> out;
    for (const auto& p : paths) {
        const fs::path path(p);
        if (fs::exists(path / "manifest.json")) {
            out.push_back(path);
            continue;
        }
        if (!fs::is_directory(path)) throw Error("no bundle at " + p);
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) found.push_back(entry.path());
        }
        if (found.empty()) throw Error("no bundle at " + p + " (no manifest.json here or in its subdirectories)");
        std::sort(found.begin(), found.end());
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

Json string_list(const std::vector<fs::path>& paths) {
    Json j = Json::array();
    for (const auto& p : paths) j.push_back(p.generic_string());
    return j;
}

std::vector<RunSeries> load_series(const std::vector<fs::path>& bundles, const SeriesOptions& options,
                                   unsigned threads) {
    std::vector<RunSeries> out;
    out.reserve(bundles.size());
    for (const auto& b : bundles) out.push_back(compute_series(read_bundle(b), options, threads));
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed for " + path.string());
}

void write_csv(const std::string& dir, const std::string& name, const std::string& body) {
    if (dir.empty()) return;
    write_text(fs::path(dir) / name, body);
}

void emit(const Common& c, const std::string& command, Json config, Json results,
          const std::vector<std::string>& warnings, std::ostream& out) {
    const std::string text = dump_report(make_envelope(command, std::move(config), std::move(results), warnings));
    if (c.out.empty()) {
        out << text;
    } else {
        write_text(c.out, text);
    }
}

Json test_json(const TestResult& t) {
    Json j;
    j["statistic"] = t.statistic;
    j["p_value"] = t.p_value;
    j["n"] = t.n;
    return j;
}

int cmd_validate(const std::string& bundle, const Common& c, std::ostream& out) {
    const auto report = validate_bundle(bundle);
    Json issues = Json::array();
    for (const auto& i : report.issues) issues.push_back({{"location", i.location}, {"message", i.message}});
    Json results;
    results["valid"] = report.ok();
    results["n_issues"] = report.issues.size();
    results["issues"] = std::move(issues);
    Json config;
    config["bundle"] = fs::path(bundle).generic_string();
    emit(c, "validate", config, results, {}, out);
    if (!c.csv.empty()) {
        std::string csv = "location,message\n";
        for (const auto& i : report.issues) csv += "\"" + i.location + "\",\"" + i.message + "\"\n";
        write_csv(c.csv, "validate.csv", csv);
    }
    return report.ok() ? 0 : 1;
}

int cmd_emerge(const std::string& bundle, const Windowing& w, const Common& c, std::ostream& out) {
    SeriesOptions opt;
    opt.window = {w.window, w.stride};
    opt.with_metrics = false;
    const RunSeries s = compute_series(read_bundle(bundle), opt, resolve_threads(c.threads));
    Json checkpoints = Json::array();
    std::string csv = "train_step,checkpoint_reward,phi_r\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        Json episodes = Json::array();
        for (const auto& ep : s.episodes[k]) {
            Json e;
            e["median"] = ep.median;
            e["values"] = ep.values;
            episodes.push_back(std::move(e));
        }
        Json ck;
        ck["train_step"] = s.train_steps[k];
        ck["checkpoint_reward"] = s.rewards[k];
        ck["phi_r"] = s.phi_r[k];
        ck["profile"] = s.phi_profiles[k];
        ck["episodes"] = std::move(episodes);
        checkpoints.push_back(std::move(ck));
        csv += std::to_string(s.train_steps[k]) + "," + fmt(s.rewards[k]) + "," + fmt(s.phi_r[k]) + "\n";
    }
    Json results;
    results["run_id"] = s.run_id;
    results["series"] = {{"train_step", s.train_steps}, {"checkpoint_reward", s.rewards}, {"phi_r", s.phi_r}};
    results["checkpoints"] = std::move(checkpoints);
    Json config;
    config["bundle"] = fs::path(bundle).generic_string();
    config.update(windowing_config(w, false));
    emit(c, "emerge", config, results, {}, out);
    write_csv(c.csv, "emerge.csv", csv);
    return 0;
}

int cmd_metrics(const std::string& bundle, const Common& c, std::ostream& out) {
    SeriesOptions opt;
    opt.with_emergence = false;
    const RunSeries s = compute_series(read_bundle(bundle), opt, resolve_threads(c.threads));
    Json checkpoints = Json::array();
    std::string csv = "train_step,checkpoint_reward";
    for (auto name : kMetricNames) csv += "," + std::string(name);
    csv += "\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        Json medians, episodes = Json::array();
        for (std::size_t m = 0; m < 5; ++m) medians[std::string(kMetricNames[m])] = s.metric_series[m][k];
        for (const auto& mv : s.baseline[k]) {
            Json e;
            const auto a = mv.as_array();
            for (std::size_t m = 0; m < 5; ++m) e[std::string(kMetricNames[m])] = a[m];
            episodes.push_back(std::move(e));
        }
        Json ck;
        ck["train_step"] = s.train_steps[k];
        ck["checkpoint_reward"] = s.rewards[k];
        ck["median"] = std::move(medians);
        ck["episodes"] = std::move(episodes);
        checkpoints.push_back(std::move(ck));
        csv += std::to_string(s.train_steps[k]) + "," + fmt(s.rewards[k]);
        for (std::size_t m = 0; m < 5; ++m) csv += "," + fmt(s.metric_series[m][k]);
        csv += "\n";
    }
    Json series;
    series["train_step"] = s.train_steps;
    for (std::size_t m = 0; m < 5; ++m) series[std::string(kMetricNames[m])] = s.metric_series[m];
    Json results;
    results["run_id"] = s.run_id;
    results["series"] = std::move(series);
    results["checkpoints"] = std::move(checkpoints);
    Json config;
    config["bundle"] = fs::path(bundle).generic_string();
    emit(c, "metrics", config, results, {}, out);
    write_csv(c.csv, "metrics.csv", csv);
    return 0;
}

int cmd_screen(const std::vector<std::string>& paths, double alpha, const Windowing& w, const Common& c,
               std::ostream& out) {
    const auto bundles = expand_bundles(paths);
    SeriesOptions opt;
    opt.window = {w.window, w.stride};
    const auto runs = load_series(bundles, opt, resolve_threads(c.threads));
    const ScreenReport rep = screen_series(runs, alpha);
    Json metrics = Json::array();
    for (std::size_t m = 0; m < 5; ++m) {
        Json j;
        j["metric"] = kMetricNames[m];
        j["fraction_significant"] = rep.fraction_significant[m];
        j["runs_screened"] = rep.runs_screened[m];
        metrics.push_back(std::move(j));
    }
    Json cells = Json::array();
    std::string csv = "run_id,metric,rho,p_value,significant\n";
    for (const auto& cell : rep.cells) {
        Json j;
        j["run_id"] = cell.run_id;
        j["metric"] = cell.metric;
        j["rho"] = cell.rho;
        j["p_value"] = cell.p_value;
        j["significant"] = cell.significant;
        cells.push_back(std::move(j));
        csv += cell.run_id + "," + cell.metric + "," + fmt(cell.rho) + "," + fmt(cell.p_value) + "," +
               (cell.significant ? "1" : "0") + "\n";
    }
    Json results;
    results["n_runs"] = runs.size();
    results["metrics"] = std::move(metrics);
    results["cells"] = std::move(cells);
    Json config;
    config["bundles"] = string_list(bundles);
    config["alpha"] = alpha;
    config.update(windowing_config(w, false));
    emit(c, "screen", config, results, rep.warnings, out);
    write_csv(c.csv, "screen.csv", csv);
    return 0;
}

int cmd_align(const std::vector<std::string>& paths, const AlignOptions& a, const Windowing& w, const Common& c,
              std::ostream& out) {
    const auto bundles = expand_bundles(paths);
    SeriesOptions opt;
    opt.window = {w.window, w.stride};
    opt.with_metrics = false;
    const unsigned threads = resolve_threads(c.threads);
    const auto runs = load_series(bundles, opt, threads);
    std::vector<std::string> ids;
    std::vector<Eigen::MatrixXd> rows;
    std::vector<std::vector<double>> rewards;
    for (const auto& r : runs) {
        ids.push_back(r.run_id);
        rows.push_back(profile_descriptors(r, w.interval));
        rewards.push_back(r.rewards);
    }
    const CohortAlignment cohort = align_cohort(ids, rows, rewards, a, threads);
    std::vector<std::string> warnings;
    Json table = Json::array();
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_env;
    std::string csv = "run_id,env_name,global_alignment,local_alignment,degenerate\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& ra = cohort.runs[r];
        if (ra.scores.degenerate) warnings.push_back("run " + ra.run_id + ": degenerate alignment, scores set to 0");
        std::vector<double> abs_null;
        for (double v : ra.null_scores) abs_null.push_back(std::abs(v));
        Json j;
        j["run_id"] = ra.run_id;
        j["env_name"] = runs[r].env_name;
        j["global_alignment"] = ra.scores.global_alignment;
        j["local_alignment"] = ra.scores.local_alignment;
        j["degenerate"] = ra.scores.degenerate;
        j["m"] = ra.scores.m;
        j["reward_gradient"] = std::vector<double>(ra.scores.gradient.data(),
                                                   ra.scores.gradient.data() + ra.scores.gradient.size());
        j["null_mean"] = mean(ra.null_scores);
        j["null_abs_median"] = median(abs_null);
        table.push_back(std::move(j));
        by_env[runs[r].env_name].first.push_back(ra.scores.global_alignment);
        by_env[runs[r].env_name].second.push_back(ra.scores.local_alignment);
        csv += ra.run_id + "," + runs[r].env_name + "," + fmt(ra.scores.global_alignment) + "," +
               fmt(ra.scores.local_alignment) + "," + (ra.scores.degenerate ? "1" : "0") + "\n";
    }
    Json envs = Json::array();
    for (const auto& [env, scores] : by_env) {
        Json j;
        j["env_name"] = env;
        j["runs"] = scores.first.size();
        j["median_global_alignment"] = median(scores.first);
        j["median_local_alignment"] = median(scores.second);
        envs.push_back(std::move(j));
    }
    Json results;
    results["n_runs"] = runs.size();
    results["median_global_alignment"] = cohort.median_global;
    results["median_local_alignment"] = cohort.median_local;
    results["versus_random_projections"] = test_json(cohort.versus_null);
    results["environments"] = std::move(envs);
    results["runs"] = std::move(table);
    Json config;
    config["bundles"] = string_list(bundles);
    config["m"] = a.m;
    config["residualize"] = a.residualize;
    config["null_draws"] = a.null_draws;
    config["seed"] = a.seed;
    config.update(windowing_config(w, true));
    emit(c, "align", config, results, warnings, out);
    write_csv(c.csv, "align.csv", csv);
    return 0;
}

int cmd_predict(const std::vector<std::string>& paths, const PredictOptions& p, const Windowing& w, const Common& c,
                std::ostream& out) {
    const auto bundles = expand_bundles(paths);
    SeriesOptions opt;
    opt.window = {w.window, w.stride};
    const unsigned threads = resolve_threads(c.threads);
    const auto runs = load_series(bundles, opt, threads);
    PredictOptions options = p;
    options.flatness_interval = w.interval;
    const PredictionReport rep = fit_predict_final_reward(runs, options, threads);
    Json sets = Json::array();
    std::string csv = "feature_set,repeat,rho\n";
    for (const auto& fs_scores : rep.feature_sets) {
        Json j;
        j["feature_set"] = fs_scores.name;
        j["median_rho"] = fs_scores.median_rho;
        j["rho"] = fs_scores.rho;
        sets.push_back(std::move(j));
        for (std::size_t r = 0; r < fs_scores.rho.size(); ++r) {
            csv += fs_scores.name + "," + std::to_string(r) + "," + fmt(fs_scores.rho[r]) + "\n";
        }
    }
    Json comparisons = Json::array();
    for (const auto& cmp : rep.comparisons) {
        Json j;
        j["a"] = cmp.a;
        j["b"] = cmp.b;
        j["U"] = cmp.test.statistic;
        j["p_value"] = cmp.test.p_value;
        comparisons.push_back(std::move(j));
    }
    Json runs_json = Json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        runs_json.push_back({{"run_id", runs[r].run_id}, {"target", rep.targets[r]}});
    }
    Json results;
    results["model"] = rep.model;
    results["fold_seed"] = rep.fold_seed;
    results["n_runs"] = rep.n_runs;
    results["early_checkpoints"] = rep.early_checkpoints;
    results["feature_sets"] = std::move(sets);
    results["comparisons"] = std::move(comparisons);
    results["runs"] = std::move(runs_json);
    Json config;
    config["bundles"] = string_list(bundles);
    config["early_fraction"] = p.early_fraction;
    config["folds"] = p.folds;
    config["repeats"] = p.repeats;
    config["model"] = model_name(p.model);
    config["seed"] = p.seed;
    config["n_trees"] = p.forest.n_trees;
    config["min_leaf"] = p.forest.min_leaf;
    config["permute_targets"] = p.permute_targets;
    Json set_names = Json::array();
    if (p.feature_sets.empty()) {
        for (auto s : kFeatureSetNames) set_names.push_back(s);
    } else {
        for (const auto& s : p.feature_sets) set_names.push_back(s);
    }
    config["feature_sets"] = std::move(set_names);
    config.update(windowing_config(w, true));
    emit(c, "predict", config, results, rep.warnings, out);
    write_csv(c.csv, "predict.csv", csv);
    return 0;
}

int cmd_synth(const std::string& profile_path, const std::string& out_dir, std::uint64_t seed, std::size_t n_runs,
              const Common& c, std::ostream& out) {
    if (n_runs < 1) throw Error("--runs must be at least 1");
    const RunProfile profile = load_profile(profile_path);
    Json runs_json = Json::array();
    std::string csv = "run_id,path,coupling_end\n";
    if (n_runs == 1) {
        RunRecord run = gen_synthetic_run(profile, seed);
        write_bundle(run, out_dir);
        runs_json.push_back({{"run_id", run.run_id}, {"path", fs::path(out_dir).generic_string()},
                             {"coupling_end", run.annotations.at("coupling_end").front()}});
        csv += run.run_id + "," + fs::path(out_dir).generic_string() + "," +
               fmt(run.annotations.at("coupling_end").front()) + "\n";
    } else {
        const auto runs = gen_synthetic_cohort(profile, n_runs, seed, resolve_threads(c.threads));
        for (const auto& run : runs) {
            const fs::path dir = fs::path(out_dir) / run.run_id;
            write_bundle(run, dir);
            runs_json.push_back({{"run_id", run.run_id}, {"path", dir.generic_string()},
                                 {"coupling_end", run.annotations.at("coupling_end").front()}});
            csv += run.run_id + "," + dir.generic_string() + "," + fmt(run.annotations.at("coupling_end").front()) + "\n";
        }
    }
    Json config;
    config["profile"] = Json::parse(profile_to_json(profile));
    config["profile_path"] = fs::path(profile_path).generic_string();
    config["out"] = fs::path(out_dir).generic_string();
    config["seed"] = seed;
    config["runs"] = n_runs;
    Json results;
    results["runs"] = std::move(runs_json);
    Common report_to_stdout = c;
    report_to_stdout.out.clear();
    emit(report_to_stdout, "synth", config, results, {}, out);
    write_csv(c.csv, "synth.csv", csv);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal emergence analysis of latent-activation trajectories", "phirl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    app.failure_message(CLI::FailureMessage::help);

    Common common;
    Windowing win;

    std::string bundle;
    auto* validate = app.add_subcommand("validate", "Check a trajectory bundle");
    validate->add_option("bundle", bundle, "Bundle directory")->required();
    add_common(validate, common);

    auto* emerge = app.add_subcommand("emerge", "Windowed Phi^r per episode and checkpoint");
    emerge->add_option("bundle", bundle, "Bundle directory")->required();
    add_windowing(emerge, win, false);
    add_common(emerge, common);

    auto* metrics = app.add_subcommand("metrics", "Baseline representation metrics per checkpoint");
    metrics->add_option("bundle", bundle, "Bundle directory")->required();
    add_common(metrics, common);

    std::vector<std::string> bundles;
    double alpha = 0.05;
    auto* screen = app.add_subcommand("screen", "Spearman screen of baseline metrics against Phi^r");
    screen->add_option("bundles", bundles, "Bundle directories, or directories of bundles")->required();
    screen->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    add_windowing(screen, win, false);
    add_common(screen, common);

    AlignOptions align_opt;
    bool no_residualize = false;
    auto* align = app.add_subcommand("align", "Reward alignment of the Phi^r descriptor embedding");
    align->add_option("bundles", bundles, "Bundle directories, or directories of bundles")->required();
    align->add_option("--m", align_opt.m, "Embedding dimension")->check(CLI::Range(1, 8));
    align->add_flag("--no-residualize", no_residualize, "Skip time residualization");
    align->add_option("--null-draws", align_opt.null_draws, "Random projections per run")->check(CLI::Range(100, 100000000));
    align->add_option("--seed", align_opt.seed, "Seed of the random projections");
    add_windowing(align, win, true);
    add_common(align, common);

    PredictOptions pred_opt;
    std::string model = "forest";
    std::string feature_sets;
    auto* predict = app.add_subcommand("predict", "Cross-validated prediction of final reward from early checkpoints");
    predict->add_option("bundles", bundles, "Bundle directories, or directories of bundles")->required();
    predict->add_option("--early-frac", pred_opt.early_fraction, "Leading fraction of checkpoints used as input");
    predict->add_option("--folds", pred_opt.folds, "Cross-validation folds");
    predict->add_option("--repeats", pred_opt.repeats, "Cross-validation repeats");
    predict->add_option("--model", model, "forest or linear");
    predict->add_option("--seed", pred_opt.seed, "Seed for folds and trees");
    predict->add_option("--trees", pred_opt.forest.n_trees, "Trees in the forest")->check(CLI::PositiveNumber);
    predict->add_option("--feature-sets", feature_sets, "Comma-separated subset of feature sets");
    predict->add_flag("--permute-targets", pred_opt.permute_targets, "Shuffle the targets (null control)");
    add_windowing(predict, win, true);
    add_common(predict, common);

    std::string profile, synth_out;
    std::uint64_t synth_seed = 0;
    std::size_t n_runs = 1;
    auto* synth = app.add_subcommand("synth", "Generate synthetic runs from a profile");
    synth->add_option("--profile", profile, "Run profile (JSON)")->required();
    synth->add_option("--out", synth_out, "Output bundle directory (parent directory when --runs > 1)")->required();
    synth->add_option("--seed", synth_seed, "Seed");
    synth->add_option("--runs", n_runs, "Number of runs");
    add_common(synth, common, false);

    std::vector<const char*> argv{"phirl"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(bundle, common, out);
        if (*emerge) return cmd_emerge(bundle, win, common, out);
        if (*metrics) return cmd_metrics(bundle, common, out);
        if (*screen) return cmd_screen(bundles, alpha, win, common, out);
        if (*align) {
            align_opt.residualize = !no_residualize;
            return cmd_align(bundles, align_opt, win, common, out);
        }
        if (*predict) {
            pred_opt.model = parse_model(model);
            std::stringstream ss(feature_sets);
            for (std::string item; std::getline(ss, item, ',');) {
                if (!item.empty()) pred_opt.feature_sets.push_back(item);
            }
            return cmd_predict(bundles, pred_opt, win, common, out);
        }
        if (*synth) return cmd_synth(profile, synth_out, synth_seed, n_runs, common, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace phirl
