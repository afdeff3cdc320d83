#include "phirl/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "phirl/error.hpp"
#include "phirl/parallel.hpp"
#include "phirl/rng.hpp"

namespace phirl {

std::string_view model_name(ModelKind kind) { return kind == ModelKind::forest ? "forest" : "linear"; }

ModelKind parse_model(std::string_view name) {
    if (name == "forest") return ModelKind::forest;
    if (name == "linear") return ModelKind::linear;
    throw Error("unknown model '" + std::string(name) + "' (expected forest or linear)");
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& n = nodes[static_cast<std::size_t>(i)];
        i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

struct Builder {
    const Eigen::MatrixXd& x;
    const Eigen::VectorXd& y;
    std::size_t min_leaf;
    std::size_t mtry;
    Rng& rng;
    RegressionTree tree;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
        std::size_t n_left = 0;
    };

    // Best split of rows on feature f by squared-error reduction.
    void try_feature(std::vector<std::size_t>& rows, int f, double total, Split& best) {
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            const double xa = x(static_cast<Eigen::Index>(a), f), xb = x(static_cast<Eigen::Index>(b), f);
            return xa < xb || (xa == xb && a < b);
        });
        const std::size_t n = rows.size();
        const double nd = static_cast<double>(n);
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += y(static_cast<Eigen::Index>(rows[i]));
            const std::size_t nl = i + 1;
            if (nl < min_leaf || n - nl < min_leaf) continue;
            const double xl = x(static_cast<Eigen::Index>(rows[i]), f);
            const double xr = x(static_cast<Eigen::Index>(rows[i + 1]), f);
            if (!(xl < xr)) continue;
            const double right_sum = total - left_sum;
            const double nld = static_cast<double>(nl);
            // Reduction in SSE equals this minus total^2 / n.
            const double gain = left_sum * left_sum / nld + right_sum * right_sum / (nd - nld) - total * total / nd;
            if (gain > best.gain + 1e-12 * std::abs(total * total / nd) + 1e-15) {
                best.feature = f;
                best.threshold = 0.5 * (xl + xr);
                if (!(best.threshold < xr)) best.threshold = xl;
                best.gain = gain;
                best.n_left = nl;
            }
        }
    }

    int build(std::vector<std::size_t> rows) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double total = 0.0;
        for (std::size_t r : rows) total += y(static_cast<Eigen::Index>(r));
        const double mean = total / static_cast<double>(rows.size());
        tree.nodes[static_cast<std::size_t>(id)].value = mean;
        if (rows.size() < 2 * min_leaf) return id;
        bool pure = true;
        for (std::size_t r : rows) {
            if (y(static_cast<Eigen::Index>(r)) != y(static_cast<Eigen::Index>(rows.front()))) {
                pure = false;
                break;
            }
        }
        if (pure) return id;

        const auto d = static_cast<std::size_t>(x.cols());
        std::vector<int> features(d);
        std::iota(features.begin(), features.end(), 0);
        // Partial Fisher-Yates: the first mtry entries are the sampled features.
        for (std::size_t i = 0; i < mtry && i + 1 < d; ++i) {
            const std::size_t j = i + rng.index(d - i);
            std::swap(features[i], features[j]);
        }
        Split best;
        for (std::size_t i = 0; i < mtry; ++i) try_feature(rows, features[i], total, best);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(std::move(left));
        const int r = build(std::move(right));
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

}  // namespace

RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& config,
                         std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    if (n == 0 || d == 0) throw Error("grow_tree: empty training data");
    if (static_cast<std::size_t>(y.size()) != n) throw Error("grow_tree: target length differs from rows");
    const std::size_t mtry = std::min(d, config.max_features > 0 ? config.max_features : (d + 2) / 3);
    Rng rng(seed);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.index(n);
    Builder b{x, y, std::max<std::size_t>(1, config.min_leaf), mtry, rng, {}};
    b.build(std::move(rows));
    return std::move(b.tree);
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x.row(i));
        out(i) = s / static_cast<double>(trees.size());
    }
    return out;
}

RandomForest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& config,
                        const std::vector<std::uint64_t>& tree_seeds, unsigned threads) {
    if (tree_seeds.empty()) throw Error("fit_forest: need at least one tree");
    RandomForest forest;
    forest.trees.resize(tree_seeds.size());
    parallel_for(tree_seeds.size(), threads,
                 [&](std::size_t i) { forest.trees[i] = grow_tree(x, y, config, tree_seeds[i]); });
    return forest;
}

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = (x.rowwise() - mean).array().rowwise() / scale.array();
    return (z * coef).array() + intercept;
}

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    if (n < 2) throw Error("fit_linear: need at least 2 rows");
    if (y.size() != n) throw Error("fit_linear: target length differs from rows");
    LinearModel model;
    model.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean;
    model.scale = (centered.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index j = 0; j < model.scale.size(); ++j) {
        if (!(model.scale(j) > 1e-12 * std::max(1.0, std::abs(model.mean(j))))) model.scale(j) = 1.0;
    }
    Eigen::MatrixXd z = centered.array().rowwise() / model.scale.array();
    // Columns that were constant stay exactly zero and get a zero coefficient.
    model.intercept = y.mean();
    const Eigen::VectorXd yc = y.array() - model.intercept;
    model.coef = z.completeOrthogonalDecomposition().solve(yc);
    return model;
}

}  // namespace phirl
