#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace phirl {

enum class ModelKind { forest, linear };

std::string_view model_name(ModelKind kind);
ModelKind parse_model(std::string_view name);

struct ForestConfig {
    std::size_t n_trees = 200;
    std::size_t min_leaf = 2;
    // Features tried per split; 0 means ceil(d / 3).
    std::size_t max_features = 0;
};

// Regression tree stored as a flat node array; leaves have feature == -1.
struct RegressionTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    std::vector<Node> nodes;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

// Grows one variance-reduction tree on a bootstrap sample drawn from seed.
RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& config,
                         std::uint64_t seed);

struct RandomForest {
    std::vector<RegressionTree> trees;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

// Tree i is grown from tree_seeds[i]; trees are grown in parallel.
RandomForest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestConfig& config,
                        const std::vector<std::uint64_t>& tree_seeds, unsigned threads = 1);

// Ordinary least squares with intercept on standardized features; the
// minimum-norm solution is used when features are collinear.
struct LinearModel {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
    Eigen::VectorXd coef;
    double intercept = 0.0;
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace phirl
