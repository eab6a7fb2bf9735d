#pragma once

#include <cstddef>
#include <vector>

#include "deltaflow/common.hpp"

namespace deltaflow {

/// One node of a binary regression tree. Internal nodes route x[feature] <=
/// threshold to the left child; `cover` counts the training rows that reached
/// the node. Leaves carry feature = -1 and a fitted value.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
    double cover = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const std::vector<double>& x) const;
    /// Cover-weighted mean leaf value (the prediction with no features known).
    double expected_value() const;
};

/// Least-squares gradient boosting: prediction = base + lr * sum of trees.
struct GbtModel {
    double base = 0.0;
    double learning_rate = 0.1;
    int max_depth = 3;
    std::size_t n_features = 0;
    std::vector<RegressionTree> trees;

    double predict(const std::vector<double>& x) const;
};

struct GbtOptions {
    int trees = 100;
    int depth = 3;
    double lr = 0.1;
};

/// Greedy variance-reduction splits on the squared-error gradient, one tree
/// per boosting round. Deterministic: ties break toward the lower feature
/// index and smaller threshold.
GbtModel fit_gbt(const std::vector<std::vector<double>>& xs, const std::vector<double>& target,
                 const GbtOptions& opt);

/// Coefficient of determination of the model on the given rows.
double gbt_r2(const GbtModel& model, const std::vector<std::vector<double>>& xs,
              const std::vector<double>& target);

}  // namespace deltaflow
