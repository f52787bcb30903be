#pragma once

// AdaBoost over decision stumps and least-squares boosting of regression trees.

#include <cstddef>
#include <vector>

#include "wtdiag/standardizer.hpp"

namespace wtdiag {

struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    int polarity = 1;  // +1: predicts +1 above the threshold

    int predict(const std::vector<double>& x) const {
        return (x[feature] > threshold ? 1 : -1) * polarity;
    }
    bool operator==(const Stump&) const = default;
};

struct AdaBoostParams {
    std::size_t rounds = 100;
    void validate() const;
};

struct AdaBoostModel {
    std::vector<Stump> stumps;
    std::vector<double> weights;
    std::vector<double> errors;  // weighted error of each kept stump
    std::vector<double> bound;   // running product of 2 sqrt(e (1 - e))

    double decision(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const { return decision(x) >= 0.0 ? 1 : -1; }
    bool operator==(const AdaBoostModel&) const = default;
};

AdaBoostModel train_adaboost(const Matrix& x, const std::vector<int>& y, const AdaBoostParams& p);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(const std::vector<double>& x) const;
    bool operator==(const RegressionTree&) const = default;
};

/// Exact greedy least-squares tree on the given rows.
RegressionTree fit_tree(const Matrix& x, const std::vector<double>& y, std::size_t depth,
                        std::size_t min_leaf = 1);

struct L2BoostParams {
    std::size_t stages = 200;
    double shrinkage = 0.1;
    std::size_t depth = 3;
    std::size_t min_leaf = 5;
    void validate() const;
};

struct L2BoostModel {
    double base = 0.0;
    double shrinkage = 0.1;
    std::vector<RegressionTree> trees;
    std::vector<double> train_mse;  // after stage 0 and after every tree

    double predict(const std::vector<double>& x) const;
    bool operator==(const L2BoostModel&) const = default;
};

L2BoostModel train_l2boost(const Matrix& x, const std::vector<double>& y, const L2BoostParams& p);

}  // namespace wtdiag
