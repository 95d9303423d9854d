#pragma once

#include <vector>

#include "disentlab/linalg.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::metrics {

struct ForestOptions {
    int trees = 10;
    int max_depth = 8;
    int min_samples_split = 2;
    /// Features tried per split; 0 means all of them (plain bagging).
    int max_features = 0;
};

/// Gini CART classification forest with bootstrap rows.
class RandomForest {
public:
    void fit(const Matrix& x, const std::vector<int>& y, const ForestOptions& opts, numerics::RngStream rng);

    std::vector<int> predict(const Matrix& x) const;
    double accuracy(const Matrix& x, const std::vector<int>& y) const;

    /// Mean decrease in impurity per feature, each tree normalized to sum to
    /// one (an all-leaf tree contributes zeros), averaged over trees.
    const Vector& importance() const { return importance_; }

private:
    struct Node {
        int feature = -1;       // -1 marks a leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        int label = 0;          // majority class index at this node
    };
    using Tree = std::vector<Node>;

    int grow(Tree& tree, const Matrix& x, const std::vector<int>& y, std::vector<Eigen::Index>& rows, int depth,
             const ForestOptions& opts, numerics::RngStream& rng, Vector& gain);
    int predict_one(const Tree& tree, const Matrix& x, Eigen::Index r) const;

    std::vector<int> classes_;
    std::vector<Tree> trees_;
    Vector importance_;
    double total_rows_ = 0.0;
};

}  // namespace disentlab::metrics
