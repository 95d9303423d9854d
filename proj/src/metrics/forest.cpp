#include "disentlab/metrics/forest.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace disentlab::metrics {

namespace {

double gini(const std::vector<double>& counts, double n) {
    if (n <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += c * c;
    return 1.0 - s / (n * n);
}

}  // namespace

void RandomForest::fit(const Matrix& x, const std::vector<int>& y, const ForestOptions& opts,
                       numerics::RngStream rng) {
    if (x.rows() != static_cast<Eigen::Index>(y.size()) || y.empty())
        throw std::invalid_argument("RandomForest::fit: rows and labels misaligned");
    if (opts.trees < 1 || opts.max_depth < 1) throw std::invalid_argument("RandomForest::fit: bad options");
    classes_ = y;
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
    std::vector<int> yi(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        yi[i] = static_cast<int>(std::lower_bound(classes_.begin(), classes_.end(), y[i]) - classes_.begin());

    trees_.clear();
    importance_ = Vector::Zero(x.cols());
    const auto n = static_cast<std::uint64_t>(x.rows());
    for (int t = 0; t < opts.trees; ++t) {
        auto tree_rng = rng.child(static_cast<std::uint64_t>(t));
        std::vector<Eigen::Index> rows(n);
        for (auto& r : rows) r = static_cast<Eigen::Index>(tree_rng.below(n));
        std::sort(rows.begin(), rows.end());
        total_rows_ = static_cast<double>(rows.size());
        Tree tree;
        Vector gain = Vector::Zero(x.cols());
        grow(tree, x, yi, rows, 0, opts, tree_rng, gain);
        const double s = gain.sum();
        if (s > 0.0) importance_ += gain / s;
        trees_.push_back(std::move(tree));
    }
    importance_ /= static_cast<double>(opts.trees);
}

int RandomForest::grow(Tree& tree, const Matrix& x, const std::vector<int>& y, std::vector<Eigen::Index>& rows,
                       int depth, const ForestOptions& opts, numerics::RngStream& rng, Vector& gain) {
    const std::size_t k = classes_.size();
    std::vector<double> counts(k, 0.0);
    for (auto r : rows) counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])] += 1.0;
    const double n = static_cast<double>(rows.size());
    const double impurity = gini(counts, n);

    const int id = static_cast<int>(tree.size());
    tree.push_back(Node{});
    tree[static_cast<std::size_t>(id)].label =
        static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (depth >= opts.max_depth || rows.size() < static_cast<std::size_t>(opts.min_samples_split) || impurity <= 0.0)
        return id;

    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (opts.max_features > 0 && opts.max_features < x.cols()) {
        rng.shuffle(std::span<int>(features));
        features.resize(static_cast<std::size_t>(opts.max_features));
        std::sort(features.begin(), features.end());
    }

    double best_child = impurity;  // weighted child impurity to beat
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<Eigen::Index> order(rows);
    std::vector<double> left(k), right(k);
    for (int f : features) {
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a, f) < x(b, f); });
        std::fill(left.begin(), left.end(), 0.0);
        right = counts;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(order[i])]);
            left[c] += 1.0;
            right[c] -= 1.0;
            const double lo = x(order[i], f), hi = x(order[i + 1], f);
            if (!(hi > lo)) continue;
            const double nl = static_cast<double>(i + 1), nr = n - nl;
            const double child = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
            if (child < best_child - 1e-12) {
                best_child = child;
                best_feature = f;
                best_threshold = 0.5 * (lo + hi);
            }
        }
    }
    if (best_feature < 0) return id;

    gain(best_feature) += n / total_rows_ * (impurity - best_child);
    std::vector<Eigen::Index> lrows, rrows;
    for (auto r : rows) (x(r, best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, x, y, lrows, depth + 1, opts, rng, gain);
    const int r = grow(tree, x, y, rrows, depth + 1, opts, rng, gain);
    auto& node = tree[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
}

int RandomForest::predict_one(const Tree& tree, const Matrix& x, Eigen::Index r) const {
    int id = 0;
    while (tree[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& node = tree[static_cast<std::size_t>(id)];
        id = x(r, node.feature) <= node.threshold ? node.left : node.right;
    }
    return tree[static_cast<std::size_t>(id)].label;
}

std::vector<int> RandomForest::predict(const Matrix& x) const {
    if (trees_.empty()) throw std::logic_error("RandomForest::predict: not fitted");
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    std::vector<int> votes(classes_.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& tree : trees_) ++votes[static_cast<std::size_t>(predict_one(tree, x, r))];
        const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
        out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
    }
    return out;
}

double RandomForest::accuracy(const Matrix& x, const std::vector<int>& y) const {
    if (y.empty()) return 0.0;
    const auto pred = predict(x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace disentlab::metrics
