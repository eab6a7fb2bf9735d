#include "deltaflow/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace deltaflow {
namespace {

constexpr std::size_t kMinFitRows = 50;

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double reduction = 0.0;
};

// Best single split of `rows` by residual variance reduction. Candidate
// thresholds are midpoints of adjacent distinct feature values; the same
// x <= threshold test is used here and in predict, so a degenerate midpoint
// (one that rounds up to the larger value) is snapped down to keep the
// partition consistent.
SplitChoice best_split(const std::vector<std::vector<double>>& xs, const std::vector<double>& grad,
                       const std::vector<std::size_t>& rows) {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2) return best;
    const std::size_t n_features = xs[rows[0]].size();

    double sum = 0.0;
    for (std::size_t r : rows) sum += grad[r];

    std::vector<std::pair<double, double>> order(n);  // (feature value, gradient)
    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t i = 0; i < n; ++i) order[i] = {xs[rows[i]][f], grad[rows[i]]};
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += order[i].second;
            const double a = order[i].first, b = order[i + 1].first;
            if (!(a < b)) continue;
            double mid = a + 0.5 * (b - a);
            if (!(mid < b)) mid = a;  // fp guard: keep the right block on the right
            const double right_sum = sum - left_sum;
            const std::size_t nl = i + 1, nr = n - nl;
            // Gain in sum-of-squares explained; candidates are visited in
            // (feature, threshold) order, so requiring strict improvement
            // makes ties resolve to the first candidate deterministically.
            const double score = left_sum * left_sum / double(nl) +
                                 right_sum * right_sum / double(nr) - sum * sum / double(n);
            if (score > best.reduction + 1e-12) best = {true, int(f), mid, score};
        }
    }
    return best;
}

int grow(RegressionTree& tree, const std::vector<std::vector<double>>& xs,
         const std::vector<double>& grad, const std::vector<std::size_t>& rows, int depth,
         int max_depth) {
    double sum = 0.0;
    for (std::size_t r : rows) sum += grad[r];
    const double mean = sum / double(rows.size());

    const int id = int(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].value = mean;
    tree.nodes[id].cover = double(rows.size());

    if (depth >= max_depth) return id;
    const SplitChoice split = best_split(xs, grad, rows);
    if (!split.found) return id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
        (xs[r][std::size_t(split.feature)] <= split.threshold ? left_rows : right_rows)
            .push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) return id;

    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    const int left = grow(tree, xs, grad, left_rows, depth + 1, max_depth);
    tree.nodes[id].left = left;
    const int right = grow(tree, xs, grad, right_rows, depth + 1, max_depth);
    tree.nodes[id].right = right;
    return id;
}

double subtree_expectation(const RegressionTree& tree, int node) {
    const TreeNode& nd = tree.nodes[std::size_t(node)];
    if (nd.feature < 0) return nd.value;
    const TreeNode& l = tree.nodes[std::size_t(nd.left)];
    const TreeNode& r = tree.nodes[std::size_t(nd.right)];
    return (subtree_expectation(tree, nd.left) * l.cover +
            subtree_expectation(tree, nd.right) * r.cover) /
           nd.cover;
}

}  // namespace

double RegressionTree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[std::size_t(node)].feature >= 0) {
        const TreeNode& nd = nodes[std::size_t(node)];
        node = x[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[std::size_t(node)].value;
}

double RegressionTree::expected_value() const { return subtree_expectation(*this, 0); }

double GbtModel::predict(const std::vector<double>& x) const {
    if (x.size() != n_features)
        fail("DimensionMismatch", "predict expects " + std::to_string(n_features) +
                                      " features, got " + std::to_string(x.size()));
    double out = base;
    for (const RegressionTree& tree : trees) out += learning_rate * tree.predict(x);
    return out;
}

GbtModel fit_gbt(const std::vector<std::vector<double>>& xs, const std::vector<double>& target,
                 const GbtOptions& opt) {
    if (xs.size() != target.size())
        fail("DimensionMismatch", "feature rows and targets differ in count");
    if (xs.size() < kMinFitRows)
        fail("TooFewSamples", "need at least " + std::to_string(kMinFitRows) + " rows, got " +
                                  std::to_string(xs.size()));
    const std::size_t n = xs.size();
    const std::size_t n_features = xs[0].size();
    if (n_features == 0) fail("InvalidConfig", "no features to split on");
    for (std::size_t i = 0; i < n; ++i) {
        if (xs[i].size() != n_features)
            fail("DimensionMismatch", "ragged feature row " + std::to_string(i));
        for (double v : xs[i])
            if (!std::isfinite(v))
                fail("NonFiniteInput", "non-finite feature in row " + std::to_string(i));
        if (!std::isfinite(target[i]))
            fail("DegenerateTarget", "non-finite target in row " + std::to_string(i));
    }
    if (opt.trees < 0 || opt.depth < 1 || !(opt.lr > 0.0))
        fail("InvalidConfig", "trees must be >= 0, depth >= 1, lr > 0");

    GbtModel model;
    model.learning_rate = opt.lr;
    model.max_depth = opt.depth;
    model.n_features = n_features;
    model.base = std::accumulate(target.begin(), target.end(), 0.0) / double(n);

    double scale = 1.0;
    for (double v : target) scale = std::max(scale, std::abs(v));

    std::vector<double> grad(n);  // residual of the running prediction
    std::vector<double> pred(n, model.base);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    for (int t = 0; t < opt.trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = target[i] - pred[i];
        RegressionTree tree;
        grow(tree, xs, grad, all_rows, 0, opt.depth);
        if (tree.nodes.size() == 1) {
            // No split clears the gain threshold, and shifting the residuals
            // by a constant cannot create one, so every further round would
            // emit constants. Keep this one unless it is summation debris
            // (the base mean carries up to ~n*eps*scale of rounding).
            if (std::abs(tree.nodes[0].value) >
                16.0 * std::numeric_limits<double>::epsilon() * double(n) * scale)
                model.trees.push_back(std::move(tree));
            break;
        }
        for (std::size_t i = 0; i < n; ++i) pred[i] += opt.lr * tree.predict(xs[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double gbt_r2(const GbtModel& model, const std::vector<std::vector<double>>& xs,
              const std::vector<double>& target) {
    if (xs.size() != target.size())
        fail("DimensionMismatch", "feature rows and targets differ in count");
    if (xs.empty()) fail("TooFewSamples", "no rows to evaluate");
    const double mean =
        std::accumulate(target.begin(), target.end(), 0.0) / double(target.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = target[i] - model.predict(xs[i]);
        ss_res += r * r;
        const double c = target[i] - mean;
        ss_tot += c * c;
    }
    if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

}  // namespace deltaflow
