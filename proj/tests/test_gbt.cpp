#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "deltaflow/gbt.hpp"
#include "doctest.h"

using namespace deltaflow;

namespace {

// Piecewise-constant in the first three features; the rest are distractors.
double plateau(const std::vector<double>& x) {
    double y = x[0] > 0.3 ? 2.0 : -1.0;
    if (x[1] <= -0.5) y -= 1.5;
    if (x[2] > 0.8) y += 0.75;
    return y;
}

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t n_features, Rng& rng) {
    std::vector<std::vector<double>> xs(n, std::vector<double>(n_features));
    for (auto& row : xs)
        for (double& v : row) v = rng.uniform(-2.0, 2.0);
    return xs;
}

std::vector<double> map_rows(const std::vector<std::vector<double>>& xs,
                          const std::function<double(const std::vector<double>&)>& f) {
    std::vector<double> y(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) y[i] = f(xs[i]);
    return y;
}

int tree_depth(const RegressionTree& tree, int node = 0) {
    const TreeNode& nd = tree.nodes[std::size_t(node)];
    if (nd.feature < 0) return 0;
    return 1 + std::max(tree_depth(tree, nd.left), tree_depth(tree, nd.right));
}

bool same_tree(const RegressionTree& a, const RegressionTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const TreeNode &x = a.nodes[i], &y = b.nodes[i];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
            x.right != y.right || x.value != y.value || x.cover != y.cover)
            return false;
    }
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("gbt");

TEST_CASE("constant target fits as the base value with no trees") {
    std::vector<std::vector<double>> xs(60, std::vector<double>{0.0});
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i][0] = double(i);

    // 3.5 sums without rounding, so the mean and the residuals are exact.
    const std::vector<double> y(60, 3.5);
    const GbtModel model = fit_gbt(xs, y, {});
    CHECK(model.trees.empty());
    CHECK(model.base == 3.5);
    CHECK(model.predict({17.0}) == 3.5);
    CHECK(gbt_r2(model, xs, y) == 1.0);

    // 3.7 leaves summation debris in the mean; no tree may chase it.
    const std::vector<double> y2(60, 3.7);
    const GbtModel drift = fit_gbt(xs, y2, {});
    CHECK(drift.trees.empty());
    CHECK(drift.base == doctest::Approx(3.7).epsilon(1e-14));
}

TEST_CASE("a two-level step is recovered exactly by one tree") {
    std::vector<std::vector<double>> xs;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        xs.push_back({i < 25 ? 0.0 : 1.0, 9.0});
        y.push_back(i < 25 ? -1.0 : 1.0);
    }
    GbtOptions opt;
    opt.trees = 10;
    opt.depth = 1;
    opt.lr = 1.0;
    const GbtModel model = fit_gbt(xs, y, opt);

    // One tree captures the step; the next round has nothing left and stops.
    REQUIRE(model.trees.size() == 1);
    const RegressionTree& tree = model.trees[0];
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 0.5);
    CHECK(model.base == 0.0);
    CHECK(model.predict({0.0, 9.0}) == -1.0);
    CHECK(model.predict({1.0, 9.0}) == 1.0);
    CHECK(gbt_r2(model, xs, y) == 1.0);
}

TEST_CASE("adjacent-double feature values split consistently") {
    // The midpoint of two adjacent doubles can round up to the larger one;
    // the split must still send the smaller value left and the larger right.
    const double a = std::nextafter(1.0, 2.0);
    const double b = std::nextafter(a, 2.0);
    REQUIRE(a + 0.5 * (b - a) == b);  // the degenerate rounding this guards

    std::vector<std::vector<double>> xs;
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) {
        xs.push_back({i < 25 ? a : b});
        y.push_back(i < 25 ? 0.0 : 1.0);
    }
    GbtOptions opt;
    opt.trees = 1;
    opt.depth = 1;
    opt.lr = 1.0;
    const GbtModel model = fit_gbt(xs, y, opt);
    CHECK(model.predict({a}) == 0.0);
    CHECK(model.predict({b}) == 1.0);
}

TEST_CASE("boosting fits a plateau function with distractor features") {
    Rng rng(41);
    const auto train_x = random_rows(400, 5, rng);
    const auto train_y = map_rows(train_x, plateau);
    const auto test_x = random_rows(300, 5, rng);
    const auto test_y = map_rows(test_x, plateau);

    const GbtModel model = fit_gbt(train_x, train_y, {});
    CHECK(model.n_features == 5);
    CHECK(gbt_r2(model, train_x, train_y) > 0.99);
    CHECK(gbt_r2(model, test_x, test_y) > 0.9);
}

TEST_CASE("prediction decomposes into base plus scaled tree outputs") {
    Rng rng(42);
    const auto xs = random_rows(200, 3, rng);
    const auto y = map_rows(xs, [](const std::vector<double>& x) {
        return x[0] * 1.5 + (x[1] > 0 ? 2.0 : 0.0);
    });
    GbtOptions opt;
    opt.trees = 25;
    const GbtModel model = fit_gbt(xs, y, opt);
    REQUIRE(!model.trees.empty());
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        double manual = model.base;
        for (const RegressionTree& tree : model.trees)
            manual += model.learning_rate * tree.predict(x);
        CHECK(model.predict(x) == manual);
    }
}

TEST_CASE("covers count rows and partition exactly at every split") {
    Rng rng(43);
    const auto xs = random_rows(257, 4, rng);
    const auto y = map_rows(xs, plateau);
    const GbtModel model = fit_gbt(xs, y, {});
    REQUIRE(!model.trees.empty());
    for (const RegressionTree& tree : model.trees) {
        CHECK(tree.nodes[0].cover == 257.0);
        CHECK(tree_depth(tree) <= model.max_depth);
        for (const TreeNode& nd : tree.nodes) {
            if (nd.feature < 0) continue;
            CHECK(nd.cover == tree.nodes[std::size_t(nd.left)].cover +
                                  tree.nodes[std::size_t(nd.right)].cover);
            // Both sides of a kept split are populated.
            CHECK(tree.nodes[std::size_t(nd.left)].cover >= 1.0);
            CHECK(tree.nodes[std::size_t(nd.right)].cover >= 1.0);
        }
    }
}

TEST_CASE("equal-gain splits resolve to the lowest feature index") {
    Rng rng(44);
    std::vector<std::vector<double>> xs;
    std::vector<double> y;
    for (int i = 0; i < 80; ++i) {
        const double v = rng.uniform(-1.0, 1.0);
        xs.push_back({v, v});  // identical columns: any split ties across features
        y.push_back(v > 0 ? 1.0 : -1.0);
    }
    GbtOptions opt;
    opt.trees = 5;
    const GbtModel model = fit_gbt(xs, y, opt);
    for (const RegressionTree& tree : model.trees)
        for (const TreeNode& nd : tree.nodes)
            if (nd.feature >= 0) CHECK(nd.feature == 0);
}

TEST_CASE("fitting is deterministic") {
    Rng rng(45);
    const auto xs = random_rows(150, 4, rng);
    const auto y = map_rows(xs, plateau);
    GbtOptions opt;
    opt.trees = 30;
    const GbtModel a = fit_gbt(xs, y, opt);
    const GbtModel b = fit_gbt(xs, y, opt);
    REQUIRE(a.trees.size() == b.trees.size());
    CHECK(a.base == b.base);
    for (std::size_t t = 0; t < a.trees.size(); ++t) CHECK(same_tree(a.trees[t], b.trees[t]));
}

TEST_CASE("depth limit caps every path") {
    Rng rng(46);
    const auto xs = random_rows(300, 5, rng);
    std::vector<double> y(xs.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = plateau(xs[i]) + 0.3 * rng.normal();
    for (int depth : {1, 2, 3}) {
        GbtOptions opt;
        opt.trees = 10;
        opt.depth = depth;
        const GbtModel model = fit_gbt(xs, y, opt);
        for (const RegressionTree& tree : model.trees) {
            CHECK(tree_depth(tree) <= depth);
            CHECK(tree.nodes.size() <= std::size_t((2 << depth) - 1));
        }
    }
}

TEST_CASE("invalid inputs are rejected") {
    Rng rng(47);
    auto xs = random_rows(60, 2, rng);
    auto y = map_rows(xs, [](const std::vector<double>& x) { return x[0]; });

    CHECK_THROWS_WITH_AS(fit_gbt({xs.begin(), xs.begin() + 49}, {y.begin(), y.begin() + 49}, {}),
                         doctest::Contains("TooFewSamples"), Error);
    CHECK_THROWS_WITH_AS(fit_gbt(xs, {y.begin(), y.begin() + 59}, {}),
                         doctest::Contains("DimensionMismatch"), Error);

    auto ragged = xs;
    ragged[10].push_back(0.0);
    CHECK_THROWS_WITH_AS(fit_gbt(ragged, y, {}), doctest::Contains("DimensionMismatch"), Error);

    auto holey = xs;
    holey[5][1] = std::nan("");
    CHECK_THROWS_WITH_AS(fit_gbt(holey, y, {}), doctest::Contains("NonFiniteInput"), Error);

    auto bad_y = y;
    bad_y[20] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(fit_gbt(xs, bad_y, {}), doctest::Contains("DegenerateTarget"), Error);

    GbtOptions opt;
    opt.depth = 0;
    CHECK_THROWS_WITH_AS(fit_gbt(xs, y, opt), doctest::Contains("InvalidConfig"), Error);
    opt.depth = 3;
    opt.lr = 0.0;
    CHECK_THROWS_WITH_AS(fit_gbt(xs, y, opt), doctest::Contains("InvalidConfig"), Error);

    const GbtModel model = fit_gbt(xs, y, {});
    CHECK_THROWS_WITH_AS(model.predict({1.0, 2.0, 3.0}), doctest::Contains("DimensionMismatch"),
                         Error);
    CHECK_THROWS_WITH_AS(gbt_r2(model, {}, {}), doctest::Contains("TooFewSamples"), Error);
}

TEST_CASE("zero boosting rounds leave the mean predictor") {
    Rng rng(48);
    const auto xs = random_rows(70, 2, rng);
    const auto y = map_rows(xs, [](const std::vector<double>& x) { return x[0] * 2.0; });
    GbtOptions opt;
    opt.trees = 0;
    const GbtModel model = fit_gbt(xs, y, opt);
    CHECK(model.trees.empty());
    CHECK(model.predict(xs[0]) == model.base);
    CHECK(gbt_r2(model, xs, y) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_SUITE_END();
