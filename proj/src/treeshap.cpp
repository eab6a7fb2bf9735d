#include "deltaflow/treeshap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "deltaflow/timeseries.hpp"

namespace deltaflow {
namespace {

// One feature on the current decision path. `zero` is the fraction of paths
// flowing through when the feature is absent (cover ratio), `one` is 1 or 0
// depending on whether x follows this branch, `weight` carries the permutation
// weight of each subset size represented by the path prefix.
struct PathElem {
    int feature = -1;
    double zero = 0.0, one = 0.0, weight = 0.0;
};

void extend(std::vector<PathElem>& m, double pz, double po, int pf) {
    const std::size_t l = m.size();
    m.push_back({pf, pz, po, l == 0 ? 1.0 : 0.0});
    for (std::size_t k = l; k-- > 0;) {
        m[k + 1].weight += po * m[k].weight * double(k + 1) / double(l + 1);
        m[k].weight = pz * m[k].weight * double(l - k) / double(l + 1);
    }
}

void unwind(std::vector<PathElem>& m, std::size_t i) {
    const std::size_t len = m.size();
    const double one = m[i].one, zero = m[i].zero;
    double n = m[len - 1].weight;
    for (std::size_t j = len - 1; j-- > 0;) {
        if (one != 0.0) {
            const double t = m[j].weight;
            m[j].weight = n * double(len) / (double(j + 1) * one);
            n = t - m[j].weight * zero * double(len - 1 - j) / double(len);
        } else {
            m[j].weight = m[j].weight * double(len) / (zero * double(len - 1 - j));
        }
    }
    for (std::size_t j = i; j + 1 < len; ++j) {
        m[j].feature = m[j + 1].feature;
        m[j].zero = m[j + 1].zero;
        m[j].one = m[j + 1].one;
    }
    m.pop_back();
}

// Sum of the weights the path would have after unwinding element i, without
// mutating the path. Used once per feature at each leaf.
double unwound_sum(const std::vector<PathElem>& m, std::size_t i) {
    const std::size_t len = m.size();
    const double one = m[i].one, zero = m[i].zero;
    double n = m[len - 1].weight;
    double total = 0.0;
    for (std::size_t j = len - 1; j-- > 0;) {
        if (one != 0.0) {
            const double t = n * double(len) / (double(j + 1) * one);
            total += t;
            n = m[j].weight - t * zero * double(len - 1 - j) / double(len);
        } else {
            total += m[j].weight * double(len) / (zero * double(len - 1 - j));
        }
    }
    return total;
}

void recurse(const RegressionTree& tree, const std::vector<double>& x, std::vector<double>& phi,
             int node, std::vector<PathElem> path, double pz, double po, int pf) {
    extend(path, pz, po, pf);
    const TreeNode& nd = tree.nodes[std::size_t(node)];
    if (nd.feature < 0) {
        for (std::size_t i = 1; i < path.size(); ++i) {
            phi[std::size_t(path[i].feature)] +=
                unwound_sum(path, i) * (path[i].one - path[i].zero) * nd.value;
        }
        return;
    }
    const bool go_left = x[std::size_t(nd.feature)] <= nd.threshold;
    const int hot = go_left ? nd.left : nd.right;
    const int cold = go_left ? nd.right : nd.left;
    // A feature met twice merges with its earlier path entry.
    double iz = 1.0, io = 1.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        if (path[k].feature == nd.feature) {
            iz = path[k].zero;
            io = path[k].one;
            unwind(path, k);
            break;
        }
    }
    recurse(tree, x, phi, hot, path, iz * tree.nodes[std::size_t(hot)].cover / nd.cover, io,
            nd.feature);
    recurse(tree, x, phi, cold, std::move(path),
            iz * tree.nodes[std::size_t(cold)].cover / nd.cover, 0.0, nd.feature);
}

}  // namespace

ShapAttribution tree_shap(const GbtModel& model, const std::vector<double>& x) {
    if (x.size() != model.n_features)
        fail("DimensionMismatch", "attribution input has " + std::to_string(x.size()) +
                                      " features, model expects " +
                                      std::to_string(model.n_features));
    for (double v : x)
        if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite attribution input");

    ShapAttribution out;
    out.phi0 = model.base;
    out.phi.assign(model.n_features, 0.0);
    std::vector<double> phi(model.n_features, 0.0);
    for (const RegressionTree& tree : model.trees) {
        out.phi0 += model.learning_rate * tree.expected_value();
        recurse(tree, x, phi, 0, {}, 1.0, 1.0, -1);
    }
    for (std::size_t j = 0; j < phi.size(); ++j) out.phi[j] = model.learning_rate * phi[j];
    return out;
}

std::vector<double> feature_importance(const GbtModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       bool mean_absolute) {
    if (xs.empty()) fail("EmptyTestSet", "feature importance needs at least one row");
    std::vector<double> fi(model.n_features, 0.0);
    for (const std::vector<double>& x : xs) {
        const ShapAttribution a = tree_shap(model, x);
        for (std::size_t j = 0; j < fi.size(); ++j) fi[j] += std::abs(a.phi[j]);
    }
    if (mean_absolute)
        for (double& v : fi) v /= double(xs.size());
    return fi;
}

ShapReport shap_report(const MarketDataset& ds, const std::vector<FeatureGroup>& groups,
                       const ShapReportOptions& opt) {
    if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0))
        fail("InvalidConfig", "train fraction must lie in (0, 1)");
    const FeatureMatrix m = build_feature_matrix(ds, groups);

    std::vector<std::int64_t> days;
    for (std::int64_t h : m.hours) {
        const std::int64_t d = day_start(h);
        if (days.empty() || days.back() != d) days.push_back(d);
    }
    Rng rng(opt.seed);
    rng.shuffle(days);
    const std::size_t n_train_days =
        std::size_t(std::llround(opt.train_fraction * double(days.size())));
    if (n_train_days == 0 || n_train_days >= days.size())
        fail("TooFewSamples", "not enough distinct days to split " +
                                  std::to_string(days.size()) + " into train and test");
    const std::set<std::int64_t> train_days(days.begin(),
                                            days.begin() + std::ptrdiff_t(n_train_days));

    std::vector<std::vector<double>> train_x, test_x;
    std::array<std::vector<double>, 4> train_y, test_y;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        const std::size_t rec = ds.index_of(m.hours[i]).value();
        const HourRecord& hr = ds.hours[rec];
        const bool in_train = train_days.count(day_start(m.hours[i])) > 0;
        (in_train ? train_x : test_x).push_back(m.rows[i]);
        for (int q = 0; q < 4; ++q)
            (in_train ? train_y : test_y)[std::size_t(q)].push_back(hr.id3[std::size_t(q)] -
                                                                    hr.da);
    }

    ShapReport report;
    report.feature_names = m.names;
    for (FeatureGroup g : all_feature_groups()) {
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) continue;
        const std::size_t count = feature_names({g}).size();
        report.feature_groups.insert(report.feature_groups.end(), count, feature_group_name(g));
    }
    report.train_rows = train_x.size();
    report.test_rows = test_x.size();
    for (int q = 0; q < 4; ++q) {
        const GbtModel model = fit_gbt(train_x, train_y[std::size_t(q)], opt.gbt);
        report.r2[std::size_t(q)] = gbt_r2(model, test_x, test_y[std::size_t(q)]);
        report.fi[std::size_t(q)] = feature_importance(model, test_x);
    }
    return report;
}

void shap_report_save_csv(const ShapReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileUnreadable", "cannot write " + path);
    out << "feature,group,fi_00,fi_15,fi_30,fi_45\n";
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        out << report.feature_names[j] << ',' << report.feature_groups[j];
        for (int q = 0; q < 4; ++q) out << ',' << format_double(report.fi[std::size_t(q)][j]);
        out << '\n';
    }
    if (!out.flush()) fail("FileUnreadable", "failed writing " + path);
}

}  // namespace deltaflow
