#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/features.hpp"
#include "deltaflow/gbt.hpp"

namespace deltaflow {

/// Additive decomposition of one prediction: phi0 + sum(phi) equals the model
/// output at x, with phi0 the cover-weighted expectation of the ensemble.
struct ShapAttribution {
    double phi0 = 0.0;
    std::vector<double> phi;
};

/// Exact Shapley values of a boosted ensemble in polynomial time, walking
/// each tree once and marginalizing absent features along the decision paths
/// by training cover.
ShapAttribution tree_shap(const GbtModel& model, const std::vector<double>& x);

/// Per-feature importance over a set of rows: mean of |phi_j| by default,
/// plain sum when mean_absolute is false. Throws EmptyTestSet.
std::vector<double> feature_importance(const GbtModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       bool mean_absolute = true);

struct ShapReport {
    std::vector<std::string> feature_names;
    std::vector<std::string> feature_groups;  // group label per feature
    std::array<std::vector<double>, 4> fi;    // importance per quarter
    std::array<double, 4> r2{};               // held-out fit quality per quarter
    std::size_t train_rows = 0, test_rows = 0;
};

struct ShapReportOptions {
    GbtOptions gbt;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;  // shuffles whole days into the train/test split
};

/// Fits one boosted model per quarter-hour delta on the dataset's feature
/// matrix and reports mean-|SHAP| importances on held-out rows. Whole days
/// are assigned to either side of the split so adjacent hours never leak.
ShapReport shap_report(const MarketDataset& ds, const std::vector<FeatureGroup>& groups,
                       const ShapReportOptions& opt);

/// One row per feature: feature,group,fi_00,fi_15,fi_30,fi_45.
void shap_report_save_csv(const ShapReport& report, const std::string& path);

}  // namespace deltaflow
