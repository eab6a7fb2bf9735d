#pragma once

// Conditioning features for the hourly price-difference vector, grouped into
// price/time, forecast-error, ramp, and fuel blocks, plus the marginal
// Gaussianizing transform used before model fitting.

#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/dataset.hpp"

namespace deltaflow {

enum class FeatureGroup { PriceTime, Errors, Ramps, Fuel };

const std::vector<FeatureGroup>& all_feature_groups();
std::string feature_group_name(FeatureGroup g);
FeatureGroup parse_feature_group(const std::string& name);  // throws UnknownGroup

/// Canonical feature names for a group selection, in stable order
/// (groups in enum order, fixed order within each group).
std::vector<std::string> feature_names(const std::vector<FeatureGroup>& groups);

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

/// Features of the dataset hour at index i. Requires two hours of history
/// (lagged deltas, ramps) and one hour of lookahead (forward DA increment).
/// Throws BoundaryHour for the first/last hour, LagUnavailable at index 1,
/// MissingColumn when the fuel group is requested without fuel data.
FeatureVector build_features(const MarketDataset& ds, std::size_t i,
                             const std::vector<FeatureGroup>& groups);

/// True when build_features(ds, i, ...) is defined.
bool feature_row_valid(const MarketDataset& ds, std::size_t i);

struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::int64_t> hours;  // one entry per row
    std::vector<std::vector<double>> rows;
};

/// Feature rows for every valid hour of the dataset.
FeatureMatrix build_feature_matrix(const MarketDataset& ds,
                                   const std::vector<FeatureGroup>& groups);

void write_feature_matrix_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_feature_matrix_csv(const std::string& path);

/// Per-dimension probability integral transform: empirical CDF with Hazen
/// plotting positions composed with the standard-normal quantile. Forward
/// maps data to approximately N(0,1); inverse is the piecewise-linear
/// empirical quantile function, clamped to the training extrema.
class PitTransform {
public:
    PitTransform() = default;

    /// columns[d] holds the training values of dimension d (>= 50 each).
    /// Throws TooFewSamples / DegenerateDimension.
    static PitTransform fit(const std::vector<std::vector<double>>& columns);

    std::size_t dims() const { return sorted_.size(); }

    double forward(std::size_t dim, double x) const;
    double inverse(std::size_t dim, double z) const;
    std::vector<double> forward_vec(const std::vector<double>& x) const;
    std::vector<double> inverse_vec(const std::vector<double>& z) const;

    std::string to_json() const;
    static PitTransform from_json(const std::string& text);

private:
    std::vector<std::vector<double>> sorted_;  // per-dimension sorted support
};

}  // namespace deltaflow
