#pragma once

// End-to-end orchestration behind the command-line front end: feature and
// marginal preprocessing, per-tag model training, sample generation in price
// space, and multi-model score reporting. Everything a trained forecaster
// needs at prediction time travels inside one serialized TrainedModel.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/copula.hpp"
#include "deltaflow/dataset.hpp"
#include "deltaflow/features.hpp"
#include "deltaflow/flow.hpp"
#include "deltaflow/gaussian.hpp"
#include "deltaflow/historical.hpp"
#include "deltaflow/nn.hpp"
#include "deltaflow/scoring.hpp"

namespace deltaflow {

enum class ModelTag { Flow, Gaussian, Copula, HistMulti, HistUni };

const std::vector<ModelTag>& all_model_tags();
std::string model_tag_name(ModelTag tag);
ModelTag parse_model_tag(const std::string& name);  // throws UnknownModel

/// Per-feature affine standardization fitted on training rows. Constant
/// columns keep unit scale so they map to an exact zero.
struct FeatureScaler {
    std::vector<double> mean, sd;

    std::vector<double> apply(const std::vector<double>& x) const;
};

FeatureScaler fit_scaler(const std::vector<std::vector<double>>& rows);

/// A trained forecaster plus everything needed to map between price space
/// and model space: the marginal Gaussianizing transform of the deltas, the
/// feature scaler, the feature groups, and the training window. The member
/// matching `tag` is populated; the others stay default-constructed.
struct TrainedModel {
    ModelTag tag = ModelTag::Flow;
    std::vector<FeatureGroup> groups;
    PitTransform pit;
    FeatureScaler scaler;
    std::int64_t train_start = 0, train_end = 0;

    FlowModel flow;
    GaussianHead gaussian;
    CopulaModel copula;
    HistoryIndex history;
};

struct TrainConfig {
    ModelTag tag = ModelTag::Flow;
    std::vector<FeatureGroup> groups;  // empty = all groups the dataset supports
    std::int64_t train_end = 0;        // 0 = default_train_end(ds)
    TrainOptions train;                // epochs/batch/lr/seed for the nn models
};

struct TrainResult {
    TrainedModel model;
    std::vector<double> loss_trace;  // empty for copula and historical tags
};

/// The 80% point of the dataset's span, snapped back to a UTC day boundary
/// when that leaves a non-empty training range.
std::int64_t default_train_end(const MarketDataset& ds);

/// Fits the tagged model on all hours before cfg.train_end. Throws
/// InvalidConfig when the boundary leaves an empty training or test range.
TrainResult train_model(const MarketDataset& ds, const TrainConfig& cfg);

void save_trained(const TrainedModel& model, const std::string& path);
TrainedModel load_trained(const std::string& path);
std::string trained_to_json(const TrainedModel& model);
TrainedModel trained_from_json(const std::string& text);

struct ForecastConfig {
    std::int64_t start = 0;  // 0 = the model's training boundary
    std::int64_t end = 0;    // 0 = dataset end
    std::size_t samples = 100;
    std::uint64_t seed = 0;
};

struct ForecastResult {
    std::vector<DensityForecast> forecasts;  // absolute prices, EUR/MWh
    std::vector<DeltaVector> realizations;   // matching observed ID3 prices
    std::vector<std::string> skipped;        // "<timestamp>: <reason>" per hour
};

/// Draws `samples` price vectors per test hour: model-space draws are mapped
/// through the inverse marginal transform and the day-ahead price is added
/// back. Hours whose conditioning features are unavailable are skipped and
/// listed in `skipped`.
ForecastResult forecast_hours(const MarketDataset& ds, const TrainedModel& model,
                              const ForecastConfig& cfg);

/// One row per (hour, sample): timestamp,model,seed,sample,id3_00..id3_45.
void forecast_save_csv(const std::vector<DensityForecast>& forecasts, const std::string& path);
std::vector<DensityForecast> forecast_load_csv(const std::string& path);

struct EvaluateConfig {
    double gamma = 0.5;
    bool vs_scaled = true;
    std::vector<double> levels{0.5, 0.9};  // central-interval confidences
};

/// Scores forecasts against the dataset's realized ID3 prices; every forecast
/// hour must exist in the dataset. Throws HourMismatch otherwise.
ScoreReport evaluate_forecasts(const MarketDataset& ds,
                               const std::vector<DensityForecast>& forecasts,
                               const EvaluateConfig& cfg);

/// Plot-ready box data: one row per (label, metric) with the five-number
/// summary and the points beyond the 1.5 IQR fences, semicolon-joined.
std::string boxplot_csv(const std::vector<std::string>& labels,
                        const std::vector<ScoreReport>& reports);

/// Loads either a flat dataset.csv (as written by the synthesizer) or the
/// split da/id3/renewables[/fuel] CSV exports from the directory.
MarketDataset load_data_dir(const std::string& dir);

}  // namespace deltaflow
