#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/dataset.hpp"

namespace deltaflow {

/// Sample-based forecast of one delivery hour's 4-vector, in EUR/MWh.
struct DensityForecast {
    std::int64_t hour = 0;
    std::string model;
    std::uint64_t seed = 0;
    std::vector<std::array<double, 4>> samples;
};

/// (1/N) sum_s ||x - xhat_s|| - (1/2N^2) sum_s sum_s' ||xhat_s - xhat_s'||.
/// The double sum runs over all ordered pairs. Needs N >= 2.
double energy_score(const std::vector<std::array<double, 4>>& samples,
                    const std::array<double, 4>& realization);

/// sum over all ordered quarter pairs (t,t') of
///   (|x_t - x_t'|^gamma - (1/N) sum_s |xhat_s,t - xhat_s,t'|^gamma)^2,
/// multiplied by 1/N when scaled=true (the variant with the extra prefactor).
double variogram_score(const std::vector<std::array<double, 4>>& samples,
                       const std::array<double, 4>& realization, double gamma = 0.5,
                       bool scaled = true);

/// Interval score for a central prediction interval at confidence `level`
/// (e.g. 0.5 for the 50% interval): width plus 2/(1-level) times the miss.
double winkler_score(double lower, double upper, double x, double level);

struct CoverageResult {
    double overall = 0.0;
    std::array<double, 4> per_quarter{};
};

/// Fraction of 15-min realizations inside the central `level` interval formed
/// by per-quarter empirical sample quantiles at (1 -/+ level)/2.
CoverageResult pi_coverage(const std::vector<DensityForecast>& forecasts,
                           const std::vector<DeltaVector>& realizations, double level);

/// Five-number summary plus mean, quartiles by linear interpolation.
struct SummaryStats {
    double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0, mean = 0.0;
};

SummaryStats summarize(const std::vector<double>& values);

struct HourScores {
    std::int64_t hour = 0;
    double energy = 0.0;
    double variogram = 0.0;
    std::vector<double> winkler;  // parallel to ScoreReport::levels
};

struct ScoreReport {
    std::string model;
    double gamma = 0.5;
    bool vs_scaled = true;
    std::vector<double> levels{0.5, 0.9};  // interval confidences
    std::vector<HourScores> rows;
    std::vector<CoverageResult> coverage;  // parallel to levels

    SummaryStats energy_summary() const;
    SummaryStats variogram_summary() const;
    SummaryStats winkler_summary(std::size_t level_index) const;
};

/// Scores every forecast against its matching realization (same order, same
/// hours) and aggregates coverage per level.
ScoreReport score_forecasts(const std::string& model,
                            const std::vector<DensityForecast>& forecasts,
                            const std::vector<DeltaVector>& realizations, double gamma = 0.5,
                            bool vs_scaled = true, const std::vector<double>& levels = {0.5, 0.9});

/// One CSV row per hour: timestamp, energy, variogram, winkler_<pct>...
void report_save_csv(const ScoreReport& report, const std::string& path);

/// JSON with the run configuration, per-metric summaries, and coverage.
std::string report_to_json(const ScoreReport& report);

}  // namespace deltaflow
