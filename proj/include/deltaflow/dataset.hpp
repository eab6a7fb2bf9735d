#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "deltaflow/timeseries.hpp"

namespace deltaflow {

/// The four 15-min intraday-index prices of one delivery hour minus the
/// hour's day-ahead price, indexed 00/15/30/45.
struct DeltaVector {
    std::int64_t hour = 0;
    std::array<double, 4> d{};
};

/// One delivery hour of aligned market data. Quarter-resolved columns carry
/// exactly four entries each; fuel prices are daily values forward-filled to
/// the hour (NaN when the dataset has no fuel block).
struct HourRecord {
    std::int64_t hour = 0;
    double da = 0.0;
    std::array<double, 4> id3{};
    std::array<double, 4> solar_actual{}, solar_forecast{};
    std::array<double, 4> wind_actual{}, wind_forecast{};
    std::array<double, 4> load_actual{}, load_forecast{};
    double oil = 0.0, gas = 0.0;
};

struct MarketDataset {
    std::vector<HourRecord> hours;
    bool has_fuel = false;

    std::size_t size() const { return hours.size(); }
    std::int64_t start() const { return hours.front().hour; }
    std::int64_t end() const { return hours.back().hour + kHour; }

    /// Index of the record for hour t, or nullopt.
    std::optional<std::size_t> index_of(std::int64_t hour) const;

    /// Contiguity/completeness check; throws GapDetected.
    void validate() const;

    /// One flat CSV, fixed column order, shortest round-trip numerics.
    void save_csv(const std::string& path) const;
    static MarketDataset load_dataset_csv(const std::string& path);
};

/// Daily fuel prices, one row per UTC day.
struct FuelSeries {
    std::vector<std::int64_t> days;
    std::vector<double> oil, gas;
};

FuelSeries load_fuel_csv(const std::string& path);

/// Restricts all inputs to their common time range and regroups the
/// quarter-hourly series under their delivery hours. `exogenous` holds the
/// six renewables/load columns in the order solar_actual, solar_forecast,
/// wind_actual, wind_forecast, load_actual, load_forecast.
MarketDataset align(const PriceSeries& da, const PriceSeries& id3,
                    const std::vector<PriceSeries>& exogenous,
                    const std::optional<FuelSeries>& fuel = std::nullopt);

/// Loads da.csv / id3.csv / renewables.csv (and fuel.csv when present) from a
/// directory and aligns them.
MarketDataset load_market_directory(const std::string& dir);

std::vector<DeltaVector> build_delta_series(const MarketDataset& ds);

}  // namespace deltaflow
