#include "deltaflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "deltaflow/common.hpp"

namespace deltaflow {

namespace {

const char* kQuarterTag[4] = {"00", "15", "30", "45"};

std::vector<std::string> dataset_columns(bool with_fuel) {
    std::vector<std::string> cols{"timestamp", "da"};
    for (int q = 0; q < 4; ++q) cols.push_back(std::string("id3_") + kQuarterTag[q]);
    const char* blocks[6] = {"solar_actual", "solar_forecast", "wind_actual",
                             "wind_forecast", "load_actual",   "load_forecast"};
    for (const char* b : blocks)
        for (int q = 0; q < 4; ++q) cols.push_back(std::string(b) + "_" + kQuarterTag[q]);
    if (with_fuel) {
        cols.push_back("oil");
        cols.push_back("gas");
    }
    return cols;
}

}  // namespace

std::optional<std::size_t> MarketDataset::index_of(std::int64_t hour) const {
    if (hours.empty() || hour < start() || hour >= end()) return std::nullopt;
    const auto idx = static_cast<std::size_t>((hour - start()) / kHour);
    if (hours[idx].hour != hour) return std::nullopt;
    return idx;
}

void MarketDataset::validate() const {
    if (hours.empty()) fail("EmptyOverlap", "dataset has no hours");
    for (std::size_t i = 1; i < hours.size(); ++i) {
        if (hours[i].hour - hours[i - 1].hour != kHour) {
            fail("GapDetected", "dataset hours not contiguous at " +
                                    format_time_utc(hours[i].hour));
        }
    }
}

void MarketDataset::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("MissingColumn", "cannot write '" + path + "'");
    const auto cols = dataset_columns(has_fuel);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& h : hours) {
        out << format_time_utc(h.hour) << "," << format_double(h.da);
        auto put = [&](const std::array<double, 4>& a) {
            for (double v : a) out << "," << format_double(v);
        };
        put(h.id3);
        put(h.solar_actual);
        put(h.solar_forecast);
        put(h.wind_actual);
        put(h.wind_forecast);
        put(h.load_actual);
        put(h.load_forecast);
        if (has_fuel) out << "," << format_double(h.oil) << "," << format_double(h.gas);
        out << "\n";
    }
}

MarketDataset MarketDataset::load_dataset_csv(const std::string& path) {
    const auto rows = read_csv_rows(path);
    if (rows.empty()) fail("MissingColumn", "'" + path + "' is empty");
    const auto& header = rows.front();
    bool with_fuel = std::find(header.begin(), header.end(), "oil") != header.end();
    const auto expect = dataset_columns(with_fuel);
    if (header != expect) fail("MissingColumn", "'" + path + "' header does not match dataset schema");

    MarketDataset ds;
    ds.has_fuel = with_fuel;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != expect.size()) {
            fail("MissingColumn", "'" + path + "' row " + std::to_string(i + 1) +
                                      " has wrong field count");
        }
        HourRecord h;
        std::size_t c = 0;
        h.hour = parse_time_utc(row[c++]);
        const std::string ctx = path + " row " + std::to_string(i + 1);
        h.da = parse_double(row[c++], ctx);
        auto get4 = [&](std::array<double, 4>& a) {
            for (int q = 0; q < 4; ++q) a[q] = parse_double(row[c++], ctx);
        };
        get4(h.id3);
        get4(h.solar_actual);
        get4(h.solar_forecast);
        get4(h.wind_actual);
        get4(h.wind_forecast);
        get4(h.load_actual);
        get4(h.load_forecast);
        if (with_fuel) {
            h.oil = parse_double(row[c++], ctx);
            h.gas = parse_double(row[c++], ctx);
        } else {
            h.oil = h.gas = std::numeric_limits<double>::quiet_NaN();
        }
        ds.hours.push_back(h);
    }
    ds.validate();
    return ds;
}

FuelSeries load_fuel_csv(const std::string& path) {
    const auto rows = read_csv_rows(path);
    if (rows.empty()) fail("MissingColumn", "'" + path + "' is empty");
    const auto& header = rows.front();
    if (header != std::vector<std::string>{"date", "oil", "gas"}) {
        fail("MissingColumn", "'" + path + "' header must be date,oil,gas");
    }
    FuelSeries fs;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string ctx = path + " row " + std::to_string(i + 1);
        fs.days.push_back(parse_date_utc(rows[i][0]));
        fs.oil.push_back(parse_double(rows[i][1], ctx));
        fs.gas.push_back(parse_double(rows[i][2], ctx));
        if (i > 1 && fs.days[i - 1] <= fs.days[i - 2]) {
            fail("NonMonotonicTimestamp", ctx + ": dates must increase");
        }
    }
    return fs;
}

MarketDataset align(const PriceSeries& da, const PriceSeries& id3,
                    const std::vector<PriceSeries>& exogenous,
                    const std::optional<FuelSeries>& fuel) {
    if (da.resolution != Resolution::Hourly) fail("GapDetected", "da series must be hourly");
    if (id3.resolution != Resolution::QuarterHourly) {
        fail("GapDetected", "id3 series must be quarter-hourly");
    }
    if (exogenous.size() != 6) {
        fail("MissingColumn", "align expects 6 exogenous series, got " +
                                  std::to_string(exogenous.size()));
    }
    da.validate();
    id3.validate();
    for (const auto& s : exogenous) {
        if (s.resolution != Resolution::QuarterHourly) {
            fail("GapDetected", "exogenous series must be quarter-hourly");
        }
        s.validate();
    }
    if (da.size() == 0 || id3.size() == 0) fail("EmptyOverlap", "empty input series");

    std::int64_t lo = std::max(da.start(), id3.start());
    std::int64_t hi = std::min(da.end(), id3.end());
    for (const auto& s : exogenous) {
        lo = std::max(lo, s.start());
        hi = std::min(hi, s.end());
    }
    // Snap to whole delivery hours.
    lo = (lo + kHour - 1) / kHour * kHour;
    hi = hi / kHour * kHour;
    if (lo >= hi) fail("EmptyOverlap", "input series have no common hour");

    auto quarter_values = [&](const PriceSeries& s, std::int64_t hour, std::array<double, 4>& out) {
        const auto base = static_cast<std::size_t>((hour - s.start()) / kQuarter);
        for (int q = 0; q < 4; ++q) out[q] = s.values[base + q];
    };

    MarketDataset ds;
    ds.has_fuel = fuel.has_value();
    for (std::int64_t t = lo; t < hi; t += kHour) {
        HourRecord h;
        h.hour = t;
        h.da = da.values[static_cast<std::size_t>((t - da.start()) / kHour)];
        quarter_values(id3, t, h.id3);
        quarter_values(exogenous[0], t, h.solar_actual);
        quarter_values(exogenous[1], t, h.solar_forecast);
        quarter_values(exogenous[2], t, h.wind_actual);
        quarter_values(exogenous[3], t, h.wind_forecast);
        quarter_values(exogenous[4], t, h.load_actual);
        quarter_values(exogenous[5], t, h.load_forecast);
        if (fuel) {
            // Forward fill from the most recent covered day.
            const std::int64_t d = day_start(t);
            const auto it = std::upper_bound(fuel->days.begin(), fuel->days.end(), d);
            if (it == fuel->days.begin()) {
                fail("GapDetected", "fuel series starts after " + format_time_utc(t));
            }
            const auto idx = static_cast<std::size_t>(it - fuel->days.begin()) - 1;
            h.oil = fuel->oil[idx];
            h.gas = fuel->gas[idx];
        } else {
            h.oil = h.gas = std::numeric_limits<double>::quiet_NaN();
        }
        ds.hours.push_back(h);
    }
    ds.validate();
    return ds;
}

MarketDataset load_market_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto da_path = fs::path(dir) / "da.csv";
    const auto id3_path = fs::path(dir) / "id3.csv";
    const auto ren_path = fs::path(dir) / "renewables.csv";
    const auto fuel_path = fs::path(dir) / "fuel.csv";

    const PriceSeries da =
        load_csv(da_path.string(), {"timestamp", {"price"}}, Resolution::Hourly);
    const PriceSeries id3 =
        load_csv(id3_path.string(), {"timestamp", {"price"}}, Resolution::QuarterHourly);
    const auto exo = load_csv_multi(
        ren_path.string(),
        {"timestamp",
         {"solar_actual", "solar_forecast", "wind_actual", "wind_forecast", "load_actual",
          "load_forecast"}},
        Resolution::QuarterHourly);
    std::optional<FuelSeries> fuel;
    if (fs::exists(fuel_path)) fuel = load_fuel_csv(fuel_path.string());
    return align(da, id3, exo, fuel);
}

std::vector<DeltaVector> build_delta_series(const MarketDataset& ds) {
    std::vector<DeltaVector> out;
    out.reserve(ds.size());
    for (const auto& h : ds.hours) {
        DeltaVector dv;
        dv.hour = h.hour;
        for (int q = 0; q < 4; ++q) dv.d[q] = h.id3[q] - h.da;
        out.push_back(dv);
    }
    return out;
}

}  // namespace deltaflow
