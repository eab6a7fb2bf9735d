#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"

namespace deltaflow {

// Timestamps are UTC epoch seconds. Daylight-saving ambiguity must be
// resolved by the exporting side; the loaders reject non-uniform spacing
// instead of guessing.

constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kQuarter = 900;
constexpr std::int64_t kDay = 86400;

/// Parses "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS][Z]" as UTC.
std::int64_t parse_time_utc(const std::string& text);

/// Parses a bare "YYYY-MM-DD" as midnight UTC.
std::int64_t parse_date_utc(const std::string& text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_time_utc(std::int64_t t);

/// Formats as "YYYY-MM-DD".
std::string format_date_utc(std::int64_t t);

inline int hour_of_day(std::int64_t t) {
    return static_cast<int>(((t % kDay) + kDay) % kDay / kHour);
}

inline std::int64_t day_start(std::int64_t t) { return t - (((t % kDay) + kDay) % kDay); }

enum class Resolution { Hourly, QuarterHourly };

inline std::int64_t step_of(Resolution r) {
    return r == Resolution::Hourly ? kHour : kQuarter;
}

/// A gap-free, strictly increasing price series at a fixed resolution.
struct PriceSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    Resolution resolution = Resolution::Hourly;

    std::size_t size() const { return timestamps.size(); }
    std::int64_t start() const { return timestamps.front(); }

    /// One past the covered range.
    std::int64_t end() const { return timestamps.back() + step_of(resolution); }

    /// Checks monotonicity/spacing; throws NonMonotonicTimestamp or GapDetected.
    void validate() const;
};

/// Column-name to position map for CSV ingestion.
struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::vector<std::string> value_columns;  // one PriceSeries per column
};

/// Loads one value column as a validated series.
PriceSeries load_csv(const std::string& path, const CsvSchema& schema, Resolution resolution);

/// Loads all schema value columns at once (shared timestamp parsing).
std::vector<PriceSeries> load_csv_multi(const std::string& path, const CsvSchema& schema,
                                        Resolution resolution);

// Low-level CSV helpers shared by the dataset serializers. Values are written
// with shortest round-trip formatting so files re-read bit-identically.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

}  // namespace deltaflow
