#include "deltaflow/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deltaflow/common.hpp"

namespace deltaflow {

namespace {

// Civil-date conversions (Gregorian, proleptic). Standard day-count algebra;
// valid far beyond the data ranges handled here.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

int parse_int(const std::string& s, std::size_t pos, std::size_t len, const std::string& text) {
    int out = 0;
    if (pos + len > s.size()) fail("BadTimestamp", "malformed timestamp '" + text + "'");
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    if (res.ec != std::errc() || res.ptr != s.data() + pos + len) {
        fail("BadTimestamp", "malformed timestamp '" + text + "'");
    }
    return out;
}

}  // namespace

std::int64_t parse_time_utc(const std::string& text) {
    // YYYY-MM-DD[ T]HH:MM[:SS][Z]
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' ||
        (text[10] != ' ' && text[10] != 'T') || text[13] != ':') {
        fail("BadTimestamp", "malformed timestamp '" + text + "'");
    }
    const int y = parse_int(text, 0, 4, text);
    const int mo = parse_int(text, 5, 2, text);
    const int d = parse_int(text, 8, 2, text);
    const int h = parse_int(text, 11, 2, text);
    const int mi = parse_int(text, 14, 2, text);
    int se = 0;
    if (text.size() >= 19 && text[16] == ':') se = parse_int(text, 17, 2, text);
    int ry, rm, rd;
    civil_from_days(days_from_civil(y, mo, d), ry, rm, rd);
    if (ry != y || rm != mo || rd != d || h > 23 || mi > 59 || se > 59) {
        fail("BadTimestamp", "malformed timestamp '" + text + "'");
    }
    return days_from_civil(y, mo, d) * kDay + h * kHour + mi * 60 + se;
}

std::int64_t parse_date_utc(const std::string& text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        fail("BadTimestamp", "malformed date '" + text + "'");
    }
    const int y = parse_int(text, 0, 4, text);
    const int mo = parse_int(text, 5, 2, text);
    const int d = parse_int(text, 8, 2, text);
    int ry, rm, rd;
    civil_from_days(days_from_civil(y, mo, d), ry, rm, rd);
    if (ry != y || rm != mo || rd != d) {
        fail("BadTimestamp", "malformed date '" + text + "'");
    }
    return days_from_civil(y, mo, d) * kDay;
}

std::string format_time_utc(std::int64_t t) {
    std::int64_t days = t / kDay;
    std::int64_t rem = t % kDay;
    if (rem < 0) {
        rem += kDay;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    if (rem % 60 == 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", y, m, d,
                      static_cast<int>(rem / kHour), static_cast<int>(rem % kHour / 60));
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                      static_cast<int>(rem / kHour), static_cast<int>(rem % kHour / 60),
                      static_cast<int>(rem % 60));
    }
    return buf;
}

std::string format_date_utc(std::int64_t t) {
    int y, m, d;
    civil_from_days(day_start(t) / kDay, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

void PriceSeries::validate() const {
    if (timestamps.size() != values.size()) {
        fail("GapDetected", "timestamp/value length mismatch");
    }
    const std::int64_t step = step_of(resolution);
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            fail("NonMonotonicTimestamp", "row " + std::to_string(i + 1) + " (" +
                                              format_time_utc(timestamps[i]) +
                                              ") does not increase");
        }
        if (timestamps[i] - timestamps[i - 1] != step) {
            fail("GapDetected", "row " + std::to_string(i + 1) + ": expected " +
                                    format_time_utc(timestamps[i - 1] + step) + ", found " +
                                    format_time_utc(timestamps[i]));
        }
    }
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("MissingColumn", "cannot open '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double out = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        fail("MissingColumn", "bad numeric value '" + text + "' in " + context);
    }
    return out;
}

std::vector<PriceSeries> load_csv_multi(const std::string& path, const CsvSchema& schema,
                                        Resolution resolution) {
    const auto rows = read_csv_rows(path);
    if (rows.empty()) fail("MissingColumn", "'" + path + "' is empty");
    const auto& header = rows.front();
    auto column_of = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            fail("MissingColumn", "'" + path + "' lacks column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ts_col = column_of(schema.timestamp_column);
    std::vector<std::size_t> value_cols;
    for (const auto& name : schema.value_columns) value_cols.push_back(column_of(name));

    std::vector<PriceSeries> out(value_cols.size());
    for (auto& s : out) s.resolution = resolution;

    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != header.size()) {
            fail("MissingColumn",
                 "'" + path + "' row " + std::to_string(i + 1) + " has wrong field count");
        }
        const std::int64_t t = parse_time_utc(row[ts_col]);
        for (std::size_t c = 0; c < value_cols.size(); ++c) {
            out[c].timestamps.push_back(t);
            out[c].values.push_back(
                parse_double(row[value_cols[c]], path + " row " + std::to_string(i + 1)));
        }
    }
    for (auto& s : out) s.validate();
    return out;
}

PriceSeries load_csv(const std::string& path, const CsvSchema& schema, Resolution resolution) {
    if (schema.value_columns.size() != 1) {
        fail("MissingColumn", "load_csv expects exactly one value column");
    }
    return std::move(load_csv_multi(path, schema, resolution).front());
}

}  // namespace deltaflow
