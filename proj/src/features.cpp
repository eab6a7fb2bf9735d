#include "deltaflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "deltaflow/common.hpp"
#include "json.hpp"

namespace deltaflow {

namespace {

const char* kQuarterTag[4] = {"00", "15", "30", "45"};

double quarter_mean(const std::array<double, 4>& a) {
    return 0.25 * (a[0] + a[1] + a[2] + a[3]);
}

}  // namespace

const std::vector<FeatureGroup>& all_feature_groups() {
    static const std::vector<FeatureGroup> groups{FeatureGroup::PriceTime, FeatureGroup::Errors,
                                                  FeatureGroup::Ramps, FeatureGroup::Fuel};
    return groups;
}

std::string feature_group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::PriceTime: return "price_time";
        case FeatureGroup::Errors: return "errors";
        case FeatureGroup::Ramps: return "ramps";
        case FeatureGroup::Fuel: return "fuel";
    }
    fail("UnknownGroup", "bad feature group enum");
}

FeatureGroup parse_feature_group(const std::string& name) {
    for (FeatureGroup g : all_feature_groups()) {
        if (feature_group_name(g) == name) return g;
    }
    fail("UnknownGroup", "unknown feature group '" + name + "'");
}

std::vector<std::string> feature_names(const std::vector<FeatureGroup>& groups) {
    std::vector<std::string> names;
    for (FeatureGroup g : all_feature_groups()) {
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) continue;
        switch (g) {
            case FeatureGroup::PriceTime:
                names.insert(names.end(), {"da", "dda_back", "dda_fwd", "cos_hour", "sin_hour"});
                for (int q = 0; q < 4; ++q)
                    names.push_back(std::string("delta_lag1_") + kQuarterTag[q]);
                for (int q = 0; q < 4; ++q)
                    names.push_back(std::string("delta_lag2_") + kQuarterTag[q]);
                break;
            case FeatureGroup::Errors:
                for (const char* s : {"solar_error_", "wind_error_", "load_error_"})
                    for (int q = 0; q < 4; ++q) names.push_back(s + std::string(kQuarterTag[q]));
                break;
            case FeatureGroup::Ramps:
                names.insert(names.end(), {"solar_ramp", "wind_ramp", "load_ramp",
                                           "total_gen_ramp", "import_export_ramp"});
                break;
            case FeatureGroup::Fuel:
                names.insert(names.end(), {"oil", "gas"});
                break;
        }
    }
    return names;
}

bool feature_row_valid(const MarketDataset& ds, std::size_t i) {
    return i >= 2 && i + 1 < ds.size();
}

FeatureVector build_features(const MarketDataset& ds, std::size_t i,
                             const std::vector<FeatureGroup>& groups) {
    if (ds.size() < 4) fail("BoundaryHour", "dataset too short for feature building");
    if (i == 0 || i + 1 >= ds.size()) {
        fail("BoundaryHour", "hour " + format_time_utc(ds.hours[std::min(i, ds.size() - 1)].hour) +
                                 " is at the dataset boundary");
    }
    if (i < 2) {
        fail("LagUnavailable", "hour " + format_time_utc(ds.hours[i].hour) +
                                   " lacks two hours of history");
    }
    const HourRecord& h = ds.hours[i];
    const HourRecord& hm1 = ds.hours[i - 1];
    const HourRecord& hm2 = ds.hours[i - 2];
    const HourRecord& hp1 = ds.hours[i + 1];

    FeatureVector fv;
    fv.names = feature_names(groups);
    fv.values.reserve(fv.names.size());

    for (FeatureGroup g : all_feature_groups()) {
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) continue;
        switch (g) {
            case FeatureGroup::PriceTime: {
                fv.values.push_back(h.da);
                fv.values.push_back(h.da - hm1.da);
                fv.values.push_back(hp1.da - h.da);
                const double ang =
                    2.0 * std::numbers::pi * double(hour_of_day(h.hour)) / 24.0;
                fv.values.push_back(std::cos(ang));
                fv.values.push_back(std::sin(ang));
                for (int q = 0; q < 4; ++q) fv.values.push_back(hm1.id3[q] - hm1.da);
                for (int q = 0; q < 4; ++q) fv.values.push_back(hm2.id3[q] - hm2.da);
                break;
            }
            case FeatureGroup::Errors:
                for (int q = 0; q < 4; ++q)
                    fv.values.push_back(h.solar_actual[q] - h.solar_forecast[q]);
                for (int q = 0; q < 4; ++q)
                    fv.values.push_back(h.wind_actual[q] - h.wind_forecast[q]);
                for (int q = 0; q < 4; ++q)
                    fv.values.push_back(h.load_actual[q] - h.load_forecast[q]);
                break;
            case FeatureGroup::Ramps: {
                const double solar = quarter_mean(h.solar_forecast);
                const double wind = quarter_mean(h.wind_forecast);
                const double load = quarter_mean(h.load_forecast);
                const double solar_p = quarter_mean(hm1.solar_forecast);
                const double wind_p = quarter_mean(hm1.wind_forecast);
                const double load_p = quarter_mean(hm1.load_forecast);
                fv.values.push_back(solar - solar_p);
                fv.values.push_back(wind - wind_p);
                fv.values.push_back(load - load_p);
                fv.values.push_back((solar + wind) - (solar_p + wind_p));
                fv.values.push_back((solar + wind - load) - (solar_p + wind_p - load_p));
                break;
            }
            case FeatureGroup::Fuel:
                if (!ds.has_fuel) {
                    fail("MissingColumn", "fuel features requested but dataset has no fuel data");
                }
                fv.values.push_back(h.oil);
                fv.values.push_back(h.gas);
                break;
        }
    }
    return fv;
}

FeatureMatrix build_feature_matrix(const MarketDataset& ds,
                                   const std::vector<FeatureGroup>& groups) {
    FeatureMatrix m;
    m.names = feature_names(groups);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!feature_row_valid(ds, i)) continue;
        m.hours.push_back(ds.hours[i].hour);
        m.rows.push_back(build_features(ds, i, groups).values);
    }
    return m;
}

void write_feature_matrix_csv(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("MissingColumn", "cannot write '" + path + "'");
    out << "timestamp";
    for (const auto& n : m.names) out << "," << n;
    out << "\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << format_time_utc(m.hours[r]);
        for (double v : m.rows[r]) out << "," << format_double(v);
        out << "\n";
    }
}

FeatureMatrix read_feature_matrix_csv(const std::string& path) {
    const auto rows = read_csv_rows(path);
    if (rows.empty() || rows.front().empty() || rows.front()[0] != "timestamp") {
        fail("MissingColumn", "'" + path + "' is not a feature matrix");
    }
    FeatureMatrix m;
    m.names.assign(rows.front().begin() + 1, rows.front().end());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            fail("MissingColumn",
                 "'" + path + "' row " + std::to_string(i + 1) + " has wrong field count");
        }
        m.hours.push_back(parse_time_utc(rows[i][0]));
        std::vector<double> vals;
        for (std::size_t c = 1; c < rows[i].size(); ++c) {
            vals.push_back(parse_double(rows[i][c], path + " row " + std::to_string(i + 1)));
        }
        m.rows.push_back(std::move(vals));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Probability integral transform.
// ---------------------------------------------------------------------------

PitTransform PitTransform::fit(const std::vector<std::vector<double>>& columns) {
    PitTransform t;
    for (std::size_t d = 0; d < columns.size(); ++d) {
        if (columns[d].size() < 50) {
            fail("TooFewSamples", "dimension " + std::to_string(d) + " has " +
                                      std::to_string(columns[d].size()) +
                                      " training values, need >= 50");
        }
        auto v = columns[d];
        std::sort(v.begin(), v.end());
        if (v.front() == v.back()) {
            fail("DegenerateDimension",
                 "dimension " + std::to_string(d) + " has zero spread");
        }
        t.sorted_.push_back(std::move(v));
    }
    return t;
}

double PitTransform::forward(std::size_t dim, double x) const {
    const auto& v = sorted_.at(dim);
    const double n = double(v.size());
    double p;
    if (x <= v.front()) {
        p = 0.5 / n;
    } else if (x >= v.back()) {
        p = 1.0 - 0.5 / n;
    } else {
        // Position within the sorted support; ties collapse to the midpoint
        // of the tied run.
        const auto lo = std::lower_bound(v.begin(), v.end(), x);
        const auto hi = std::upper_bound(v.begin(), v.end(), x);
        double k;  // fractional rank, 0-based
        if (lo != hi) {
            k = 0.5 * (double(lo - v.begin()) + double(hi - v.begin() - 1));
        } else {
            const auto j = std::size_t(lo - v.begin());  // v[j-1] < x < v[j]
            const double frac = (x - v[j - 1]) / (v[j] - v[j - 1]);
            k = double(j - 1) + frac;
        }
        p = std::clamp((k + 0.5) / n, 0.5 / n, 1.0 - 0.5 / n);
    }
    return norm_quantile(p);
}

double PitTransform::inverse(std::size_t dim, double z) const {
    const auto& v = sorted_.at(dim);
    const double n = double(v.size());
    const double p = norm_cdf(z);
    const double k = p * n - 0.5;  // fractional 0-based rank at Hazen positions
    if (k <= 0.0) return v.front();
    if (k >= n - 1.0) return v.back();
    const auto j = std::size_t(k);
    const double frac = k - double(j);
    return v[j] + frac * (v[j + 1] - v[j]);
}

std::vector<double> PitTransform::forward_vec(const std::vector<double>& x) const {
    std::vector<double> out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = forward(d, x[d]);
    return out;
}

std::vector<double> PitTransform::inverse_vec(const std::vector<double>& z) const {
    std::vector<double> out(z.size());
    for (std::size_t d = 0; d < z.size(); ++d) out[d] = inverse(d, z[d]);
    return out;
}

std::string PitTransform::to_json() const {
    nlohmann::json j;
    j["support"] = sorted_;
    return j.dump();
}

PitTransform PitTransform::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PitTransform t;
    t.sorted_ = j.at("support").get<std::vector<std::vector<double>>>();
    return t;
}

}  // namespace deltaflow
