#include "deltaflow/scoring.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace deltaflow {

namespace {

double norm2(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double s = 0.0;
    for (int d = 0; d < 4; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
}

void check_instance(const std::vector<std::array<double, 4>>& samples,
                    const std::array<double, 4>& realization) {
    for (double v : realization) {
        if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite realization");
    }
    for (const auto& s : samples) {
        for (double v : s) {
            if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite forecast sample");
        }
    }
}

std::string level_tag(double level) {
    return std::to_string(int(std::lround(level * 100.0)));
}

}  // namespace

double energy_score(const std::vector<std::array<double, 4>>& samples,
                    const std::array<double, 4>& realization) {
    if (samples.size() < 2) {
        fail("TooFewSamples", "energy score needs at least 2 samples, got " +
                                  std::to_string(samples.size()));
    }
    check_instance(samples, realization);
    const std::size_t n = samples.size();
    double fit = 0.0;
    for (const auto& s : samples) fit += norm2(s, realization);
    double spread = 0.0;  // ordered pairs = twice the strict upper triangle
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) spread += norm2(samples[a], samples[b]);
    }
    return fit / double(n) - spread / double(n * n);
}

double variogram_score(const std::vector<std::array<double, 4>>& samples,
                       const std::array<double, 4>& realization, double gamma, bool scaled) {
    if (samples.empty()) fail("TooFewSamples", "variogram score needs at least 1 sample");
    if (!(gamma > 0.0)) fail("InvalidConfig", "variogram order must be positive");
    check_instance(samples, realization);
    const double inv_n = 1.0 / double(samples.size());
    double vs = 0.0;
    for (int t = 0; t < 4; ++t) {
        for (int u = 0; u < 4; ++u) {
            double fc = 0.0;
            for (const auto& s : samples) fc += std::pow(std::abs(s[t] - s[u]), gamma);
            const double diff = std::pow(std::abs(realization[t] - realization[u]), gamma) - inv_n * fc;
            vs += diff * diff;
        }
    }
    return scaled ? inv_n * vs : vs;
}

double winkler_score(double lower, double upper, double x, double level) {
    if (!(level > 0.0 && level < 1.0)) fail("InvalidAlpha", "interval confidence must lie in (0,1)");
    if (!(lower <= upper)) fail("InvalidInterval", "lower bound exceeds upper bound");
    if (!std::isfinite(lower) || !std::isfinite(upper) || !std::isfinite(x)) {
        fail("NonFiniteInput", "non-finite interval score input");
    }
    const double width = upper - lower;
    if (x < lower) return width + 2.0 / (1.0 - level) * (lower - x);
    if (x > upper) return width + 2.0 / (1.0 - level) * (x - upper);
    return width;
}

namespace {

void check_matching(const std::vector<DensityForecast>& forecasts,
                    const std::vector<DeltaVector>& realizations) {
    if (forecasts.size() != realizations.size()) {
        fail("HourMismatch", "forecast/realization count mismatch: " +
                                 std::to_string(forecasts.size()) + " vs " +
                                 std::to_string(realizations.size()));
    }
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        if (forecasts[i].hour != realizations[i].hour) {
            fail("HourMismatch", "forecast and realization disagree on the hour at row " +
                                     std::to_string(i));
        }
    }
}

std::array<std::pair<double, double>, 4> interval_bounds(const DensityForecast& f, double level) {
    std::array<std::pair<double, double>, 4> bounds;
    std::vector<double> col(f.samples.size());
    for (int q = 0; q < 4; ++q) {
        for (std::size_t s = 0; s < f.samples.size(); ++s) col[s] = f.samples[s][q];
        bounds[q] = {quantile_type7(col, (1.0 - level) / 2.0),
                     quantile_type7(col, (1.0 + level) / 2.0)};
    }
    return bounds;
}

}  // namespace

CoverageResult pi_coverage(const std::vector<DensityForecast>& forecasts,
                           const std::vector<DeltaVector>& realizations, double level) {
    if (!(level > 0.0 && level < 1.0)) fail("InvalidAlpha", "coverage level must lie in (0,1)");
    check_matching(forecasts, realizations);
    if (forecasts.empty()) fail("TooFewSamples", "no forecasts to evaluate");

    CoverageResult res;
    std::array<std::size_t, 4> hits{};
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const auto bounds = interval_bounds(forecasts[i], level);
        for (int q = 0; q < 4; ++q) {
            const double x = realizations[i].d[q];
            hits[q] += (x >= bounds[q].first && x <= bounds[q].second);
        }
    }
    std::size_t all = 0;
    for (int q = 0; q < 4; ++q) {
        res.per_quarter[q] = double(hits[q]) / double(forecasts.size());
        all += hits[q];
    }
    res.overall = double(all) / double(4 * forecasts.size());
    return res;
}

SummaryStats summarize(const std::vector<double>& values) {
    if (values.empty()) fail("TooFewSamples", "summary of an empty series");
    SummaryStats s;
    s.min = quantile_type7(values, 0.0);
    s.q25 = quantile_type7(values, 0.25);
    s.median = quantile_type7(values, 0.5);
    s.q75 = quantile_type7(values, 0.75);
    s.max = quantile_type7(values, 1.0);
    s.mean = mean(values);
    return s;
}

namespace {

std::vector<double> row_metric(const ScoreReport& r, double HourScores::* member) {
    std::vector<double> v(r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) v[i] = r.rows[i].*member;
    return v;
}

}  // namespace

SummaryStats ScoreReport::energy_summary() const { return summarize(row_metric(*this, &HourScores::energy)); }

SummaryStats ScoreReport::variogram_summary() const {
    return summarize(row_metric(*this, &HourScores::variogram));
}

SummaryStats ScoreReport::winkler_summary(std::size_t level_index) const {
    if (level_index >= levels.size()) fail("InvalidAlpha", "no such interval level in the report");
    std::vector<double> v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i].winkler[level_index];
    return summarize(v);
}

ScoreReport score_forecasts(const std::string& model,
                            const std::vector<DensityForecast>& forecasts,
                            const std::vector<DeltaVector>& realizations, double gamma,
                            bool vs_scaled, const std::vector<double>& levels) {
    check_matching(forecasts, realizations);
    if (forecasts.empty()) fail("TooFewSamples", "no forecasts to evaluate");

    ScoreReport report;
    report.model = model;
    report.gamma = gamma;
    report.vs_scaled = vs_scaled;
    report.levels = levels;
    report.rows.reserve(forecasts.size());
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        HourScores row;
        row.hour = forecasts[i].hour;
        row.energy = energy_score(forecasts[i].samples, realizations[i].d);
        row.variogram = variogram_score(forecasts[i].samples, realizations[i].d, gamma, vs_scaled);
        for (double level : levels) {
            const auto bounds = interval_bounds(forecasts[i], level);
            double w = 0.0;
            for (int q = 0; q < 4; ++q) {
                w += winkler_score(bounds[q].first, bounds[q].second, realizations[i].d[q], level);
            }
            row.winkler.push_back(w / 4.0);
        }
        report.rows.push_back(std::move(row));
    }
    for (double level : levels) report.coverage.push_back(pi_coverage(forecasts, realizations, level));
    return report;
}

void report_save_csv(const ScoreReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileUnreadable", "cannot open " + path + " for writing");
    out << "timestamp,energy,variogram";
    for (double level : report.levels) out << ",winkler_" << level_tag(level);
    out << "\n";
    for (const auto& row : report.rows) {
        out << format_time_utc(row.hour) << ',' << format_double(row.energy) << ','
            << format_double(row.variogram);
        for (double w : row.winkler) out << ',' << format_double(w);
        out << "\n";
    }
    if (!out.good()) fail("FileUnreadable", "failed writing " + path);
}

namespace {

nlohmann::json summary_json(const SummaryStats& s) {
    return {{"min", s.min}, {"q25", s.q25},  {"median", s.median},
            {"q75", s.q75}, {"max", s.max},  {"mean", s.mean}};
}

}  // namespace

std::string report_to_json(const ScoreReport& report) {
    nlohmann::json j;
    j["model"] = report.model;
    j["hours"] = report.rows.size();
    j["gamma"] = report.gamma;
    j["vs_variant"] = report.vs_scaled ? "scaled" : "unscaled";
    j["energy"] = summary_json(report.energy_summary());
    j["variogram"] = summary_json(report.variogram_summary());
    auto winkler = nlohmann::json::object();
    auto coverage = nlohmann::json::object();
    for (std::size_t k = 0; k < report.levels.size(); ++k) {
        const auto tag = level_tag(report.levels[k]);
        winkler[tag] = summary_json(report.winkler_summary(k));
        coverage[tag] = {{"overall", report.coverage[k].overall},
                         {"per_quarter", report.coverage[k].per_quarter}};
    }
    j["winkler"] = std::move(winkler);
    j["coverage"] = std::move(coverage);
    return j.dump(2);
}

}  // namespace deltaflow
