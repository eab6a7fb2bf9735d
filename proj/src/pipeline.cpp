#include "deltaflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace deltaflow {
namespace {

std::array<double, 4> pit_forward4(const PitTransform& pit, const std::array<double, 4>& x) {
    std::array<double, 4> z;
    for (std::size_t d = 0; d < 4; ++d) z[d] = pit.forward(d, x[d]);
    return z;
}

std::array<double, 4> pit_inverse4(const PitTransform& pit, const std::array<double, 4>& z) {
    std::array<double, 4> x;
    for (std::size_t d = 0; d < 4; ++d) x[d] = pit.inverse(d, z[d]);
    return x;
}

bool uses_features(ModelTag tag) {
    return tag == ModelTag::Flow || tag == ModelTag::Gaussian || tag == ModelTag::Copula;
}

std::vector<FeatureGroup> default_groups(const MarketDataset& ds) {
    std::vector<FeatureGroup> groups{FeatureGroup::PriceTime, FeatureGroup::Errors,
                                     FeatureGroup::Ramps};
    if (ds.has_fuel) groups.push_back(FeatureGroup::Fuel);
    return groups;
}

void check_train_boundary(const MarketDataset& ds, std::int64_t train_end) {
    if (train_end <= ds.start())
        fail("InvalidConfig", "training boundary " + format_time_utc(train_end) +
                                  " leaves no training data (data start " +
                                  format_time_utc(ds.start()) + ")");
    if (train_end >= ds.end())
        fail("InvalidConfig", "training boundary " + format_time_utc(train_end) +
                                  " leaves no test range (data end " +
                                  format_time_utc(ds.end()) + ")");
}

}  // namespace

const std::vector<ModelTag>& all_model_tags() {
    static const std::vector<ModelTag> tags{ModelTag::Flow, ModelTag::Gaussian, ModelTag::Copula,
                                            ModelTag::HistMulti, ModelTag::HistUni};
    return tags;
}

std::string model_tag_name(ModelTag tag) {
    switch (tag) {
        case ModelTag::Flow: return "flow";
        case ModelTag::Gaussian: return "gaussian";
        case ModelTag::Copula: return "copula";
        case ModelTag::HistMulti: return "hist-multi";
        case ModelTag::HistUni: return "hist-uni";
    }
    fail("UnknownModel", "unhandled model tag");
}

ModelTag parse_model_tag(const std::string& name) {
    for (ModelTag tag : all_model_tags())
        if (model_tag_name(tag) == name) return tag;
    fail("UnknownModel", "no model tag named '" + name +
                             "' (expected flow, gaussian, copula, hist-multi or hist-uni)");
}

std::vector<double> FeatureScaler::apply(const std::vector<double>& x) const {
    if (x.size() != mean.size())
        fail("DimensionMismatch", "scaler fitted on " + std::to_string(mean.size()) +
                                      " features, got " + std::to_string(x.size()));
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / sd[j];
    return z;
}

FeatureScaler fit_scaler(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) fail("TooFewSamples", "no rows to fit a feature scaler on");
    const std::size_t width = rows[0].size();
    FeatureScaler s;
    s.mean.assign(width, 0.0);
    s.sd.assign(width, 0.0);
    for (const auto& row : rows) {
        if (row.size() != width) fail("DimensionMismatch", "ragged feature rows");
        for (std::size_t j = 0; j < width; ++j) s.mean[j] += row[j];
    }
    for (double& m : s.mean) m /= double(rows.size());
    for (const auto& row : rows)
        for (std::size_t j = 0; j < width; ++j) {
            const double c = row[j] - s.mean[j];
            s.sd[j] += c * c;
        }
    for (double& v : s.sd) {
        v = std::sqrt(v / double(rows.size()));
        if (!(v > 1e-12)) v = 1.0;  // constant column: map to exact zero
    }
    return s;
}

std::int64_t default_train_end(const MarketDataset& ds) {
    const std::int64_t t = ds.start() + (ds.end() - ds.start()) * 4 / 5;
    const std::int64_t snapped = day_start(t);
    return snapped > ds.start() ? snapped : t;
}

TrainResult train_model(const MarketDataset& ds, const TrainConfig& cfg) {
    const std::int64_t boundary = cfg.train_end != 0 ? cfg.train_end : default_train_end(ds);
    check_train_boundary(ds, boundary);

    TrainResult result;
    TrainedModel& model = result.model;
    model.tag = cfg.tag;
    model.train_start = ds.start();
    model.train_end = boundary;

    const std::vector<DeltaVector> deltas = build_delta_series(ds);
    std::vector<DeltaVector> train_deltas;
    for (const DeltaVector& dv : deltas)
        if (dv.hour < boundary) train_deltas.push_back(dv);

    if (!uses_features(cfg.tag)) {
        model.history = build_history_index(train_deltas);
        return result;
    }

    model.groups = cfg.groups.empty() ? default_groups(ds) : cfg.groups;

    std::array<std::vector<double>, 4> columns;
    for (const DeltaVector& dv : train_deltas)
        for (std::size_t d = 0; d < 4; ++d) columns[d].push_back(dv.d[d]);
    model.pit = PitTransform::fit({columns.begin(), columns.end()});

    const FeatureMatrix matrix = build_feature_matrix(ds, model.groups);
    std::vector<std::vector<double>> raw_rows;
    std::vector<std::array<double, 4>> targets;
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        if (matrix.hours[i] >= boundary) continue;
        const HourRecord& hr = ds.hours[ds.index_of(matrix.hours[i]).value()];
        std::array<double, 4> delta;
        for (std::size_t q = 0; q < 4; ++q) delta[q] = hr.id3[q] - hr.da;
        raw_rows.push_back(matrix.rows[i]);
        targets.push_back(pit_forward4(model.pit, delta));
    }
    if (raw_rows.empty())
        fail("TooFewSamples", "no feature-complete training hours before the boundary");

    model.scaler = fit_scaler(raw_rows);
    std::vector<std::vector<double>> rows(raw_rows.size());
    for (std::size_t i = 0; i < raw_rows.size(); ++i) rows[i] = model.scaler.apply(raw_rows[i]);

    switch (cfg.tag) {
        case ModelTag::Flow: {
            FlowFit fit = fit_flow(targets, rows, cfg.train);
            model.flow = std::move(fit.model);
            result.loss_trace = std::move(fit.loss_trace);
            break;
        }
        case ModelTag::Gaussian: {
            GaussianFitResult fit = fit_gaussian(targets, rows, cfg.train);
            model.gaussian = std::move(fit.head);
            result.loss_trace = std::move(fit.loss_trace);
            break;
        }
        case ModelTag::Copula:
            model.copula = fit_copula_model(targets, rows, quantile_grid());
            break;
        default: break;
    }
    return result;
}

std::string trained_to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["format"] = "deltaflow-model";
    j["version"] = 1;
    j["tag"] = model_tag_name(model.tag);
    j["train_start"] = model.train_start;
    j["train_end"] = model.train_end;
    if (uses_features(model.tag)) {
        std::vector<std::string> groups;
        for (FeatureGroup g : model.groups) groups.push_back(feature_group_name(g));
        j["groups"] = groups;
        j["pit"] = nlohmann::json::parse(model.pit.to_json());
        j["scaler"] = {{"mean", model.scaler.mean}, {"sd", model.scaler.sd}};
    }
    switch (model.tag) {
        case ModelTag::Flow: j["core"] = nlohmann::json::parse(flow_to_json(model.flow)); break;
        case ModelTag::Gaussian:
            j["core"] = nlohmann::json::parse(gaussian_to_json(model.gaussian));
            break;
        case ModelTag::Copula:
            j["core"] = nlohmann::json::parse(copula_to_json(model.copula));
            break;
        default: j["core"] = nlohmann::json::parse(history_to_json(model.history)); break;
    }
    return j.dump(2);
}

TrainedModel trained_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail("DimensionMismatch", std::string("malformed model file: ") + e.what());
    }
    if (j.value("format", "") != "deltaflow-model" || j.value("version", 0) != 1)
        fail("DimensionMismatch", "not a recognized trained-model file");

    TrainedModel model;
    model.tag = parse_model_tag(j.at("tag").get<std::string>());
    model.train_start = j.at("train_start").get<std::int64_t>();
    model.train_end = j.at("train_end").get<std::int64_t>();
    if (uses_features(model.tag)) {
        for (const auto& name : j.at("groups"))
            model.groups.push_back(parse_feature_group(name.get<std::string>()));
        model.pit = PitTransform::from_json(j.at("pit").dump());
        model.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        model.scaler.sd = j.at("scaler").at("sd").get<std::vector<double>>();
        if (model.scaler.mean.size() != model.scaler.sd.size())
            fail("DimensionMismatch", "scaler mean/sd length mismatch");
    }
    const std::string core = j.at("core").dump();
    switch (model.tag) {
        case ModelTag::Flow: model.flow = flow_from_json(core); break;
        case ModelTag::Gaussian: model.gaussian = gaussian_from_json(core); break;
        case ModelTag::Copula: model.copula = copula_from_json(core); break;
        default: model.history = history_from_json(core); break;
    }
    return model;
}

void save_trained(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileUnreadable", "cannot write '" + path + "'");
    out << trained_to_json(model) << "\n";
    if (!out.flush()) fail("FileUnreadable", "failed writing '" + path + "'");
}

TrainedModel load_trained(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileUnreadable", "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return trained_from_json(buf.str());
}

ForecastResult forecast_hours(const MarketDataset& ds, const TrainedModel& model,
                              const ForecastConfig& cfg) {
    if (cfg.samples < 2) fail("InvalidConfig", "need at least 2 samples per hour");
    const std::int64_t start = cfg.start != 0 ? cfg.start : model.train_end;
    const std::int64_t end = cfg.end != 0 ? cfg.end : ds.end();
    if (start < model.train_end)
        fail("InvalidConfig", "forecast start " + format_time_utc(start) +
                                  " overlaps the training range (boundary " +
                                  format_time_utc(model.train_end) + ")");
    if (start >= end)
        fail("InvalidConfig", "empty forecast window " + format_time_utc(start) + " .. " +
                                  format_time_utc(end));

    const std::string name = model_tag_name(model.tag);
    ForecastResult result;
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < ds.hours.size(); ++i) {
        const HourRecord& hr = ds.hours[i];
        if (hr.hour < start || hr.hour >= end) continue;

        std::vector<std::array<double, 4>> draws;
        if (uses_features(model.tag)) {
            std::vector<double> cond;
            try {
                cond = model.scaler.apply(build_features(ds, i, model.groups).values);
            } catch (const Error& e) {
                result.skipped.push_back(format_time_utc(hr.hour) + ": " + e.code());
                continue;
            }
            switch (model.tag) {
                case ModelTag::Flow: draws = flow_sample(model.flow, cond, cfg.samples, rng); break;
                case ModelTag::Gaussian:
                    draws = gaussian_sample(model.gaussian, cond, cfg.samples, rng);
                    break;
                default: draws = copula_sample(model.copula, cond, cfg.samples, rng); break;
            }
            for (auto& z : draws) z = pit_inverse4(model.pit, z);
        } else {
            draws = model.tag == ModelTag::HistMulti
                        ? sample_multivariate(model.history, hour_of_day(hr.hour), cfg.samples, rng)
                        : sample_univariate(model.history, hour_of_day(hr.hour), cfg.samples, rng);
        }

        DensityForecast f;
        f.hour = hr.hour;
        f.model = name;
        f.seed = cfg.seed;
        f.samples.reserve(draws.size());
        for (const auto& delta : draws) {
            std::array<double, 4> price;
            for (std::size_t q = 0; q < 4; ++q) price[q] = hr.da + delta[q];
            f.samples.push_back(price);
        }
        result.forecasts.push_back(std::move(f));
        result.realizations.push_back({hr.hour, hr.id3});
    }
    if (result.forecasts.empty())
        fail("TooFewSamples", "no forecastable hours in " + format_time_utc(start) + " .. " +
                                  format_time_utc(end));
    return result;
}

void forecast_save_csv(const std::vector<DensityForecast>& forecasts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileUnreadable", "cannot write '" + path + "'");
    out << "timestamp,model,seed,sample,id3_00,id3_15,id3_30,id3_45\n";
    for (const DensityForecast& f : forecasts) {
        for (std::size_t s = 0; s < f.samples.size(); ++s) {
            out << format_time_utc(f.hour) << ',' << f.model << ',' << f.seed << ',' << s;
            for (double v : f.samples[s]) out << ',' << format_double(v);
            out << '\n';
        }
    }
    if (!out.flush()) fail("FileUnreadable", "failed writing '" + path + "'");
}

std::vector<DensityForecast> forecast_load_csv(const std::string& path) {
    const auto rows = read_csv_rows(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"timestamp", "model", "seed", "sample",
                                                            "id3_00", "id3_15", "id3_30", "id3_45"})
        fail("MissingColumn", "'" + path + "' is not a forecast file");

    std::vector<DensityForecast> forecasts;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 8) fail("MissingColumn", "short row in '" + path + "'");
        const std::int64_t hour = parse_time_utc(row[0]);
        if (forecasts.empty() || forecasts.back().hour != hour) {
            DensityForecast f;
            f.hour = hour;
            f.model = row[1];
            try {
                f.seed = std::stoull(row[2]);
            } catch (const std::exception&) {
                fail("BadTimestamp", "bad seed field '" + row[2] + "' in '" + path + "'");
            }
            forecasts.push_back(std::move(f));
        }
        std::array<double, 4> v;
        for (std::size_t q = 0; q < 4; ++q) v[q] = parse_double(row[4 + q], "sample");
        forecasts.back().samples.push_back(v);
    }
    if (forecasts.empty()) fail("TooFewSamples", "'" + path + "' holds no forecasts");
    return forecasts;
}

ScoreReport evaluate_forecasts(const MarketDataset& ds,
                               const std::vector<DensityForecast>& forecasts,
                               const EvaluateConfig& cfg) {
    if (forecasts.empty()) fail("TooFewSamples", "no forecasts to evaluate");
    std::vector<DeltaVector> realizations;
    realizations.reserve(forecasts.size());
    for (const DensityForecast& f : forecasts) {
        const auto idx = ds.index_of(f.hour);
        if (!idx)
            fail("HourMismatch",
                 "forecast hour " + format_time_utc(f.hour) + " not present in the dataset");
        realizations.push_back({f.hour, ds.hours[*idx].id3});
    }
    return score_forecasts(forecasts.front().model, forecasts, realizations, cfg.gamma,
                           cfg.vs_scaled, cfg.levels);
}

std::string boxplot_csv(const std::vector<std::string>& labels,
                        const std::vector<ScoreReport>& reports) {
    if (labels.size() != reports.size())
        fail("DimensionMismatch", "one label per report required");
    std::ostringstream out;
    out << "label,metric,min,q25,median,q75,max,outliers\n";
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const ScoreReport& report = reports[r];
        const std::size_t metrics = 2 + report.levels.size();
        for (std::size_t m = 0; m < metrics; ++m) {
            std::string metric;
            std::vector<double> values;
            values.reserve(report.rows.size());
            if (m == 0) {
                metric = "energy";
                for (const HourScores& h : report.rows) values.push_back(h.energy);
            } else if (m == 1) {
                metric = "variogram";
                for (const HourScores& h : report.rows) values.push_back(h.variogram);
            } else {
                const std::size_t li = m - 2;
                metric = "winkler_" + std::to_string(std::lround(report.levels[li] * 100));
                for (const HourScores& h : report.rows) values.push_back(h.winkler[li]);
            }
            const SummaryStats s = summarize(values);
            const double fence = 1.5 * (s.q75 - s.q25);
            std::string outliers;
            std::sort(values.begin(), values.end());
            for (double v : values) {
                if (v >= s.q25 - fence && v <= s.q75 + fence) continue;
                if (!outliers.empty()) outliers += ';';
                outliers += format_double(v);
            }
            out << labels[r] << ',' << metric << ',' << format_double(s.min) << ','
                << format_double(s.q25) << ',' << format_double(s.median) << ','
                << format_double(s.q75) << ',' << format_double(s.max) << ',' << outliers << '\n';
        }
    }
    return out.str();
}

MarketDataset load_data_dir(const std::string& dir) {
    const std::filesystem::path flat = std::filesystem::path(dir) / "dataset.csv";
    if (std::filesystem::exists(flat)) return MarketDataset::load_dataset_csv(flat.string());
    return load_market_directory(dir);
}

}  // namespace deltaflow
