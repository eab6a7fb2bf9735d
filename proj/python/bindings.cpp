#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/dataset.hpp"
#include "deltaflow/features.hpp"
#include "deltaflow/pipeline.hpp"
#include "deltaflow/scoring.hpp"
#include "deltaflow/synthetic.hpp"
#include "deltaflow/timeseries.hpp"
#include "deltaflow/treeshap.hpp"

namespace py = pybind11;
using namespace deltaflow;

namespace {

std::int64_t parse_boundary(const std::string& text) {
    if (text.find(':') != std::string::npos) return parse_time_utc(text);
    return parse_date_utc(text);
}

std::vector<FeatureGroup> to_groups(const std::vector<std::string>& names) {
    std::vector<FeatureGroup> groups;
    for (const std::string& name : names) groups.push_back(parse_feature_group(name));
    return groups;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Probabilistic forecasting of intraday-vs-day-ahead electricity price differences";

    py::class_<MarketDataset>(m, "Dataset")
        .def_property_readonly("n_hours",
                               [](const MarketDataset& ds) { return ds.hours.size(); })
        .def_property_readonly("has_fuel", [](const MarketDataset& ds) { return ds.has_fuel; })
        .def("start", &MarketDataset::start, "first delivery hour, epoch seconds (UTC)")
        .def("end", &MarketDataset::end, "one past the last delivery hour, epoch seconds")
        .def("save_csv", &MarketDataset::save_csv, py::arg("path"))
        .def("__repr__", [](const MarketDataset& ds) {
            return "<deltaflow.Dataset " + std::to_string(ds.hours.size()) + " hours from " +
                   format_time_utc(ds.start()) + ">";
        });

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("tag",
                               [](const TrainedModel& t) { return model_tag_name(t.tag); })
        .def_readonly("train_start", &TrainedModel::train_start)
        .def_readonly("train_end", &TrainedModel::train_end)
        .def_property_readonly("features",
                               [](const TrainedModel& t) {
                                   std::vector<std::string> names;
                                   for (FeatureGroup g : t.groups)
                                       names.push_back(feature_group_name(g));
                                   return names;
                               })
        .def("save",
             [](const TrainedModel& t, const std::string& path) { save_trained(t, path); },
             py::arg("path"))
        .def("__repr__", [](const TrainedModel& t) {
            return "<deltaflow.Model " + model_tag_name(t.tag) + ">";
        });

    py::class_<DensityForecast>(m, "Forecast")
        .def_readonly("hour", &DensityForecast::hour)
        .def_readonly("model", &DensityForecast::model)
        .def_readonly("seed", &DensityForecast::seed)
        .def_readonly("samples", &DensityForecast::samples)
        .def("__repr__", [](const DensityForecast& f) {
            return "<deltaflow.Forecast " + format_time_utc(f.hour) + " " + f.model + " x" +
                   std::to_string(f.samples.size()) + ">";
        });

    m.def(
        "generate",
        [](int days, std::uint64_t seed, const std::string& start_date, double da_base,
           double da_amplitude, double da_noise, double ramp_coupling, double ar_coeff,
           double error_coupling, double noise_scale, double rho, int tail_df,
           double exo_error_scale) {
            SynthConfig cfg;
            cfg.days = days;
            cfg.start_date = start_date;
            cfg.da_base = da_base;
            cfg.da_amplitude = da_amplitude;
            cfg.da_noise = da_noise;
            cfg.ramp_coupling = ramp_coupling;
            cfg.ar_coeff = ar_coeff;
            cfg.error_coupling = error_coupling;
            cfg.noise_scale = noise_scale;
            cfg.rho = rho;
            cfg.tail_df = tail_df;
            cfg.exo_error_scale = exo_error_scale;
            return generate_synthetic(cfg, seed).dataset;
        },
        "Synthesize a market dataset with known dynamics.", py::arg("days") = 30,
        py::arg("seed") = 0, py::arg("start_date") = "2021-01-01", py::arg("da_base") = 40.0,
        py::arg("da_amplitude") = 15.0, py::arg("da_noise") = 3.0,
        py::arg("ramp_coupling") = 0.0, py::arg("ar_coeff") = 0.0,
        py::arg("error_coupling") = 0.0, py::arg("noise_scale") = 1.0, py::arg("rho") = 0.8,
        py::arg("tail_df") = 0, py::arg("exo_error_scale") = 50.0);

    m.def("load_data", &load_data_dir, py::arg("path"),
          "Load a dataset directory (flat dataset.csv or per-series files).");

    m.def(
        "train",
        [](const MarketDataset& ds, const std::string& model,
           const std::vector<std::string>& features, const std::string& train_end, int epochs,
           std::size_t batch, double lr, std::uint64_t seed) {
            TrainConfig cfg;
            cfg.tag = parse_model_tag(model);
            cfg.groups = to_groups(features);
            if (!train_end.empty()) cfg.train_end = parse_boundary(train_end);
            cfg.train.epochs = epochs;
            cfg.train.batch = batch;
            cfg.train.lr = lr;
            cfg.train.seed = seed;
            return train_model(ds, cfg).model;
        },
        "Fit a forecaster; model is one of model_tags().", py::arg("dataset"),
        py::arg("model") = "flow", py::arg("features") = std::vector<std::string>{},
        py::arg("train_end") = "", py::arg("epochs") = 500, py::arg("batch") = std::size_t(128),
        py::arg("lr") = 1e-3, py::arg("seed") = 0);

    m.def("load_model", &load_trained, py::arg("path"));

    m.def(
        "forecast",
        [](const MarketDataset& ds, const TrainedModel& model, std::size_t samples,
           std::uint64_t seed, const std::string& start, const std::string& end) {
            ForecastConfig cfg;
            cfg.samples = samples;
            cfg.seed = seed;
            if (!start.empty()) cfg.start = parse_boundary(start);
            if (!end.empty()) cfg.end = parse_boundary(end);
            return forecast_hours(ds, model, cfg).forecasts;
        },
        "Per-hour price scenarios in EUR/MWh over the test window.", py::arg("dataset"),
        py::arg("model"), py::arg("samples") = std::size_t(100), py::arg("seed") = 0,
        py::arg("start") = "", py::arg("end") = "");

    m.def("save_forecast_csv", &forecast_save_csv, py::arg("forecasts"), py::arg("path"));
    m.def("load_forecast_csv", &forecast_load_csv, py::arg("path"));

    m.def(
        "evaluate_json",
        [](const MarketDataset& ds, const std::vector<DensityForecast>& forecasts, double gamma,
           bool vs_scaled, const std::vector<double>& levels) {
            EvaluateConfig cfg;
            cfg.gamma = gamma;
            cfg.vs_scaled = vs_scaled;
            cfg.levels = levels;
            return report_to_json(evaluate_forecasts(ds, forecasts, cfg));
        },
        py::arg("dataset"), py::arg("forecasts"), py::arg("gamma") = 0.5,
        py::arg("vs_scaled") = true, py::arg("levels") = std::vector<double>{0.5, 0.9});

    m.def(
        "explain",
        [](const MarketDataset& ds, const std::vector<std::string>& features, int trees,
           int depth, double lr, double train_fraction, std::uint64_t seed) {
            std::vector<FeatureGroup> groups = to_groups(features);
            if (groups.empty()) {
                groups = {FeatureGroup::PriceTime, FeatureGroup::Errors, FeatureGroup::Ramps};
                if (ds.has_fuel) groups.push_back(FeatureGroup::Fuel);
            }
            ShapReportOptions opt;
            opt.gbt.trees = trees;
            opt.gbt.depth = depth;
            opt.gbt.lr = lr;
            opt.train_fraction = train_fraction;
            opt.seed = seed;
            const ShapReport r = shap_report(ds, groups, opt);
            py::dict out;
            out["feature_names"] = r.feature_names;
            out["feature_groups"] = r.feature_groups;
            out["importance"] = r.fi;
            out["r2"] = r.r2;
            out["train_rows"] = r.train_rows;
            out["test_rows"] = r.test_rows;
            return out;
        },
        "Per-quarter SHAP feature importances from boosted trees.", py::arg("dataset"),
        py::arg("features") = std::vector<std::string>{}, py::arg("trees") = 100,
        py::arg("depth") = 3, py::arg("lr") = 0.1, py::arg("train_fraction") = 0.8,
        py::arg("seed") = 0);

    m.def("energy_score", &energy_score, py::arg("samples"), py::arg("realization"));
    m.def("variogram_score", &variogram_score, py::arg("samples"), py::arg("realization"),
          py::arg("gamma") = 0.5, py::arg("scaled") = true);
    m.def("winkler_score", &winkler_score, py::arg("lower"), py::arg("upper"), py::arg("x"),
          py::arg("level"));

    m.def("model_tags", [] {
        std::vector<std::string> names;
        for (ModelTag tag : all_model_tags()) names.push_back(model_tag_name(tag));
        return names;
    });
    m.def("feature_groups", [] {
        std::vector<std::string> names;
        for (FeatureGroup g : all_feature_groups()) names.push_back(feature_group_name(g));
        return names;
    });
    m.def("format_time", &format_time_utc, py::arg("t"));
    m.def("parse_time", &parse_time_utc, py::arg("text"));
}
