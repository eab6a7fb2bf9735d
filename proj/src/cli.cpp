#include "deltaflow/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "deltaflow/common.hpp"
#include "deltaflow/dataset.hpp"
#include "deltaflow/features.hpp"
#include "deltaflow/pipeline.hpp"
#include "deltaflow/scoring.hpp"
#include "deltaflow/synthetic.hpp"
#include "deltaflow/timeseries.hpp"
#include "deltaflow/treeshap.hpp"

namespace deltaflow {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        parts.push_back(item.substr(b, e - b + 1));
    }
    return parts;
}

std::vector<FeatureGroup> parse_groups_arg(const std::string& text) {
    std::vector<FeatureGroup> groups;
    for (const std::string& name : split_list(text)) groups.push_back(parse_feature_group(name));
    if (!text.empty() && groups.empty()) fail("InvalidConfig", "--features list is empty");
    return groups;  // empty when no --features given; callers pick the default
}

// Accepts either a bare UTC date or a full timestamp.
std::int64_t parse_boundary(const std::string& text, const std::string& flag) {
    if (text.find(':') != std::string::npos) return parse_time_utc(text);
    try {
        return parse_date_utc(text);
    } catch (const Error&) {
        fail("BadTimestamp", flag + " expects YYYY-MM-DD or 'YYYY-MM-DD HH:MM', got '" + text +
                                 "'");
    }
}

std::vector<double> levels_from_alphas(const std::string& text) {
    std::vector<double> levels;
    for (const std::string& part : split_list(text)) {
        const double alpha = parse_double(part, "--alpha");
        if (!(alpha > 0.0 && alpha < 1.0))
            fail("InvalidConfig", "--alpha values must lie in (0,1), got " + part);
        levels.push_back(1.0 - alpha);
    }
    if (levels.empty()) fail("InvalidConfig", "--alpha must name at least one interval");
    return levels;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("IoError", "cannot write " + path.string());
    out << text;
    if (!out) fail("IoError", "short write to " + path.string());
}

struct SynthArgs {
    SynthConfig config;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    const SynthResult result = generate_synthetic(a.config, a.seed);
    std::filesystem::create_directories(a.out);
    const std::filesystem::path dir(a.out);
    result.dataset.save_csv((dir / "dataset.csv").string());
    result.truth.save_json((dir / "truth.json").string());
    std::cerr << "synth: " << result.dataset.hours.size() << " hours -> " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_dir, model, features, train_end, out;
    TrainOptions train;
};

int cmd_train(const TrainArgs& a) {
    const MarketDataset ds = load_data_dir(a.data_dir);
    TrainConfig cfg;
    cfg.tag = parse_model_tag(a.model);
    cfg.groups = parse_groups_arg(a.features);
    if (!a.train_end.empty()) cfg.train_end = parse_boundary(a.train_end, "--train-end");
    cfg.train = a.train;
    const TrainResult result = train_model(ds, cfg);
    save_trained(result.model, a.out);
    if (!result.loss_trace.empty()) {
        std::filesystem::path loss_path(a.out);
        loss_path.replace_extension(".loss.csv");
        std::string csv = "epoch,nll\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
            csv += std::to_string(i + 1) + "," + format_double(result.loss_trace[i]) + "\n";
        write_text(loss_path, csv);
        std::cerr << "train: loss trace -> " << loss_path.string() << "\n";
    }
    std::cerr << "train: " << a.model << " model -> " << a.out << "\n";
    return 0;
}

struct ForecastArgs {
    std::string data_dir, model_path, train_end, test_end, out;
    std::size_t samples = 100;
    std::uint64_t seed = 0;
};

int cmd_forecast(const ForecastArgs& a) {
    const MarketDataset ds = load_data_dir(a.data_dir);
    const TrainedModel model = load_trained(a.model_path);
    ForecastConfig cfg;
    cfg.samples = a.samples;
    cfg.seed = a.seed;
    if (!a.train_end.empty()) cfg.start = parse_boundary(a.train_end, "--train-end");
    if (!a.test_end.empty()) cfg.end = parse_boundary(a.test_end, "--test-end");
    const ForecastResult result = forecast_hours(ds, model, cfg);
    for (const std::string& reason : result.skipped) std::cerr << "skip " << reason << "\n";
    forecast_save_csv(result.forecasts, a.out);
    std::cerr << "forecast: " << result.forecasts.size() << " hours x " << a.samples
              << " samples -> " << a.out << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string data_dir, out;
    std::string alpha = "0.5,0.1";
    std::string vs_variant = "scaled";
    double gamma = 0.5;
    std::vector<std::string> files;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const MarketDataset ds = load_data_dir(a.data_dir);
    EvaluateConfig cfg;
    cfg.gamma = a.gamma;
    cfg.vs_scaled = a.vs_variant == "scaled";
    cfg.levels = levels_from_alphas(a.alpha);

    std::filesystem::create_directories(a.out);
    const std::filesystem::path dir(a.out);
    std::vector<std::string> labels;
    std::vector<ScoreReport> reports;
    nlohmann::json summary{{"reports", nlohmann::json::array()}};
    for (const std::string& file : a.files) {
        const std::string label = std::filesystem::path(file).stem().string();
        if (std::find(labels.begin(), labels.end(), label) != labels.end())
            fail("InvalidConfig", "duplicate forecast label '" + label +
                                      "'; rename the input files to distinguish them");
        const std::vector<DensityForecast> forecasts = forecast_load_csv(file);
        ScoreReport report = evaluate_forecasts(ds, forecasts, cfg);
        report_save_csv(report, (dir / ("scores_" + label + ".csv")).string());
        nlohmann::json entry = nlohmann::json::parse(report_to_json(report));
        entry["label"] = label;
        summary["reports"].push_back(std::move(entry));
        std::cerr << "evaluate: " << label << " median energy score "
                  << format_double(report.energy_summary().median) << "\n";
        labels.push_back(label);
        reports.push_back(std::move(report));
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_text(dir / "boxplot.csv", boxplot_csv(labels, reports));
    std::cerr << "evaluate: " << labels.size() << " report(s) -> " << a.out << "\n";
    return 0;
}

struct ExplainArgs {
    std::string data_dir, features, out;
    ShapReportOptions opt;
};

int cmd_explain(const ExplainArgs& a) {
    const MarketDataset ds = load_data_dir(a.data_dir);
    std::vector<FeatureGroup> groups = parse_groups_arg(a.features);
    if (groups.empty()) {
        groups = {FeatureGroup::PriceTime, FeatureGroup::Errors, FeatureGroup::Ramps};
        if (ds.has_fuel) groups.push_back(FeatureGroup::Fuel);
    }
    const ShapReport report = shap_report(ds, groups, a.opt);
    std::filesystem::create_directories(a.out);
    const std::filesystem::path dir(a.out);
    shap_report_save_csv(report, (dir / "importance.csv").string());
    std::vector<std::string> group_names;
    for (FeatureGroup g : groups) group_names.push_back(feature_group_name(g));
    nlohmann::json meta{{"groups", group_names},
                        {"r2", report.r2},
                        {"train_rows", report.train_rows},
                        {"test_rows", report.test_rows}};
    write_text(dir / "explain.json", meta.dump(2) + "\n");
    std::cerr << "explain: " << report.feature_names.size() << " features, test R2 ["
              << format_double(report.r2[0]) << ", " << format_double(report.r2[1]) << ", "
              << format_double(report.r2[2]) << ", " << format_double(report.r2[3]) << "] -> "
              << a.out << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"forecasting the distribution of intraday-vs-day-ahead electricity price "
                 "differences"};
    app.require_subcommand(1);
    // Flat key=value lines scoped by subcommand, e.g. "synth.days=5"; flags win.
    app.set_config("--config", "", "option file; keys are <subcommand>.<flag>");

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand(
        "synth", "generate a synthetic market dataset with a known ground-truth density");
    synth->fallthrough();
    synth->add_option("--days", sa.config.days, "number of days to generate");
    synth->add_option("--start-date", sa.config.start_date, "first day, YYYY-MM-DD (UTC)");
    synth->add_option("--da-base", sa.config.da_base, "day-ahead price base level, EUR/MWh");
    synth->add_option("--da-amplitude", sa.config.da_amplitude,
                      "amplitude of the daily day-ahead price cycle");
    synth->add_option("--da-noise", sa.config.da_noise, "iid noise on the day-ahead price");
    synth->add_option("--ramp-coupling", sa.config.ramp_coupling,
                      "strength of the day-ahead ramp effect on the deltas");
    synth->add_option("--ar-coeff", sa.config.ar_coeff,
                      "AR(1) coefficient on the previous hour's delta");
    synth->add_option("--error-coupling", sa.config.error_coupling,
                      "effect of renewable/load forecast errors on the deltas");
    synth->add_option("--noise-scale", sa.config.noise_scale, "scale of the delta noise, EUR/MWh");
    synth->add_option("--rho", sa.config.rho, "within-hour quarter correlation");
    synth->add_option("--tail-df", sa.config.tail_df,
                      "0 for Gaussian delta noise, >= 3 for Student-t");
    synth->add_option("--exo-error-scale", sa.config.exo_error_scale,
                      "MW scale of the exogenous forecast errors");
    synth->add_option("--seed", sa.seed, "RNG seed")->envname("DELTAFLOW_SEED");
    synth->add_option("--out", sa.out, "output directory")->required();

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "fit a forecaster on a dataset");
    train->fallthrough();
    train->add_option("--data-dir", ta.data_dir, "directory holding dataset.csv")->required();
    train->add_option("--model", ta.model, "flow, gaussian, copula, hist-multi, or hist-uni")
        ->required();
    train->add_option("--features", ta.features,
                      "comma-separated feature groups (default: every group in the data)");
    train->add_option("--train-end", ta.train_end,
                      "end of the training window, exclusive (default: 80% of the data, "
                      "day-aligned)");
    train->add_option("--epochs", ta.train.epochs, "training epochs for flow/gaussian");
    train->add_option("--batch", ta.train.batch, "minibatch size");
    train->add_option("--lr", ta.train.lr, "Adam learning rate");
    train->add_option("--seed", ta.train.seed, "RNG seed")->envname("DELTAFLOW_SEED");
    train->add_option("--out", ta.out, "model file to write")->required();

    ForecastArgs fa;
    CLI::App* forecast =
        app.add_subcommand("forecast", "draw per-hour price scenarios from a trained model");
    forecast->fallthrough();
    forecast->add_option("--data-dir", fa.data_dir, "directory holding dataset.csv")->required();
    forecast->add_option("--model", fa.model_path, "trained model file")->required();
    forecast->add_option("--train-end", fa.train_end,
                         "start of the forecast window (default: the model's train boundary)");
    forecast->add_option("--test-end", fa.test_end,
                         "end of the forecast window, exclusive (default: end of data)");
    forecast->add_option("--samples", fa.samples, "scenarios per hour");
    forecast->add_option("--seed", fa.seed, "RNG seed")->envname("DELTAFLOW_SEED");
    forecast->add_option("--out", fa.out, "forecast CSV to write")->required();

    EvaluateArgs ea;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "score forecast files against realized prices");
    evaluate->fallthrough();
    evaluate->add_option("--data-dir", ea.data_dir, "directory holding dataset.csv")->required();
    evaluate->add_option("--gamma", ea.gamma, "variogram exponent");
    evaluate->add_option("--alpha", ea.alpha,
                         "comma-separated interval miscoverage levels (0.1 = 90% interval)");
    evaluate->add_option("--vs-variant", ea.vs_variant, "variogram variant")
        ->check(CLI::IsMember({"scaled", "unscaled"}));
    evaluate->add_option("--out", ea.out, "output directory")->required();
    evaluate->add_option("files", ea.files, "forecast CSV files")->required();

    ExplainArgs xa;
    CLI::App* explain = app.add_subcommand(
        "explain", "feature attributions for the deltas via boosted trees and SHAP");
    explain->fallthrough();
    explain->add_option("--data-dir", xa.data_dir, "directory holding dataset.csv")->required();
    explain->add_option("--features", xa.features,
                        "comma-separated feature groups (default: every group in the data)");
    explain->add_option("--trees", xa.opt.gbt.trees, "boosting rounds");
    explain->add_option("--depth", xa.opt.gbt.depth, "tree depth");
    explain->add_option("--lr", xa.opt.gbt.lr, "boosting learning rate");
    explain->add_option("--train-fraction", xa.opt.train_fraction,
                        "fraction of days used for fitting");
    explain->add_option("--seed", xa.opt.seed, "day-split shuffle seed")->envname("DELTAFLOW_SEED");
    explain->add_option("--out", xa.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) return cmd_synth(sa);
        if (train->parsed()) return cmd_train(ta);
        if (forecast->parsed()) return cmd_forecast(fa);
        if (evaluate->parsed()) return cmd_evaluate(ea);
        if (explain->parsed()) return cmd_explain(xa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace deltaflow
