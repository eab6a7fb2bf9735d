#include <cmath>
#include <filesystem>

#include "deltaflow/features.hpp"
#include "deltaflow/synthetic.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace deltaflow;

namespace {

MarketDataset small_dataset() {
    SynthConfig cfg;
    cfg.days = 3;
    cfg.ramp_coupling = 0.4;
    cfg.noise_scale = 1.5;
    return generate_synthetic(cfg, 77).dataset;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("canonical names and group ordering") {
    const auto all = feature_names(all_feature_groups());
    CHECK(all.size() == 13 + 12 + 5 + 2);
    CHECK(all[0] == "da");
    CHECK(all[1] == "dda_back");
    CHECK(all[2] == "dda_fwd");
    CHECK(all[5] == "delta_lag1_00");
    CHECK(all[12] == "delta_lag2_45");
    CHECK(all[13] == "solar_error_00");
    CHECK(all[24] == "load_error_45");
    CHECK(all[25] == "solar_ramp");
    CHECK(all[29] == "import_export_ramp");
    CHECK(all[30] == "oil");
    CHECK(all[31] == "gas");

    // Selection order does not matter; output order is canonical.
    const auto a = feature_names({FeatureGroup::Ramps, FeatureGroup::PriceTime});
    const auto b = feature_names({FeatureGroup::PriceTime, FeatureGroup::Ramps});
    CHECK(a == b);
    CHECK(a.front() == "da");
    CHECK(a.back() == "import_export_ramp");

    CHECK(parse_feature_group("errors") == FeatureGroup::Errors);
    CHECK_THROWS_WITH_AS(parse_feature_group("nope"), doctest::Contains("UnknownGroup"), Error);
}

TEST_CASE("day-ahead increments and trig encoding") {
    auto ds = small_dataset();
    // Plant known DA values around an interior index.
    const std::size_t i = 12;
    ds.hours[i - 1].da = 40.0;
    ds.hours[i].da = 50.0;
    ds.hours[i + 1].da = 45.0;
    const auto fv = build_features(ds, i, {FeatureGroup::PriceTime});
    CHECK(fv.values[0] == 50.0);
    CHECK(fv.values[1] == 10.0);   // backward increment
    CHECK(fv.values[2] == -5.0);   // forward increment
    // Index 12 of a midnight-started dataset is hour 12.
    CHECK(fv.values[3] == doctest::Approx(std::cos(std::numbers::pi)).epsilon(1e-15));
    CHECK(fv.values[4] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // Hour 0 and hour 6 conventions.
    const auto f0 = build_features(ds, 24, {FeatureGroup::PriceTime});
    CHECK(f0.values[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f0.values[4] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    const auto f6 = build_features(ds, 30, {FeatureGroup::PriceTime});
    CHECK(f6.values[3] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(f6.values[4] == doctest::Approx(1.0).epsilon(1e-15));

    // Unit circle for every valid hour.
    for (std::size_t k = 2; k + 1 < ds.size(); ++k) {
        const auto f = build_features(ds, k, {FeatureGroup::PriceTime});
        CHECK(f.values[3] * f.values[3] + f.values[4] * f.values[4] ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("forward increment of one hour equals backward increment of the next") {
    const auto ds = small_dataset();
    for (std::size_t i = 2; i + 2 < ds.size(); ++i) {
        const auto a = build_features(ds, i, {FeatureGroup::PriceTime});
        const auto b = build_features(ds, i + 1, {FeatureGroup::PriceTime});
        CHECK(a.values[2] == b.values[1]);
    }
}

TEST_CASE("lagged delta features match the delta series") {
    const auto ds = small_dataset();
    const auto dv = build_delta_series(ds);
    const std::size_t i = 20;
    const auto fv = build_features(ds, i, {FeatureGroup::PriceTime});
    for (int q = 0; q < 4; ++q) {
        CHECK(fv.values[5 + q] == dv[i - 1].d[q]);
        CHECK(fv.values[9 + q] == dv[i - 2].d[q]);
    }
}

TEST_CASE("forecast errors are actual minus forecast") {
    auto ds = small_dataset();
    const std::size_t i = 10;
    ds.hours[i].solar_actual[0] = 1000.0;
    ds.hours[i].solar_forecast[0] = 900.0;
    const auto fv = build_features(ds, i, {FeatureGroup::Errors});
    CHECK(fv.values[0] == 100.0);
    for (int q = 0; q < 4; ++q) {
        CHECK(fv.values[4 + q] == ds.hours[i].wind_actual[q] - ds.hours[i].wind_forecast[q]);
        CHECK(fv.values[8 + q] == ds.hours[i].load_actual[q] - ds.hours[i].load_forecast[q]);
    }
}

TEST_CASE("ramps difference consecutive hourly forecast means") {
    const auto ds = small_dataset();
    const std::size_t i = 14;
    const auto fv = build_features(ds, i, {FeatureGroup::Ramps});
    auto qmean = [](const std::array<double, 4>& a) {
        return 0.25 * (a[0] + a[1] + a[2] + a[3]);
    };
    const double solar = qmean(ds.hours[i].solar_forecast) - qmean(ds.hours[i - 1].solar_forecast);
    const double wind = qmean(ds.hours[i].wind_forecast) - qmean(ds.hours[i - 1].wind_forecast);
    const double load = qmean(ds.hours[i].load_forecast) - qmean(ds.hours[i - 1].load_forecast);
    CHECK(fv.values[0] == doctest::Approx(solar).epsilon(1e-12));
    CHECK(fv.values[1] == doctest::Approx(wind).epsilon(1e-12));
    CHECK(fv.values[2] == doctest::Approx(load).epsilon(1e-12));
    CHECK(fv.values[3] == doctest::Approx(solar + wind).epsilon(1e-9));
    CHECK(fv.values[4] == doctest::Approx(solar + wind - load).epsilon(1e-9));
}

TEST_CASE("boundary and lag errors") {
    const auto ds = small_dataset();
    CHECK_THROWS_WITH_AS(build_features(ds, 0, {FeatureGroup::PriceTime}),
                         doctest::Contains("BoundaryHour"), Error);
    CHECK_THROWS_WITH_AS(build_features(ds, ds.size() - 1, {FeatureGroup::PriceTime}),
                         doctest::Contains("BoundaryHour"), Error);
    CHECK_THROWS_WITH_AS(build_features(ds, 1, {FeatureGroup::PriceTime}),
                         doctest::Contains("LagUnavailable"), Error);
    CHECK(!feature_row_valid(ds, 0));
    CHECK(!feature_row_valid(ds, 1));
    CHECK(!feature_row_valid(ds, ds.size() - 1));
    CHECK(feature_row_valid(ds, 2));

    auto nofuel = ds;
    nofuel.has_fuel = false;
    CHECK_THROWS_WITH_AS(build_features(nofuel, 5, {FeatureGroup::Fuel}),
                         doctest::Contains("MissingColumn"), Error);
}

TEST_CASE("feature matrix csv round-trip preserves order and values") {
    const auto ds = small_dataset();
    const auto m = build_feature_matrix(ds, all_feature_groups());
    CHECK(m.rows.size() == ds.size() - 3);
    const auto path = (std::filesystem::temp_directory_path() / "df_features.csv").string();
    write_feature_matrix_csv(m, path);
    const auto back = read_feature_matrix_csv(path);
    CHECK(back.names == m.names);
    REQUIRE(back.rows.size() == m.rows.size());
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        CHECK(back.hours[r] == m.hours[r]);
        CHECK(back.rows[r] == m.rows[r]);
    }
}

TEST_CASE("pit forward standardizes continuous training data") {
    Rng rng(4);
    std::vector<double> train(10000);
    for (auto& v : train) v = 3.0 + 2.5 * rng.normal();  // any continuous marginal
    const auto t = PitTransform::fit({train});
    std::vector<double> z(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) z[i] = t.forward(0, train[i]);
    CHECK(std::abs(mean(z)) < 0.05);
    CHECK(std::abs(variance(z) - 1.0) < 0.1);
    // KS against N(0,1) at significance 0.01.
    std::vector<double> u(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) u[i] = norm_cdf(z[i]);
    const double stat = oracle::ks_uniform_stat(u);
    CHECK(oracle::ks_pvalue(stat, u.size()) > 0.01);
}

TEST_CASE("pit handles skewed input") {
    Rng rng(8);
    std::vector<double> train(5001);
    for (auto& v : train) {
        const double n = rng.normal();
        v = std::exp(n);  // lognormal
    }
    const auto t = PitTransform::fit({train});
    std::vector<double> z(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) z[i] = t.forward(0, train[i]);
    CHECK(std::abs(mean(z)) < 0.05);
    CHECK(std::abs(variance(z) - 1.0) < 0.1);
}

TEST_CASE("pit median maps to zero for odd n") {
    std::vector<double> train;
    for (int i = 0; i < 101; ++i) train.push_back(double(i));
    const auto t = PitTransform::fit({train});
    CHECK(std::abs(t.forward(0, 50.0)) < 1e-6);
}

TEST_CASE("pit round trips") {
    Rng rng(15);
    std::vector<double> train(500);
    for (auto& v : train) v = rng.normal(10.0, 4.0);
    const auto t = PitTransform::fit({train});
    // inverse(forward(x)) = x for training values.
    for (double x : train) {
        CHECK(t.inverse(0, t.forward(0, x)) == doctest::Approx(x).epsilon(1e-9));
    }
    // forward(inverse(u)) = u in the interior of the trained range.
    for (double u = -2.0; u <= 2.0; u += 0.05) {
        CHECK(t.forward(0, t.inverse(0, u)) == doctest::Approx(u).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("pit clamps out-of-range values") {
    std::vector<double> train;
    for (int i = 0; i < 100; ++i) train.push_back(double(i));
    const auto t = PitTransform::fit({train});
    CHECK(t.inverse(0, 10.0) == 99.0);
    CHECK(t.inverse(0, -10.0) == 0.0);
    // Monotone on a grid.
    double prev = -1e300;
    for (double z = -4.0; z <= 4.0; z += 0.01) {
        const double x = t.inverse(0, z);
        CHECK(x >= prev);
        prev = x;
    }
}

TEST_CASE("pit rejects degenerate input") {
    std::vector<double> tiny(10, 1.0);
    CHECK_THROWS_WITH_AS(PitTransform::fit({tiny}), doctest::Contains("TooFewSamples"), Error);
    std::vector<double> flat(100, 1.0);
    CHECK_THROWS_WITH_AS(PitTransform::fit({flat}), doctest::Contains("DegenerateDimension"),
                         Error);
}

TEST_CASE("pit json round-trip") {
    Rng rng(2);
    std::vector<std::vector<double>> cols(4);
    for (auto& c : cols) {
        c.resize(200);
        for (auto& v : c) v = rng.normal();
    }
    const auto t = PitTransform::fit(cols);
    const auto t2 = PitTransform::from_json(t.to_json());
    CHECK(t2.dims() == 4);
    for (std::size_t d = 0; d < 4; ++d) {
        for (double z : {-1.5, 0.0, 0.7}) {
            CHECK(t2.inverse(d, z) == t.inverse(d, z));
        }
    }
}

TEST_CASE("acf diagnostics behave per contract") {
    Rng rng(33);
    std::vector<double> noise(10000);
    for (auto& v : noise) v = rng.normal();
    const auto a = acf(noise, 5);
    CHECK(a[0] == 1.0);
    for (std::size_t k = 1; k < a.size(); ++k) CHECK(std::abs(a[k]) < 0.05);

    std::vector<double> periodic;
    for (int i = 0; i < 240; ++i) periodic.push_back(std::sin(2.0 * std::numbers::pi * i / 24.0));
    const auto ap = acf(periodic, 24);
    CHECK(ap[24] == doctest::Approx(1.0).epsilon(1e-9));

    std::vector<double> shorty{1.0, 2.0};
    CHECK_THROWS_WITH_AS(acf(shorty, 5), doctest::Contains("SeriesTooShort"), Error);
}

TEST_SUITE_END();
