#include <filesystem>
#include <fstream>

#include "deltaflow/dataset.hpp"
#include "deltaflow/synthetic.hpp"
#include "doctest.h"

using namespace deltaflow;

namespace {

PriceSeries hourly_series(const std::string& first, int n, double base) {
    PriceSeries s;
    s.resolution = Resolution::Hourly;
    const auto t0 = parse_time_utc(first);
    for (int i = 0; i < n; ++i) {
        s.timestamps.push_back(t0 + i * kHour);
        s.values.push_back(base + i);
    }
    return s;
}

PriceSeries quarter_series(const std::string& first, int n_hours, double base) {
    PriceSeries s;
    s.resolution = Resolution::QuarterHourly;
    const auto t0 = parse_time_utc(first);
    for (int i = 0; i < n_hours * 4; ++i) {
        s.timestamps.push_back(t0 + i * kQuarter);
        s.values.push_back(base + 0.25 * i);
    }
    return s;
}

std::vector<PriceSeries> exo_set(const std::string& first, int n_hours) {
    std::vector<PriceSeries> exo;
    for (int k = 0; k < 6; ++k) exo.push_back(quarter_series(first, n_hours, 100.0 * k));
    return exo;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("align intersects the covered ranges") {
    // da covers a long span, id3 only an inner window: the result covers the window.
    auto da = hourly_series("2021-01-01 00:00", 24 * 10, 40.0);
    auto id3 = quarter_series("2021-01-04 00:00", 24 * 3, 42.0);
    auto exo = exo_set("2021-01-01 00:00", 24 * 10);
    const auto ds = align(da, id3, exo, std::nullopt);
    CHECK(ds.size() == 24 * 3);
    CHECK(ds.hours.front().hour == parse_time_utc("2021-01-04 00:00"));
    CHECK(ds.hours.back().hour == parse_time_utc("2021-01-06 23:00"));
    CHECK(!ds.has_fuel);
}

TEST_CASE("align keeps identical ranges whole") {
    auto da = hourly_series("2021-02-01 00:00", 48, 40.0);
    auto id3 = quarter_series("2021-02-01 00:00", 48, 42.0);
    auto exo = exo_set("2021-02-01 00:00", 48);
    const auto ds = align(da, id3, exo, std::nullopt);
    CHECK(ds.size() == 48);
}

TEST_CASE("align rejects disjoint ranges") {
    auto da = hourly_series("2021-01-01 00:00", 24, 40.0);
    auto id3 = quarter_series("2021-06-01 00:00", 24, 42.0);
    auto exo = exo_set("2021-01-01 00:00", 24);
    CHECK_THROWS_WITH_AS(align(da, id3, exo, std::nullopt), doctest::Contains("EmptyOverlap"),
                         Error);
}

TEST_CASE("align is idempotent") {
    const auto r = generate_synthetic({.days = 3}, 7);
    const auto& ds = r.dataset;
    // Decompose the aligned dataset back into raw series and align again.
    PriceSeries da;
    da.resolution = Resolution::Hourly;
    PriceSeries id3;
    id3.resolution = Resolution::QuarterHourly;
    std::vector<PriceSeries> exo(6);
    for (auto& s : exo) s.resolution = Resolution::QuarterHourly;
    FuelSeries fuel;
    for (const auto& h : ds.hours) {
        da.timestamps.push_back(h.hour);
        da.values.push_back(h.da);
        for (int q = 0; q < 4; ++q) {
            const auto t = h.hour + q * kQuarter;
            id3.timestamps.push_back(t);
            id3.values.push_back(h.id3[q]);
            const std::array<const std::array<double, 4>*, 6> blocks{
                &h.solar_actual, &h.solar_forecast, &h.wind_actual,
                &h.wind_forecast, &h.load_actual,   &h.load_forecast};
            for (int k = 0; k < 6; ++k) {
                exo[k].timestamps.push_back(t);
                exo[k].values.push_back((*blocks[k])[q]);
            }
        }
        if (hour_of_day(h.hour) == 0) {
            fuel.days.push_back(day_start(h.hour));
            fuel.oil.push_back(h.oil);
            fuel.gas.push_back(h.gas);
        }
    }
    const auto ds2 = align(da, id3, exo, fuel);
    REQUIRE(ds2.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds2.hours[i].hour == ds.hours[i].hour);
        CHECK(ds2.hours[i].da == ds.hours[i].da);
        CHECK(ds2.hours[i].id3 == ds.hours[i].id3);
        CHECK(ds2.hours[i].oil == ds.hours[i].oil);
    }
}

TEST_CASE("delta vectors are plain differences") {
    MarketDataset ds;
    HourRecord h{};
    h.hour = 0;
    h.da = 50.0;
    h.id3 = {52.0, 51.0, 49.0, 48.0};
    ds.hours.push_back(h);
    h.hour = kHour;
    h.da = 0.0;
    h.id3 = {0.0, 0.0, 0.0, 0.0};
    ds.hours.push_back(h);
    h.hour = 2 * kHour;
    h.da = -5.0;
    h.id3 = {-5.0, -4.0, -6.0, -5.0};
    ds.hours.push_back(h);

    const auto dv = build_delta_series(ds);
    REQUIRE(dv.size() == 3);
    CHECK(dv[0].d == std::array<double, 4>{2.0, 1.0, -1.0, -2.0});
    CHECK(dv[1].d == std::array<double, 4>{0.0, 0.0, 0.0, 0.0});
    CHECK(dv[2].d == std::array<double, 4>{0.0, 1.0, -1.0, 0.0});
}

TEST_CASE("delta plus day-ahead reproduces the quarter prices exactly") {
    const auto r = generate_synthetic({.days = 5, .ramp_coupling = 0.4, .noise_scale = 2.0}, 3);
    const auto dv = build_delta_series(r.dataset);
    for (std::size_t i = 0; i < dv.size(); ++i) {
        for (int q = 0; q < 4; ++q) {
            CHECK(dv[i].d[q] + r.dataset.hours[i].da == r.dataset.hours[i].id3[q]);
        }
    }
}

TEST_CASE("dataset csv round-trip is bit-stable") {
    const auto r = generate_synthetic({.days = 2, .ramp_coupling = 0.3}, 11);
    const auto dir = std::filesystem::temp_directory_path();
    const auto p1 = (dir / "df_ds1.csv").string();
    const auto p2 = (dir / "df_ds2.csv").string();
    r.dataset.save_csv(p1);
    const auto loaded = MarketDataset::load_dataset_csv(p1);
    REQUIRE(loaded.size() == r.dataset.size());
    CHECK(loaded.has_fuel);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded.hours[i].hour == r.dataset.hours[i].hour);
        CHECK(loaded.hours[i].da == r.dataset.hours[i].da);
        CHECK(loaded.hours[i].id3 == r.dataset.hours[i].id3);
        CHECK(loaded.hours[i].load_forecast == r.dataset.hours[i].load_forecast);
        CHECK(loaded.hours[i].gas == r.dataset.hours[i].gas);
    }
    loaded.save_csv(p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), {});
    const std::string c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
}

TEST_CASE("market directory loading with forward-filled fuel") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "df_market";
    fs::create_directories(dir);
    {
        std::ofstream da(dir / "da.csv");
        da << "timestamp,price\n";
        for (int i = 0; i < 48; ++i)
            da << format_time_utc(parse_time_utc("2021-01-01 00:00") + i * kHour) << ","
               << 40 + i % 24 << "\n";
        std::ofstream id3(dir / "id3.csv");
        id3 << "timestamp,price\n";
        for (int i = 0; i < 48 * 4; ++i)
            id3 << format_time_utc(parse_time_utc("2021-01-01 00:00") + i * kQuarter) << ","
                << 41.5 << "\n";
        std::ofstream ren(dir / "renewables.csv");
        ren << "timestamp,solar_actual,solar_forecast,wind_actual,wind_forecast,"
               "load_actual,load_forecast\n";
        for (int i = 0; i < 48 * 4; ++i)
            ren << format_time_utc(parse_time_utc("2021-01-01 00:00") + i * kQuarter)
                << ",10,12,300,280,9000,9100\n";
        std::ofstream fuel(dir / "fuel.csv");
        fuel << "date,oil,gas\n2021-01-01,80.5,30.25\n";
    }
    const auto ds = load_market_directory(dir.string());
    CHECK(ds.size() == 48);
    CHECK(ds.has_fuel);
    // Day 2 has no fuel row: forward-filled from day 1.
    CHECK(ds.hours[30].oil == 80.5);
    CHECK(ds.hours[30].gas == 30.25);
    CHECK(ds.hours[0].solar_forecast[0] == 12.0);
    CHECK(ds.hours[0].load_actual[3] == 9000.0);
}

TEST_SUITE_END();
