#include <cmath>
#include <filesystem>
#include <fstream>

#include "deltaflow/synthetic.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace deltaflow;

TEST_SUITE_BEGIN("synthetic");

TEST_CASE("degenerate config yields all-zero delta vectors") {
    SynthConfig cfg;
    cfg.days = 2;
    cfg.noise_scale = 0.0;
    cfg.da_noise = 0.0;
    cfg.ramp_coupling = 0.0;
    const auto r = generate_synthetic(cfg, 1);
    CHECK(r.dataset.size() == 48);
    for (const auto& dv : build_delta_series(r.dataset)) {
        for (double v : dv.d) CHECK(v == 0.0);
    }
}

TEST_CASE("fixed seed reproduces byte-identical files") {
    SynthConfig cfg;
    cfg.days = 3;
    cfg.ramp_coupling = 0.5;
    cfg.tail_df = 4;
    const auto dir = std::filesystem::temp_directory_path();
    const auto a = generate_synthetic(cfg, 42);
    const auto b = generate_synthetic(cfg, 42);
    a.dataset.save_csv((dir / "df_sa.csv").string());
    b.dataset.save_csv((dir / "df_sb.csv").string());
    a.truth.save_json((dir / "df_ta.json").string());
    b.truth.save_json((dir / "df_tb.json").string());
    for (const char* pair : {"df_sa.csv df_sb.csv", "df_ta.json df_tb.json"}) {
        std::string n1(pair, std::string(pair).find(' '));
        std::string n2(std::string(pair).substr(std::string(pair).find(' ') + 1));
        std::ifstream f1(dir / n1, std::ios::binary), f2(dir / n2, std::ios::binary);
        const std::string c1((std::istreambuf_iterator<char>(f1)), {});
        const std::string c2((std::istreambuf_iterator<char>(f2)), {});
        REQUIRE(!c1.empty());
        CHECK(c1 == c2);
    }
    // Different seed changes the data.
    const auto c = generate_synthetic(cfg, 43);
    CHECK(c.dataset.hours[10].id3 != a.dataset.hours[10].id3);
}

TEST_CASE("positive coupling with rising day-ahead price gives a decreasing pattern") {
    SynthConfig cfg;
    cfg.days = 500;  // 12000 hours
    cfg.ramp_coupling = 0.6;
    cfg.da_noise = 3.0;
    cfg.noise_scale = 1.0;
    const auto r = generate_synthetic(cfg, 9);
    const auto dv = build_delta_series(r.dataset);

    std::array<double, 4> mc{};
    std::array<double, 4> closed{};
    std::size_t n = 0;
    for (std::size_t i = 1; i + 1 < r.dataset.size(); ++i) {
        const double ddm = r.dataset.hours[i].da - r.dataset.hours[i - 1].da;
        const double ddp = r.dataset.hours[i + 1].da - r.dataset.hours[i].da;
        if (ddm > 0.0 && ddp > 0.0) {  // rising segment
            for (int q = 0; q < 4; ++q) {
                mc[q] += dv[i].d[q];
                closed[q] += r.truth.mu[i][q];
            }
            ++n;
        }
    }
    REQUIRE(n > 2000);
    for (int q = 0; q < 4; ++q) {
        mc[q] /= double(n);
        closed[q] /= double(n);
        // Monte-Carlo mean agrees with the generator's recorded conditional mean.
        CHECK(mc[q] == doctest::Approx(closed[q]).epsilon(0.0).scale(1.0).epsilon(0.15));
    }
    // Decreasing across quarters, on both the closed form and the samples.
    for (int q = 0; q < 3; ++q) {
        CHECK(closed[q] > closed[q + 1]);
        CHECK(mc[q] > mc[q + 1]);
    }
}

TEST_CASE("noise covariance matches the configured geometry") {
    SynthConfig cfg;
    cfg.days = 800;
    cfg.noise_scale = 1.5;
    cfg.rho = 0.8;
    const auto r = generate_synthetic(cfg, 13);
    std::vector<std::vector<double>> rows;
    for (const auto& dv : build_delta_series(r.dataset)) {
        rows.push_back({dv.d[0], dv.d[1], dv.d[2], dv.d[3]});
    }
    const auto cov = oracle::sample_cov(rows);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double want = 1.5 * 1.5 * std::pow(0.8, std::abs(i - j));
            CHECK(cov[i][j] == doctest::Approx(want).epsilon(0.08));
        }
    }
}

TEST_CASE("heavy-tail mode produces excess kurtosis") {
    SynthConfig base;
    base.days = 400;
    base.noise_scale = 1.0;
    auto kurt = [](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m += v;
        m /= double(x.size());
        double m2 = 0.0, m4 = 0.0;
        for (double v : x) {
            m2 += (v - m) * (v - m);
            m4 += (v - m) * (v - m) * (v - m) * (v - m);
        }
        m2 /= double(x.size());
        m4 /= double(x.size());
        return m4 / (m2 * m2) - 3.0;
    };
    auto first_dim = [](const SynthResult& r) {
        std::vector<double> x;
        for (const auto& dv : build_delta_series(r.dataset)) x.push_back(dv.d[0]);
        return x;
    };
    SynthConfig heavy = base;
    heavy.tail_df = 3;
    const double k_gauss = kurt(first_dim(generate_synthetic(base, 17)));
    const double k_heavy = kurt(first_dim(generate_synthetic(heavy, 17)));
    CHECK(std::abs(k_gauss) < 0.5);
    CHECK(k_heavy > 1.5);
}

TEST_CASE("ground-truth log density integrates sanity checks") {
    SynthConfig cfg;
    cfg.days = 2;
    cfg.noise_scale = 2.0;
    cfg.rho = 0.8;
    const auto r = generate_synthetic(cfg, 5);
    // At the mean, the Gaussian log density has the closed form
    // -2 ln(2pi) - 0.5 ln det(Sigma); det of the AR(1) correlation in 4-D is
    // (1 - rho^2)^3.
    const double logdet = 8.0 * std::log(2.0) + 3.0 * std::log(1.0 - 0.8 * 0.8);
    const double want = -2.0 * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;
    CHECK(r.truth.log_density(0, r.truth.mu[0]) == doctest::Approx(want).epsilon(1e-12));

    // Monte-Carlo: average log density of true samples is finite and higher
    // than at a far-away point.
    Rng rng(1);
    double avg = 0.0;
    for (int k = 0; k < 200; ++k) avg += r.truth.log_density(3, r.truth.sample(3, rng));
    avg /= 200.0;
    std::array<double, 4> far = r.truth.mu[3];
    for (auto& v : far) v += 50.0;
    CHECK(avg > r.truth.log_density(3, far));
}

TEST_CASE("truth sidecar round-trips through json") {
    SynthConfig cfg;
    cfg.days = 2;
    cfg.ramp_coupling = 0.25;
    cfg.tail_df = 5;
    const auto r = generate_synthetic(cfg, 31);
    const auto path = (std::filesystem::temp_directory_path() / "df_truth.json").string();
    r.truth.save_json(path);
    const auto t = SynthTruth::load_json(path);
    CHECK(t.seed == 31);
    CHECK(t.config.tail_df == 5);
    CHECK(t.config.ramp_coupling == 0.25);
    REQUIRE(t.mu.size() == r.truth.mu.size());
    for (std::size_t i = 0; i < t.mu.size(); ++i) {
        CHECK(t.mu[i] == r.truth.mu[i]);
        CHECK(t.hours[i] == r.truth.hours[i]);
    }
    CHECK(t.correlation == r.truth.correlation);
}

TEST_CASE("invalid configs are rejected") {
    SynthConfig cfg;
    cfg.days = 0;
    CHECK_THROWS_WITH_AS(generate_synthetic(cfg, 1), doctest::Contains("InvalidConfig"), Error);
    cfg = {};
    cfg.rho = 1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = {};
    cfg.tail_df = 2;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = {};
    cfg.noise_scale = -1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = {};
    cfg.start_date = "2021-13-01";
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
    cfg = {};
    cfg.ar_coeff = 1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), Error);
}

TEST_SUITE_END();
