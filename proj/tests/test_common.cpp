#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "deltaflow/common.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace deltaflow;

TEST_SUITE_BEGIN("common");

TEST_CASE("normal quantile matches reference values") {
    CHECK(norm_quantile(0.5) == 0.0);
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(norm_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(norm_quantile(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm_quantile(1e-9) == doctest::Approx(-5.997807015007684).epsilon(1e-12));
    CHECK(norm_quantile(0.5 + 1e-16) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("normal quantile and cdf are inverse") {
    for (double p : {1e-8, 1e-4, 0.01, 0.2, 0.5, 0.7, 0.99, 1.0 - 1e-6}) {
        CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    for (double x : {-6.0, -2.0, -0.5, 0.0, 0.3, 1.0, 4.0}) {
        CHECK(norm_quantile(norm_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("normal logpdf") {
    CHECK(norm_logpdf(0.0) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
    CHECK(norm_logpdf(2.0) == doctest::Approx(-0.9189385332046727 - 2.0).epsilon(1e-14));
}

TEST_CASE("rng stream is reproducible") {
    // Frozen values: mt19937_64 output is fully specified, and the uniform
    // and normal maps are deterministic arithmetic on it.
    Rng r(42);
    CHECK(r.uniform() == doctest::Approx(0.75515553295453897).epsilon(1e-16));
    CHECK(r.uniform() == doctest::Approx(0.63903139385469743).epsilon(1e-16));
    CHECK(r.uniform() == doctest::Approx(0.75214520074802671).epsilon(1e-16));
    Rng r2(42);
    CHECK(r2.normal() == doctest::Approx(0.69080366178458441).epsilon(1e-16));
    CHECK(r2.normal() == doctest::Approx(0.35587094964398125).epsilon(1e-16));
    Rng r3(7);
    const std::vector<std::uint64_t> want{7, 9, 1, 8, 1};
    for (auto w : want) CHECK(r3.below(10) == w);
}

TEST_CASE("rng uniforms pass a KS test and stay in the open interval") {
    Rng r(123);
    std::vector<double> u(20000);
    for (auto& v : u) {
        v = r.uniform();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    const double stat = oracle::ks_uniform_stat(u);
    CHECK(oracle::ks_pvalue(stat, u.size()) > 0.001);
}

TEST_CASE("rng normals have the right moments") {
    Rng r(99);
    std::vector<double> z(50000);
    for (auto& v : z) v = r.normal();
    CHECK(mean(z) == doctest::Approx(0.0).epsilon(0.02));
    CHECK(variance(z) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng below is unbiased across the range") {
    Rng r(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("shuffle produces a permutation and is seed-stable") {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    Rng r(11);
    r.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
    std::vector<int> w(100);
    std::iota(w.begin(), w.end(), 0);
    Rng r2(11);
    r2.shuffle(w);
    CHECK(v == w);
}

TEST_CASE("quantile type 7") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_type7(x, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(x, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_type7(x, 1.0) == doctest::Approx(4.0));
    CHECK(quantile_type7(x, 0.25) == doctest::Approx(1.75));
    std::vector<double> one{5.0};
    CHECK(quantile_type7(one, 0.3) == doctest::Approx(5.0));
}

TEST_CASE("pearson") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{2, 4, 6, 8, 10};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    std::vector<double> c{10, 8, 6, 4, 2};
    CHECK(pearson(a, c) == doctest::Approx(-1.0));
    std::vector<double> flat{3, 3, 3, 3, 3};
    CHECK_THROWS_WITH_AS(pearson(a, flat), doctest::Contains("ZeroVariance"), Error);
    std::vector<double> tiny{1.0};
    CHECK_THROWS_WITH_AS(pearson(tiny, tiny), doctest::Contains("SeriesTooShort"), Error);

    Rng r(3);
    std::vector<double> x(500), y(500);
    for (int i = 0; i < 500; ++i) {
        x[i] = r.normal();
        y[i] = 0.6 * x[i] + 0.8 * r.normal();
    }
    CHECK(pearson(x, y) == doctest::Approx(oracle::pearson_simple(x, y)).epsilon(1e-12));
}

TEST_CASE("acf of an AR(1) sequence decays like the coefficient") {
    Rng r(21);
    std::vector<double> x(20000);
    x[0] = r.normal();
    for (std::size_t i = 1; i < x.size(); ++i) x[i] = 0.7 * x[i - 1] + r.normal();
    const auto a = acf(x, 3);
    REQUIRE(a.size() == 4);
    CHECK(a[0] == doctest::Approx(1.0));
    CHECK(a[1] == doctest::Approx(0.7).epsilon(0.05));
    CHECK(a[2] == doctest::Approx(0.49).epsilon(0.08));
}

TEST_CASE("cholesky solve recovers a known solution") {
    // A = [[4,2],[2,3]], x = [1,-2] -> b = A x = [0,-4]
    std::vector<double> a{4.0, 2.0, 2.0, 3.0};
    std::vector<double> b{0.0, -4.0};
    const auto x = cholesky_solve(a, b, 2);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-12));

    std::vector<double> sing{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_WITH_AS(cholesky_solve(sing, b, 2), doctest::Contains("SingularDesign"),
                         Error);
}

TEST_CASE("symmetric eigenvalues") {
    auto ev = symmetric_eigenvalues({3.0, 0.0, 0.0, -1.0}, 2);
    std::sort(ev.begin(), ev.end());
    CHECK(ev[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));

    // [[2,1],[1,2]] has eigenvalues 1 and 3.
    ev = symmetric_eigenvalues({2.0, 1.0, 1.0, 2.0}, 2);
    std::sort(ev.begin(), ev.end());
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));

    // AR(1) correlation with rho=0.8: all eigenvalues positive.
    std::vector<double> c(16);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) c[i * 4 + j] = std::pow(0.8, std::abs(i - j));
    ev = symmetric_eigenvalues(c, 4);
    for (double v : ev) CHECK(v > 0.0);
    CHECK(std::accumulate(ev.begin(), ev.end(), 0.0) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("mean and variance") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(mean(x) == doctest::Approx(2.5));
    CHECK(variance(x) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(all_finite(x));
    x.push_back(std::numeric_limits<double>::infinity());
    CHECK(!all_finite(x));
}

TEST_SUITE_END();
