#include "deltaflow/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace deltaflow {

namespace {

constexpr double kIrlsDelta = 1e-6;
constexpr int kIrlsMaxIter = 50;
constexpr double kIrlsTol = 1e-8;
constexpr double kRidge = 1e-8;  // relative to the mean normal-equation diagonal

// Ridge-stabilized weighted least squares for the design (1, y) via normal
// equations. The ridge keeps the solve well-posed when feature columns are
// exactly dependent or the IRLS weights concentrate on a few rows; it picks
// the minimum-norm coefficient split and leaves fitted values unchanged.
std::vector<double> wls(const std::vector<std::vector<double>>& ys,
                        const std::vector<double>& target, const std::vector<double>& w) {
    const std::size_t p = ys.front().size() + 1;
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0), row(p);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        row[0] = 1.0;
        std::copy(ys[i].begin(), ys[i].end(), row.begin() + 1);
        const double wi = w.empty() ? 1.0 : w[i];
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += wi * row[a] * target[i];
            for (std::size_t b = a; b < p; ++b) xtx[a * p + b] += wi * row[a] * row[b];
        }
    }
    double trace = 0.0;
    for (std::size_t a = 0; a < p; ++a) trace += xtx[a * p + a];
    const double bump = kRidge * trace / double(p);
    for (std::size_t a = 0; a < p; ++a) {
        xtx[a * p + a] += bump;
        for (std::size_t b = 0; b < a; ++b) xtx[a * p + b] = xtx[b * p + a];
    }
    return cholesky_solve(xtx, xty, p);
}

double predict_linear(const std::vector<double>& coef, const std::vector<double>& y) {
    double v = coef[0];
    for (std::size_t j = 0; j < y.size(); ++j) v += coef[j + 1] * y[j];
    return v;
}

// Pinball-loss minimization by iteratively reweighted least squares.
std::vector<double> fit_pinball(const std::vector<std::vector<double>>& ys,
                                const std::vector<double>& target, double tau) {
    auto coef = wls(ys, target, {});
    std::vector<double> w(ys.size());
    for (int iter = 0; iter < kIrlsMaxIter; ++iter) {
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double r = target[i] - predict_linear(coef, ys[i]);
            w[i] = (r >= 0.0 ? tau : 1.0 - tau) / std::max(std::abs(r), kIrlsDelta);
        }
        auto next = wls(ys, target, w);
        double delta = 0.0;
        for (std::size_t j = 0; j < next.size(); ++j) delta = std::max(delta, std::abs(next[j] - coef[j]));
        coef.swap(next);
        if (delta < kIrlsTol) break;
    }
    return coef;
}

// Average ranks (0-based, ties averaged), then Hazen normal scores.
std::vector<double> normal_scores(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * double(i + j);
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
        i = j + 1;
    }
    std::vector<double> z(n);
    for (std::size_t k = 0; k < n; ++k) z[k] = norm_quantile((rank[k] + 0.5) / double(n));
    return z;
}

std::array<std::array<double, 4>, 4> chol4(const std::array<std::array<double, 4>, 4>& a) {
    std::array<std::array<double, 4>, 4> l{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0) fail("SingularDesign", "correlation matrix not positive definite");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

double min_eigenvalue(const std::array<std::array<double, 4>, 4>& a) {
    std::vector<double> flat(16);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) flat[4 * i + j] = a[i][j];
    }
    const auto eig = symmetric_eigenvalues(flat, 4);
    return *std::min_element(eig.begin(), eig.end());
}

void validate_pairs(const std::vector<std::array<double, 4>>& xs,
                    const std::vector<std::vector<double>>& ys) {
    if (xs.size() != ys.size()) fail("DimensionMismatch", "x/y count mismatch");
    if (xs.empty()) fail("TooFewSamples", "no training pairs");
    const std::size_t f = ys.front().size();
    for (const auto& y : ys) {
        if (y.size() != f) fail("DimensionMismatch", "ragged conditioning vectors");
        if (!all_finite(y)) fail("NonFiniteInput", "non-finite conditioning vector");
    }
    for (const auto& x : xs) {
        for (double v : x) {
            if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite target vector");
        }
    }
    if (xs.size() < 10 * (f + 1)) {
        fail("TooFewSamples", "quantile regression needs at least 10 rows per coefficient, got " +
                                  std::to_string(xs.size()) + " for " + std::to_string(f + 1));
    }
}

}  // namespace

void QuantileRegressor::check() const {
    if (taus.size() < 2) fail("InvalidConfig", "need at least two quantile levels");
    for (std::size_t k = 0; k < taus.size(); ++k) {
        if (!(taus[k] > 0.0 && taus[k] < 1.0)) fail("InvalidQuantile", "levels must lie in (0,1)");
        if (k > 0 && taus[k] <= taus[k - 1]) fail("InvalidConfig", "levels must be increasing");
    }
    for (const auto& per_dim : coef) {
        if (per_dim.size() != taus.size()) fail("DimensionMismatch", "coefficient grid mismatch");
        for (const auto& c : per_dim) {
            if (c.size() != n_features + 1) fail("DimensionMismatch", "coefficient length mismatch");
            if (!all_finite(c)) fail("NonFiniteInput", "non-finite coefficients");
        }
    }
}

std::vector<double> quantile_grid() {
    std::vector<double> taus;
    for (int k = 1; k <= 19; ++k) taus.push_back(0.05 * k);
    return taus;
}

QuantileRegressor fit_quantiles(const std::vector<std::array<double, 4>>& xs,
                                const std::vector<std::vector<double>>& ys,
                                const std::vector<double>& taus) {
    validate_pairs(xs, ys);
    QuantileRegressor qr;
    qr.taus = taus;
    qr.n_features = ys.front().size();
    std::vector<double> target(xs.size());
    for (std::size_t d = 0; d < 4; ++d) {
        for (std::size_t i = 0; i < xs.size(); ++i) target[i] = xs[i][d];
        qr.coef[d].reserve(taus.size());
        for (double tau : taus) qr.coef[d].push_back(fit_pinball(ys, target, tau));
    }
    qr.check();
    return qr;
}

std::vector<double> predict_quantiles(const QuantileRegressor& qr, std::size_t dim,
                                      const std::vector<double>& y) {
    if (dim >= 4) fail("DimensionMismatch", "dimension index out of range");
    if (y.size() != qr.n_features) fail("DimensionMismatch", "conditioning vector has wrong size");
    if (!all_finite(y)) fail("NonFiniteInput", "non-finite conditioning vector");
    std::vector<double> q(qr.taus.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = predict_linear(qr.coef[dim][k], y);
    std::sort(q.begin(), q.end());
    return q;
}

double inverse_cdf_knots(const std::vector<double>& taus, const std::vector<double>& quantiles,
                         double u) {
    if (!(u > 0.0 && u < 1.0)) fail("InvalidQuantile", "u must lie in (0,1)");
    const std::size_t m = taus.size();
    std::size_t lo;
    if (u <= taus.front()) {
        lo = 0;  // linear extrapolation below the lowest knot
    } else if (u >= taus.back()) {
        lo = m - 2;  // and above the highest
    } else {
        lo = std::size_t(std::upper_bound(taus.begin(), taus.end(), u) - taus.begin()) - 1;
    }
    const double t = (u - taus[lo]) / (taus[lo + 1] - taus[lo]);
    return quantiles[lo] + t * (quantiles[lo + 1] - quantiles[lo]);
}

double inverse_cdf(const QuantileRegressor& qr, std::size_t dim, const std::vector<double>& y,
                   double u) {
    return inverse_cdf_knots(qr.taus, predict_quantiles(qr, dim, y), u);
}

CopulaCore fit_copula(const std::array<std::vector<double>, 4>& residuals) {
    const std::size_t n = residuals[0].size();
    for (const auto& r : residuals) {
        if (r.size() != n) fail("DimensionMismatch", "ragged residual columns");
    }
    if (n < 3) fail("TooFewSamples", "copula estimation needs at least 3 rows");

    std::array<std::vector<double>, 4> scores;
    for (int d = 0; d < 4; ++d) scores[d] = normal_scores(residuals[d]);

    CopulaCore core;
    for (int i = 0; i < 4; ++i) {
        core.r[i][i] = 1.0;
        for (int j = 0; j < i; ++j) {
            const double rho = pearson(scores[i], scores[j]);
            core.r[i][j] = core.r[j][i] = rho;
        }
    }
    // Shrink toward the identity until comfortably positive definite.
    double lambda = 1e-10;
    while (min_eigenvalue(core.r) <= 1e-8) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                core.r[i][j] = (core.r[i][j] + (i == j ? lambda : 0.0)) / (1.0 + lambda);
            }
        }
        lambda *= 10.0;
    }
    core.chol = chol4(core.r);
    return core;
}

CopulaModel fit_copula_model(const std::vector<std::array<double, 4>>& xs,
                             const std::vector<std::vector<double>>& ys,
                             const std::vector<double>& taus) {
    CopulaModel model;
    model.qr = fit_quantiles(xs, ys, taus);

    // Residuals against the median prediction define the dependence structure.
    const auto median_it = std::min_element(
        taus.begin(), taus.end(), [](double a, double b) { return std::abs(a - 0.5) < std::abs(b - 0.5); });
    const std::size_t mk = std::size_t(median_it - taus.begin());
    std::array<std::vector<double>, 4> residuals;
    for (int d = 0; d < 4; ++d) residuals[d].resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (int d = 0; d < 4; ++d) {
            residuals[d][i] = xs[i][d] - predict_linear(model.qr.coef[d][mk], ys[i]);
        }
    }
    model.core = fit_copula(residuals);
    return model;
}

std::vector<std::array<double, 4>> copula_sample(const CopulaModel& model,
                                                 const std::vector<double>& y, std::size_t n,
                                                 Rng& rng) {
    std::array<std::vector<double>, 4> knots;
    for (int d = 0; d < 4; ++d) knots[d] = predict_quantiles(model.qr, d, y);

    std::vector<std::array<double, 4>> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, 4> g;
        for (auto& v : g) v = rng.normal();
        std::array<double, 4> x{};
        for (int d = 0; d < 4; ++d) {
            double z = 0.0;
            for (int k = 0; k <= d; ++k) z += model.core.chol[d][k] * g[k];
            x[d] = inverse_cdf_knots(model.qr.taus, knots[d], norm_cdf(z));
        }
        out.push_back(x);
    }
    return out;
}

std::string copula_to_json(const CopulaModel& model) {
    nlohmann::json j;
    j["format"] = "deltaflow-copula";
    j["version"] = 1;
    j["taus"] = model.qr.taus;
    j["n_features"] = model.qr.n_features;
    auto dims = nlohmann::json::array();
    for (const auto& per_dim : model.qr.coef) dims.push_back(per_dim);
    j["coef"] = std::move(dims);
    j["r"] = model.core.r;
    return j.dump();
}

CopulaModel copula_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "deltaflow-copula" || j.value("version", 0) != 1) {
        fail("DimensionMismatch", "not a recognized copula file");
    }
    CopulaModel model;
    model.qr.taus = j.at("taus").get<std::vector<double>>();
    model.qr.n_features = j.at("n_features").get<std::size_t>();
    const auto& dims = j.at("coef");
    if (dims.size() != 4) fail("DimensionMismatch", "expected 4 coefficient blocks");
    for (int d = 0; d < 4; ++d) {
        model.qr.coef[d] = dims[d].get<std::vector<std::vector<double>>>();
    }
    model.qr.check();
    model.core.r = j.at("r").get<std::array<std::array<double, 4>, 4>>();
    for (int i = 0; i < 4; ++i) {
        if (model.core.r[i][i] != 1.0) fail("SingularDesign", "correlation diagonal must be 1");
        for (int k = 0; k < 4; ++k) {
            if (model.core.r[i][k] != model.core.r[k][i]) {
                fail("SingularDesign", "correlation matrix must be symmetric");
            }
        }
    }
    model.core.chol = chol4(model.core.r);
    return model;
}

}  // namespace deltaflow
