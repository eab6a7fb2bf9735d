#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"

namespace deltaflow {

/// Per-dimension linear quantile regression over a fixed grid of quantile
/// levels. Coefficient layout: coef[dim][k] = intercept followed by one
/// weight per feature, for quantile level taus[k].
struct QuantileRegressor {
    std::vector<double> taus;
    std::array<std::vector<std::vector<double>>, 4> coef;
    std::size_t n_features = 0;

    void check() const;
};

/// Gaussian copula over the 4 target dimensions: correlation matrix estimated
/// from normal scores of training residual ranks, plus its Cholesky factor.
struct CopulaCore {
    std::array<std::array<double, 4>, 4> r{};
    std::array<std::array<double, 4>, 4> chol{};
};

struct CopulaModel {
    QuantileRegressor qr;
    CopulaCore core;
};

/// The default grid: 19 equally spaced levels 0.05, 0.10, ..., 0.95.
std::vector<double> quantile_grid();

/// Pinball-loss fit (iteratively reweighted least squares, warm-started from
/// ordinary least squares) of every (dimension, level) pair. Each solve adds
/// a trace-scaled ridge term, so exactly collinear feature columns (the ramp
/// aggregates, say) yield well-defined fitted quantiles instead of failing.
QuantileRegressor fit_quantiles(const std::vector<std::array<double, 4>>& xs,
                                const std::vector<std::vector<double>>& ys,
                                const std::vector<double>& taus);

/// Predicted quantile values for one conditioning vector, sorted in
/// nondecreasing order (monotone rearrangement).
std::vector<double> predict_quantiles(const QuantileRegressor& qr, std::size_t dim,
                                      const std::vector<double>& y);

/// Piecewise-linear interpolation of the rearranged quantile curve; u outside
/// the knot range extrapolates linearly from the outermost two knots.
double inverse_cdf(const QuantileRegressor& qr, std::size_t dim, const std::vector<double>& y,
                   double u);

/// Same interpolation applied to an already-rearranged knot vector.
double inverse_cdf_knots(const std::vector<double>& taus, const std::vector<double>& quantiles,
                         double u);

/// Correlation matrix from normal scores of the per-dimension residual ranks,
/// jittered toward the identity until the minimum eigenvalue exceeds 1e-8.
CopulaCore fit_copula(const std::array<std::vector<double>, 4>& residuals);

/// fit_quantiles + median-residual copula estimation in one call.
CopulaModel fit_copula_model(const std::vector<std::array<double, 4>>& xs,
                             const std::vector<std::vector<double>>& ys,
                             const std::vector<double>& taus);

/// Draw n 4-vectors: z ~ N(0, R), u = Phi(z), x_d = inverse_cdf(d, y, u_d).
std::vector<std::array<double, 4>> copula_sample(const CopulaModel& model,
                                                 const std::vector<double>& y, std::size_t n,
                                                 Rng& rng);

std::string copula_to_json(const CopulaModel& model);
CopulaModel copula_from_json(const std::string& text);

}  // namespace deltaflow
