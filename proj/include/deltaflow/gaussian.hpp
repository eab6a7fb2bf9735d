#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/nn.hpp"

namespace deltaflow {

/// Conditional Gaussian regression head for 4-dimensional targets.
///
/// A single-hidden-layer network maps the conditioning vector to 14 raw
/// outputs: 4 mean entries followed by the 10 entries of a lower-triangular
/// Cholesky factor in row-major order (0,0),(1,0),(1,1),...,(3,3). Diagonal
/// entries are mapped through softplus(.)+1e-6 so the factor is always
/// strictly positive definite.
struct GaussianHead {
    MlpParams net;
    std::size_t cond_dim = 0;

    void check() const;
};

/// Mean vector and Cholesky factor of the predicted covariance (Sigma = L L^T).
struct GaussianMoments {
    std::array<double, 4> mean{};
    std::array<std::array<double, 4>, 4> chol{};  // lower triangular

    std::array<std::array<double, 4>, 4> covariance() const;
};

/// Fresh head with Glorot-seeded hidden layer and a zeroed output layer, so
/// the initial prediction is mean zero with L = (softplus(0)+1e-6) * I.
GaussianHead make_gaussian_head(std::size_t cond_dim, std::uint64_t seed);

/// Predicted moments for one conditioning vector.
GaussianMoments predict_moments(const GaussianHead& head, const std::vector<double>& cond);

/// Exact negative log density of x under the predicted Gaussian:
///   nll = 0.5*||z||^2 + sum_i log L_ii + 2*log(2*pi),  L z = x - mean.
double gaussian_nll(const GaussianHead& head, const std::array<double, 4>& x,
                    const std::vector<double>& cond);

/// nll plus parameter gradients accumulated into `grads` (closed-form
/// gradient with respect to the 14 network outputs, then backprop).
double gaussian_nll_grad(const GaussianHead& head, const std::array<double, 4>& x,
                         const std::vector<double>& cond, MlpGrads& grads, GradientTape& tape);

/// Draw n samples x = mean + L z with z standard normal.
std::vector<std::array<double, 4>> gaussian_sample(const GaussianHead& head,
                                                   const std::vector<double>& cond,
                                                   std::size_t n, Rng& rng);

struct GaussianFitResult {
    GaussianHead head;
    std::vector<double> loss_trace;  // mean nll per epoch
};

/// Mini-batch Adam fit of the head on (target, conditioning) pairs.
GaussianFitResult fit_gaussian(const std::vector<std::array<double, 4>>& xs,
                               const std::vector<std::vector<double>>& ys,
                               const TrainOptions& opt);

std::string gaussian_to_json(const GaussianHead& head);
GaussianHead gaussian_from_json(const std::string& text);

}  // namespace deltaflow
