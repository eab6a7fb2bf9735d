#pragma once

// Conditional RealNVP flow over the 4-D difference vector. Four affine
// coupling layers with alternating masks; each layer conditions the scale and
// shift of the unmasked pair on the masked pair concatenated with the
// conditioning features. Densities are exact via the change of variables.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/nn.hpp"

namespace deltaflow {

using Vec4 = std::array<double, 4>;

struct CouplingLayer {
    std::array<int, 4> mask{};  // 1 = pass-through / conditioner input
    MlpParams scale_net;        // outputs raw log-scales, squashed by tanh
    MlpParams shift_net;
    double scale_bound = 1.0;   // learnable bound on |log-scale|
};

struct FlowModel {
    std::vector<CouplingLayer> layers;
    std::size_t cond_dim = 0;

    void check() const;
};

/// Identity-initialized conditional flow: 4 coupling layers, masks
/// (1,0,1,0)/(0,1,0,1) alternating, conditioner nets 2 hidden layers x 4 relu
/// units, output layers zeroed so the initial transform is the identity.
FlowModel make_flow(std::size_t cond_dim, std::uint64_t seed);

/// Generative direction: latent -> data. Optionally accumulates the
/// log|det J| of this forward map.
Vec4 flow_forward(const FlowModel& m, Vec4 z, const std::vector<double>& y,
                  double* logdet = nullptr);

/// Normalizing direction: data -> latent. Optionally accumulates the
/// log|det J| of the inverse map (the change-of-variables correction).
Vec4 flow_inverse(const FlowModel& m, Vec4 x, const std::vector<double>& y,
                  double* logdet = nullptr);

/// Exact conditional log-density. Throws NonFiniteInput.
double flow_log_prob(const FlowModel& m, const Vec4& x, const std::vector<double>& y);

/// n conditional samples; deterministic for a fixed rng state.
std::vector<Vec4> flow_sample(const FlowModel& m, const std::vector<double>& y, std::size_t n,
                              Rng& rng);

/// Reusable buffers for gradient computation and training.
struct FlowWorkspace {
    std::vector<GradientTape> scale_tapes, shift_tapes;
    std::vector<Vec4> chain;                  // per-layer inverse outputs
    std::vector<std::array<double, 2>> s_raw; // pre-tanh log-scales
    std::vector<std::array<double, 2>> s_val; // squashed log-scales
};

struct FlowGrads {
    std::vector<MlpGrads> scale, shift;
    std::vector<double> bound;

    void init_like(const FlowModel& m);
    void zero();
};

/// Negative log-likelihood of one (x, y) pair plus its gradient with respect
/// to all flow parameters (accumulated into grads). Returns the NLL.
double flow_nll_grad(const FlowModel& m, const Vec4& x, const std::vector<double>& y,
                     FlowGrads& grads, FlowWorkspace& ws);

using FlowFitOptions = TrainOptions;

struct FlowFit {
    FlowModel model;
    std::vector<double> loss_trace;  // mean train NLL per epoch
};

/// Likelihood training with Adam over shuffled mini-batches.
/// Throws DegenerateData when an x dimension has zero variance and
/// TooFewSamples when there are fewer pairs than one batch.
FlowFit fit_flow(const std::vector<Vec4>& xs, const std::vector<std::vector<double>>& ys,
                 const FlowFitOptions& opt);

std::string flow_to_json(const FlowModel& m);
FlowModel flow_from_json(const std::string& text);

}  // namespace deltaflow
