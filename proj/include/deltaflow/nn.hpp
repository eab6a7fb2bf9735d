#pragma once

// Minimal dense-network substrate: forward evaluation, exact reverse-mode
// gradients, and Adam. Sized for few-thousand-parameter nets trained by
// mini-batch maximum likelihood; deterministic for a fixed seed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"

namespace deltaflow {

enum class Activation { Identity, Relu, Tanh, Softplus };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

double activate(Activation a, double z);
double activate_grad(Activation a, double z);  // derivative at pre-activation z

struct Layer {
    std::size_t in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
    Activation act = Activation::Identity;
};

struct MlpParams {
    std::vector<Layer> layers;
    std::uint64_t init_seed = 0;
    std::map<std::string, std::string> meta;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t param_count() const;
    void check() const;  // DimensionMismatch on bad chaining, NonFinite on bad values
};

/// Glorot-uniform weights, zero biases. dims = {in, hidden..., out};
/// acts.size() == dims.size()-1.
MlpParams make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   std::uint64_t seed);

/// Zero-initializes the final layer (weights and bias), leaving earlier
/// layers untouched; used for identity-initialized flows.
void zero_last_layer(MlpParams& p);

/// Primal values recorded during a taped forward pass. Buffers are reused
/// across calls to avoid reallocation in training loops.
struct GradientTape {
    std::vector<std::vector<double>> x;  // x[l] = input of layer l; x[L] = final output
    std::vector<std::vector<double>> z;  // z[l] = pre-activation of layer l
    std::vector<std::size_t> shape;      // layer dims for mismatch detection

    const std::vector<double>& output() const { return x.back(); }
};

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& input);
const std::vector<double>& mlp_forward(const MlpParams& p, const std::vector<double>& input,
                                       GradientTape& tape);

struct MlpGrads {
    std::vector<std::vector<double>> dw, db;

    void init_like(const MlpParams& p);
    void zero();
    void axpy(double a, const MlpGrads& other);  // this += a * other
    void scale(double a);
};

/// Reverse pass: dout is dL/d(output). Accumulates parameter gradients into
/// grads (callers zero it per batch) and returns dL/d(input).
/// Throws TapeMismatch when the tape does not belong to this net shape.
std::vector<double> backprop(const MlpParams& p, const GradientTape& tape,
                             const std::vector<double>& dout, MlpGrads& grads);

struct AdamState {
    std::vector<std::vector<double>> mw, vw, mb, vb;
    std::int64_t step = 0;

    void init_like(const MlpParams& p);
};

/// Standard Adam update (beta1=0.9, beta2=0.999, eps=1e-8).
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, double lr);

/// Shared mini-batch training configuration.
struct TrainOptions {
    int epochs = 500;
    std::size_t batch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

/// Versioned JSON serialization; doubles round-trip bit-exactly.
std::string mlp_to_json(const MlpParams& p);
MlpParams mlp_from_json(const std::string& text);

}  // namespace deltaflow
