#include "deltaflow/gaussian.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace deltaflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kDiagFloor = 1e-6;

// Output slot of the lower-triangular entry (i,j), i >= j, after the 4 means.
constexpr std::size_t tri_index(std::size_t i, std::size_t j) {
    return 4 + i * (i + 1) / 2 + j;
}

struct Unpacked {
    GaussianMoments mom;
    std::array<double, 4> diag_raw{};  // pre-softplus diagonal outputs
};

Unpacked unpack(const std::vector<double>& raw) {
    Unpacked u;
    for (std::size_t d = 0; d < 4; ++d) u.mom.mean[d] = raw[d];
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < i; ++j) u.mom.chol[i][j] = raw[tri_index(i, j)];
        u.diag_raw[i] = raw[tri_index(i, i)];
        u.mom.chol[i][i] = activate(Activation::Softplus, u.diag_raw[i]) + kDiagFloor;
    }
    return u;
}

// L z = r by forward substitution.
std::array<double, 4> forward_sub(const std::array<std::array<double, 4>, 4>& l,
                                  const std::array<double, 4>& r) {
    std::array<double, 4> z{};
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = r[i];
        for (std::size_t j = 0; j < i; ++j) acc -= l[i][j] * z[j];
        z[i] = acc / l[i][i];
    }
    return z;
}

// L^T w = z by back substitution.
std::array<double, 4> backward_sub(const std::array<std::array<double, 4>, 4>& l,
                                   const std::array<double, 4>& z) {
    std::array<double, 4> w{};
    for (std::size_t i = 4; i-- > 0;) {
        double acc = z[i];
        for (std::size_t j = i + 1; j < 4; ++j) acc -= l[j][i] * w[j];
        w[i] = acc / l[i][i];
    }
    return w;
}

void check_inputs(const GaussianHead& head, const std::array<double, 4>& x,
                  const std::vector<double>& cond) {
    for (double v : x) {
        if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite data vector");
    }
    if (!all_finite(cond)) fail("NonFiniteInput", "non-finite conditioning vector");
    if (cond.size() != head.cond_dim) fail("DimensionMismatch", "conditioning vector has wrong size");
}

double nll_from_moments(const GaussianMoments& mom, const std::array<double, 4>& x,
                        std::array<double, 4>* z_out, std::array<double, 4>* w_out) {
    std::array<double, 4> r;
    for (std::size_t d = 0; d < 4; ++d) r[d] = x[d] - mom.mean[d];
    const auto z = forward_sub(mom.chol, r);
    double nll = 2.0 * kLog2Pi;
    for (std::size_t d = 0; d < 4; ++d) {
        nll += 0.5 * z[d] * z[d] + std::log(mom.chol[d][d]);
    }
    if (z_out) *z_out = z;
    if (w_out) *w_out = backward_sub(mom.chol, z);
    return nll;
}

}  // namespace

void GaussianHead::check() const {
    net.check();
    if (net.input_dim() != cond_dim || net.output_dim() != 14) {
        fail("DimensionMismatch", "head net shape does not match cond_dim -> 14");
    }
}

std::array<std::array<double, 4>, 4> GaussianMoments::covariance() const {
    std::array<std::array<double, 4>, 4> sigma{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= std::min(i, j); ++k) acc += chol[i][k] * chol[j][k];
            sigma[i][j] = acc;
        }
    }
    return sigma;
}

GaussianHead make_gaussian_head(std::size_t cond_dim, std::uint64_t seed) {
    GaussianHead head;
    head.cond_dim = cond_dim;
    head.net = make_mlp({cond_dim, 32, 14}, {Activation::Tanh, Activation::Identity}, seed);
    zero_last_layer(head.net);
    return head;
}

GaussianMoments predict_moments(const GaussianHead& head, const std::vector<double>& cond) {
    if (!all_finite(cond)) fail("NonFiniteInput", "non-finite conditioning vector");
    if (cond.size() != head.cond_dim) fail("DimensionMismatch", "conditioning vector has wrong size");
    return unpack(mlp_forward(head.net, cond)).mom;
}

double gaussian_nll(const GaussianHead& head, const std::array<double, 4>& x,
                    const std::vector<double>& cond) {
    check_inputs(head, x, cond);
    const auto u = unpack(mlp_forward(head.net, cond));
    return nll_from_moments(u.mom, x, nullptr, nullptr);
}

double gaussian_nll_grad(const GaussianHead& head, const std::array<double, 4>& x,
                         const std::vector<double>& cond, MlpGrads& grads, GradientTape& tape) {
    check_inputs(head, x, cond);
    const auto& raw = mlp_forward(head.net, cond, tape);
    const auto u = unpack(raw);

    std::array<double, 4> z, w;
    const double nll = nll_from_moments(u.mom, x, &z, &w);

    // d nll / d mean_i = -w_i ;  d nll / d L_ij = -w_i z_j + [i==j]/L_ii,
    // with the diagonal chained through softplus.
    std::vector<double> dout(14, 0.0);
    for (std::size_t d = 0; d < 4; ++d) dout[d] = -w[d];
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < i; ++j) dout[tri_index(i, j)] = -w[i] * z[j];
        const double dl = -w[i] * z[i] + 1.0 / u.mom.chol[i][i];
        dout[tri_index(i, i)] = dl * activate_grad(Activation::Softplus, u.diag_raw[i]);
    }
    backprop(head.net, tape, dout, grads);
    return nll;
}

std::vector<std::array<double, 4>> gaussian_sample(const GaussianHead& head,
                                                   const std::vector<double>& cond,
                                                   std::size_t n, Rng& rng) {
    const auto mom = predict_moments(head, cond);
    std::vector<std::array<double, 4>> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, 4> z;
        for (auto& v : z) v = rng.normal();
        std::array<double, 4> x = mom.mean;
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j <= i; ++j) x[i] += mom.chol[i][j] * z[j];
        }
        out.push_back(x);
    }
    return out;
}

GaussianFitResult fit_gaussian(const std::vector<std::array<double, 4>>& xs,
                               const std::vector<std::vector<double>>& ys,
                               const TrainOptions& opt) {
    if (xs.size() != ys.size()) fail("DimensionMismatch", "x/y count mismatch");
    if (xs.size() < opt.batch) {
        fail("TooFewSamples", "need at least " + std::to_string(opt.batch) +
                                  " training pairs, got " + std::to_string(xs.size()));
    }
    const std::size_t cond_dim = ys.front().size();
    for (const auto& y : ys) {
        if (y.size() != cond_dim) fail("DimensionMismatch", "ragged conditioning vectors");
    }
    for (int d = 0; d < 4; ++d) {
        std::vector<double> col(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) col[i] = xs[i][d];
        if (variance(col) <= 0.0) {
            fail("DegenerateData", "dimension " + std::to_string(d) + " has zero variance");
        }
    }

    GaussianFitResult fit;
    fit.head = make_gaussian_head(cond_dim, opt.seed);
    auto& head = fit.head;

    AdamState adam;
    adam.init_like(head.net);
    MlpGrads grads;
    grads.init_like(head.net);
    GradientTape tape;
    Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_nll = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t n = std::min(opt.batch, order.size() - pos);
            grads.zero();
            double batch_nll = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t idx = order[pos + j];
                batch_nll += gaussian_nll_grad(head, xs[idx], ys[idx], grads, tape);
            }
            epoch_nll += batch_nll;
            grads.scale(1.0 / double(n));
            adam_step(head.net, grads, adam, opt.lr);
            pos += n;
        }
        fit.loss_trace.push_back(epoch_nll / double(order.size()));
    }
    return fit;
}

std::string gaussian_to_json(const GaussianHead& head) {
    nlohmann::json j;
    j["format"] = "deltaflow-gaussian";
    j["version"] = 1;
    j["cond_dim"] = head.cond_dim;
    j["net"] = nlohmann::json::parse(mlp_to_json(head.net));
    return j.dump();
}

GaussianHead gaussian_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "deltaflow-gaussian" || j.value("version", 0) != 1) {
        fail("DimensionMismatch", "not a recognized gaussian head file");
    }
    GaussianHead head;
    head.cond_dim = j.at("cond_dim").get<std::size_t>();
    head.net = mlp_from_json(j.at("net").dump());
    head.check();
    return head;
}

}  // namespace deltaflow
