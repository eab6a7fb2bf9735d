#include "deltaflow/nn.hpp"

#include <cmath>

#include "json.hpp"

namespace deltaflow {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Softplus: return "softplus";
    }
    fail("DimensionMismatch", "bad activation enum");
}

Activation parse_activation(const std::string& name) {
    for (Activation a : {Activation::Identity, Activation::Relu, Activation::Tanh,
                         Activation::Softplus}) {
        if (activation_name(a) == name) return a;
    }
    fail("DimensionMismatch", "unknown activation '" + name + "'");
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Softplus: return z > 0.0 ? z + std::log1p(std::exp(-z))
                                                  : std::log1p(std::exp(z));
    }
    return z;
}

double activate_grad(Activation a, double z) {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Softplus: return 1.0 / (1.0 + std::exp(-z));
    }
    return 1.0;
}

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

void MlpParams::check() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.w.size() != l.in * l.out || l.b.size() != l.out) {
            fail("DimensionMismatch", "layer " + std::to_string(i) + " shape mismatch");
        }
        if (i > 0 && layers[i - 1].out != l.in) {
            fail("DimensionMismatch", "layer " + std::to_string(i) + " does not chain");
        }
        if (!all_finite(l.w) || !all_finite(l.b)) {
            fail("NonFiniteInput", "layer " + std::to_string(i) + " has non-finite parameters");
        }
    }
}

MlpParams make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   std::uint64_t seed) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
        fail("DimensionMismatch", "make_mlp needs dims {in,...,out} and one activation per layer");
    }
    MlpParams p;
    p.init_seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.act = acts[i];
        const double bound = std::sqrt(6.0 / double(l.in + l.out));
        l.w.resize(l.in * l.out);
        for (auto& w : l.w) w = rng.uniform(-bound, bound);
        l.b.assign(l.out, 0.0);
        p.layers.push_back(std::move(l));
    }
    return p;
}

void zero_last_layer(MlpParams& p) {
    if (p.layers.empty()) return;
    auto& l = p.layers.back();
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
}

namespace {

void forward_into(const MlpParams& p, const std::vector<double>& input, GradientTape& tape) {
    if (input.size() != p.input_dim()) {
        fail("DimensionMismatch", "input has " + std::to_string(input.size()) +
                                      " values, net expects " + std::to_string(p.input_dim()));
    }
    const std::size_t L = p.layers.size();
    tape.x.resize(L + 1);
    tape.z.resize(L);
    tape.shape.resize(L + 1);
    tape.x[0] = input;
    tape.shape[0] = p.input_dim();
    for (std::size_t l = 0; l < L; ++l) {
        const Layer& ly = p.layers[l];
        tape.shape[l + 1] = ly.out;
        auto& z = tape.z[l];
        z.assign(ly.out, 0.0);
        const auto& x = tape.x[l];
        for (std::size_t r = 0; r < ly.out; ++r) {
            double s = ly.b[r];
            const double* wr = ly.w.data() + r * ly.in;
            for (std::size_t c = 0; c < ly.in; ++c) s += wr[c] * x[c];
            z[r] = s;
        }
        auto& y = tape.x[l + 1];
        y.resize(ly.out);
        for (std::size_t r = 0; r < ly.out; ++r) y[r] = activate(ly.act, z[r]);
    }
}

}  // namespace

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& input) {
    GradientTape tape;
    forward_into(p, input, tape);
    return tape.x.back();
}

const std::vector<double>& mlp_forward(const MlpParams& p, const std::vector<double>& input,
                                       GradientTape& tape) {
    forward_into(p, input, tape);
    return tape.x.back();
}

void MlpGrads::init_like(const MlpParams& p) {
    dw.resize(p.layers.size());
    db.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        dw[l].assign(p.layers[l].w.size(), 0.0);
        db[l].assign(p.layers[l].b.size(), 0.0);
    }
}

void MlpGrads::zero() {
    for (auto& v : dw) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void MlpGrads::axpy(double a, const MlpGrads& other) {
    for (std::size_t l = 0; l < dw.size(); ++l) {
        for (std::size_t i = 0; i < dw[l].size(); ++i) dw[l][i] += a * other.dw[l][i];
        for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += a * other.db[l][i];
    }
}

void MlpGrads::scale(double a) {
    for (auto& v : dw)
        for (auto& x : v) x *= a;
    for (auto& v : db)
        for (auto& x : v) x *= a;
}

std::vector<double> backprop(const MlpParams& p, const GradientTape& tape,
                             const std::vector<double>& dout, MlpGrads& grads) {
    const std::size_t L = p.layers.size();
    if (tape.shape.size() != L + 1 || tape.x.size() != L + 1 || tape.z.size() != L) {
        fail("TapeMismatch", "tape does not match the network depth");
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (tape.shape[l] != p.layers[l].in || tape.shape[l + 1] != p.layers[l].out) {
            fail("TapeMismatch", "tape layer " + std::to_string(l) + " shape mismatch");
        }
    }
    if (dout.size() != p.output_dim()) {
        fail("TapeMismatch", "loss gradient has wrong dimension");
    }
    if (grads.dw.size() != L) grads.init_like(p);

    std::vector<double> g = dout;  // dL/d(layer output), walked backwards
    std::vector<double> gz, gx;
    for (std::size_t li = L; li-- > 0;) {
        const Layer& ly = p.layers[li];
        gz.resize(ly.out);
        for (std::size_t r = 0; r < ly.out; ++r) {
            gz[r] = g[r] * activate_grad(ly.act, tape.z[li][r]);
        }
        const auto& x = tape.x[li];
        auto& dw = grads.dw[li];
        auto& db = grads.db[li];
        for (std::size_t r = 0; r < ly.out; ++r) {
            db[r] += gz[r];
            double* dwr = dw.data() + r * ly.in;
            for (std::size_t c = 0; c < ly.in; ++c) dwr[c] += gz[r] * x[c];
        }
        gx.assign(ly.in, 0.0);
        for (std::size_t r = 0; r < ly.out; ++r) {
            const double* wr = ly.w.data() + r * ly.in;
            for (std::size_t c = 0; c < ly.in; ++c) gx[c] += wr[c] * gz[r];
        }
        g = gx;
    }
    return g;
}

void AdamState::init_like(const MlpParams& p) {
    mw.resize(p.layers.size());
    vw.resize(p.layers.size());
    mb.resize(p.layers.size());
    vb.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        mw[l].assign(p.layers[l].w.size(), 0.0);
        vw[l].assign(p.layers[l].w.size(), 0.0);
        mb[l].assign(p.layers[l].b.size(), 0.0);
        vb[l].assign(p.layers[l].b.size(), 0.0);
    }
    step = 0;
}

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (s.mw.size() != p.layers.size()) s.init_like(p);
    s.step += 1;
    const double c1 = 1.0 - std::pow(b1, double(s.step));
    const double c2 = 1.0 - std::pow(b2, double(s.step));
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                param[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        };
        update(p.layers[l].w, g.dw[l], s.mw[l], s.vw[l]);
        update(p.layers[l].b, g.db[l], s.mb[l], s.vb[l]);
    }
}

std::string mlp_to_json(const MlpParams& p) {
    nlohmann::json j;
    j["format"] = "deltaflow-mlp";
    j["version"] = 1;
    j["seed"] = p.init_seed;
    j["meta"] = p.meta;
    auto layers = nlohmann::json::array();
    for (const auto& l : p.layers) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"act", activation_name(l.act)},
                          {"w", l.w},
                          {"b", l.b}});
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

MlpParams mlp_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "deltaflow-mlp" || j.value("version", 0) != 1) {
        fail("DimensionMismatch", "not a recognized network file");
    }
    MlpParams p;
    p.init_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("meta")) p.meta = j.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.in = lj.at("in").get<std::size_t>();
        l.out = lj.at("out").get<std::size_t>();
        l.act = parse_activation(lj.at("act").get<std::string>());
        l.w = lj.at("w").get<std::vector<double>>();
        l.b = lj.at("b").get<std::vector<double>>();
        p.layers.push_back(std::move(l));
    }
    p.check();
    return p;
}

}  // namespace deltaflow
