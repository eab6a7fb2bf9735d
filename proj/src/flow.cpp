#include "deltaflow/flow.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"

namespace deltaflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

// Masked (pass-through) and unmasked (transformed) dimension indices.
struct MaskSplit {
    std::array<std::size_t, 2> m, u;
};

MaskSplit split(const std::array<int, 4>& mask) {
    MaskSplit s{};
    std::size_t mi = 0, ui = 0;
    for (std::size_t d = 0; d < 4; ++d) {
        if (mask[d]) s.m[mi++] = d;
        else s.u[ui++] = d;
    }
    if (mi != 2 || ui != 2) fail("DimensionMismatch", "coupling mask must select 2 of 4 dims");
    return s;
}

void conditioner_input(const Vec4& v, const MaskSplit& sp, const std::vector<double>& y,
                       std::vector<double>& out) {
    out.resize(2 + y.size());
    out[0] = v[sp.m[0]];
    out[1] = v[sp.m[1]];
    std::copy(y.begin(), y.end(), out.begin() + 2);
}

}  // namespace

void FlowModel::check() const {
    for (const auto& l : layers) {
        split(l.mask);
        l.scale_net.check();
        l.shift_net.check();
        if (l.scale_net.input_dim() != 2 + cond_dim || l.shift_net.input_dim() != 2 + cond_dim ||
            l.scale_net.output_dim() != 2 || l.shift_net.output_dim() != 2) {
            fail("DimensionMismatch", "conditioner net shape does not match the flow");
        }
        if (!std::isfinite(l.scale_bound)) fail("NonFiniteInput", "non-finite scale bound");
    }
}

FlowModel make_flow(std::size_t cond_dim, std::uint64_t seed) {
    FlowModel m;
    m.cond_dim = cond_dim;
    Rng rng(seed);
    const std::vector<std::size_t> dims{2 + cond_dim, 4, 4, 2};
    const std::vector<Activation> acts{Activation::Relu, Activation::Relu, Activation::Identity};
    for (int k = 0; k < 4; ++k) {
        CouplingLayer l;
        l.mask = (k % 2 == 0) ? std::array<int, 4>{1, 0, 1, 0} : std::array<int, 4>{0, 1, 0, 1};
        l.scale_net = make_mlp(dims, acts, rng.next_u64());
        l.shift_net = make_mlp(dims, acts, rng.next_u64());
        zero_last_layer(l.scale_net);
        zero_last_layer(l.shift_net);
        l.scale_bound = 1.0;
        m.layers.push_back(std::move(l));
    }
    return m;
}

Vec4 flow_forward(const FlowModel& m, Vec4 z, const std::vector<double>& y, double* logdet) {
    if (y.size() != m.cond_dim) fail("DimensionMismatch", "conditioning vector has wrong size");
    if (logdet) *logdet = 0.0;
    std::vector<double> in;
    for (const auto& l : m.layers) {
        const auto sp = split(l.mask);
        conditioner_input(z, sp, y, in);
        const auto s_raw = mlp_forward(l.scale_net, in);
        const auto t = mlp_forward(l.shift_net, in);
        for (int i = 0; i < 2; ++i) {
            const double s = l.scale_bound * std::tanh(s_raw[i]);
            z[sp.u[i]] = z[sp.u[i]] * std::exp(s) + t[i];
            if (logdet) *logdet += s;
        }
    }
    return z;
}

Vec4 flow_inverse(const FlowModel& m, Vec4 x, const std::vector<double>& y, double* logdet) {
    if (y.size() != m.cond_dim) fail("DimensionMismatch", "conditioning vector has wrong size");
    if (logdet) *logdet = 0.0;
    std::vector<double> in;
    for (std::size_t k = m.layers.size(); k-- > 0;) {
        const auto& l = m.layers[k];
        const auto sp = split(l.mask);
        conditioner_input(x, sp, y, in);
        const auto s_raw = mlp_forward(l.scale_net, in);
        const auto t = mlp_forward(l.shift_net, in);
        for (int i = 0; i < 2; ++i) {
            const double s = l.scale_bound * std::tanh(s_raw[i]);
            x[sp.u[i]] = (x[sp.u[i]] - t[i]) * std::exp(-s);
            if (logdet) *logdet -= s;
        }
    }
    return x;
}

double flow_log_prob(const FlowModel& m, const Vec4& x, const std::vector<double>& y) {
    for (double v : x) {
        if (!std::isfinite(v)) fail("NonFiniteInput", "non-finite data vector");
    }
    if (!all_finite(y)) fail("NonFiniteInput", "non-finite conditioning vector");
    double logdet = 0.0;
    const Vec4 z = flow_inverse(m, x, y, &logdet);
    double lp = -2.0 * kLog2Pi + logdet;
    for (double v : z) lp -= 0.5 * v * v;
    return lp;
}

std::vector<Vec4> flow_sample(const FlowModel& m, const std::vector<double>& y, std::size_t n,
                              Rng& rng) {
    std::vector<Vec4> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec4 z;
        for (auto& v : z) v = rng.normal();
        out.push_back(flow_forward(m, z, y));
    }
    return out;
}

void FlowGrads::init_like(const FlowModel& m) {
    scale.resize(m.layers.size());
    shift.resize(m.layers.size());
    bound.assign(m.layers.size(), 0.0);
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        scale[k].init_like(m.layers[k].scale_net);
        shift[k].init_like(m.layers[k].shift_net);
    }
}

void FlowGrads::zero() {
    for (auto& g : scale) g.zero();
    for (auto& g : shift) g.zero();
    std::fill(bound.begin(), bound.end(), 0.0);
}

double flow_nll_grad(const FlowModel& m, const Vec4& x, const std::vector<double>& y,
                     FlowGrads& grads, FlowWorkspace& ws) {
    const std::size_t L = m.layers.size();
    ws.scale_tapes.resize(L);
    ws.shift_tapes.resize(L);
    ws.chain.resize(L + 1);
    ws.s_raw.resize(L);
    ws.s_val.resize(L);
    if (grads.scale.size() != L) grads.init_like(m);

    // Normalizing pass (data -> latent), layers applied back to front.
    ws.chain[L] = x;
    double nll = 2.0 * kLog2Pi;
    std::vector<double> in;
    for (std::size_t k = L; k-- > 0;) {
        const auto& l = m.layers[k];
        const auto sp = split(l.mask);
        const Vec4& u = ws.chain[k + 1];
        conditioner_input(u, sp, y, in);
        const auto& s_raw = mlp_forward(l.scale_net, in, ws.scale_tapes[k]);
        const auto& t = mlp_forward(l.shift_net, in, ws.shift_tapes[k]);
        Vec4 w = u;
        for (int i = 0; i < 2; ++i) {
            ws.s_raw[k][i] = s_raw[i];
            const double s = l.scale_bound * std::tanh(s_raw[i]);
            ws.s_val[k][i] = s;
            w[sp.u[i]] = (u[sp.u[i]] - t[i]) * std::exp(-s);
            nll += s;  // -log|det J_inverse|
        }
        ws.chain[k] = w;
    }
    for (double v : ws.chain[0]) nll += 0.5 * v * v;

    // Reverse pass, front to back.
    Vec4 g;  // dL/d(chain[k])
    for (int d = 0; d < 4; ++d) g[d] = ws.chain[0][d];
    std::vector<double> ds_raw(2), dt(2);
    for (std::size_t k = 0; k < L; ++k) {
        const auto& l = m.layers[k];
        const auto sp = split(l.mask);
        const Vec4& w = ws.chain[k];
        Vec4 gu{};  // dL/d(chain[k+1])
        double dalpha = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double s = ws.s_val[k][i];
            const double gi = g[sp.u[i]];
            const double ds = -gi * w[sp.u[i]] + 1.0;  // +1 from the logdet term
            const double th = std::tanh(ws.s_raw[k][i]);
            ds_raw[i] = ds * l.scale_bound * (1.0 - th * th);
            dalpha += ds * th;
            dt[i] = -gi * std::exp(-s);
            gu[sp.u[i]] = gi * std::exp(-s);
        }
        grads.bound[k] += dalpha;
        const auto gin_s = backprop(l.scale_net, ws.scale_tapes[k], ds_raw, grads.scale[k]);
        const auto gin_t = backprop(l.shift_net, ws.shift_tapes[k], dt, grads.shift[k]);
        for (int i = 0; i < 2; ++i) {
            gu[sp.m[i]] = g[sp.m[i]] + gin_s[i] + gin_t[i];
        }
        g = gu;
    }
    return nll;
}

FlowFit fit_flow(const std::vector<Vec4>& xs, const std::vector<std::vector<double>>& ys,
                 const FlowFitOptions& opt) {
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

    FlowFit fit;
    fit.model = make_flow(cond_dim, opt.seed);
    auto& m = fit.model;
    const std::size_t L = m.layers.size();

    std::vector<AdamState> adam_s(L), adam_t(L);
    for (std::size_t k = 0; k < L; ++k) {
        adam_s[k].init_like(m.layers[k].scale_net);
        adam_t[k].init_like(m.layers[k].shift_net);
    }
    std::vector<double> bm(L, 0.0), bv(L, 0.0);  // Adam moments for the scale bounds
    std::int64_t bstep = 0;

    FlowGrads grads;
    grads.init_like(m);
    FlowWorkspace ws;
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
                batch_nll += flow_nll_grad(m, xs[idx], ys[idx], grads, ws);
            }
            epoch_nll += batch_nll;
            const double inv = 1.0 / double(n);
            bstep += 1;
            const double c1 = 1.0 - std::pow(0.9, double(bstep));
            const double c2 = 1.0 - std::pow(0.999, double(bstep));
            for (std::size_t k = 0; k < L; ++k) {
                grads.scale[k].scale(inv);
                grads.shift[k].scale(inv);
                adam_step(m.layers[k].scale_net, grads.scale[k], adam_s[k], opt.lr);
                adam_step(m.layers[k].shift_net, grads.shift[k], adam_t[k], opt.lr);
                const double gb = grads.bound[k] * inv;
                bm[k] = 0.9 * bm[k] + 0.1 * gb;
                bv[k] = 0.999 * bv[k] + 0.001 * gb * gb;
                m.layers[k].scale_bound -= opt.lr * (bm[k] / c1) / (std::sqrt(bv[k] / c2) + 1e-8);
            }
            pos += n;
        }
        fit.loss_trace.push_back(epoch_nll / double(order.size()));
    }
    return fit;
}

std::string flow_to_json(const FlowModel& m) {
    nlohmann::json j;
    j["format"] = "deltaflow-flow";
    j["version"] = 1;
    j["cond_dim"] = m.cond_dim;
    auto layers = nlohmann::json::array();
    for (const auto& l : m.layers) {
        layers.push_back({{"mask", l.mask},
                          {"scale_bound", l.scale_bound},
                          {"scale_net", nlohmann::json::parse(mlp_to_json(l.scale_net))},
                          {"shift_net", nlohmann::json::parse(mlp_to_json(l.shift_net))}});
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

FlowModel flow_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "deltaflow-flow" || j.value("version", 0) != 1) {
        fail("DimensionMismatch", "not a recognized flow file");
    }
    FlowModel m;
    m.cond_dim = j.at("cond_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
        CouplingLayer l;
        l.mask = lj.at("mask").get<std::array<int, 4>>();
        l.scale_bound = lj.at("scale_bound").get<double>();
        l.scale_net = mlp_from_json(lj.at("scale_net").dump());
        l.shift_net = mlp_from_json(lj.at("shift_net").dump());
        m.layers.push_back(std::move(l));
    }
    m.check();
    return m;
}

}  // namespace deltaflow
