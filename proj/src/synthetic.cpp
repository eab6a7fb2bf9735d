#include "deltaflow/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "deltaflow/timeseries.hpp"
#include "json.hpp"

namespace deltaflow {

namespace {

constexpr std::array<double, 4> kPattern{1.0, 1.0 / 3.0, -1.0 / 3.0, -1.0};
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Lower Cholesky factor of the 4x4 correlation matrix C[i][j] = rho^|i-j|.
std::array<std::array<double, 4>, 4> chol4(const std::array<std::array<double, 4>, 4>& a) {
    std::array<std::array<double, 4>, 4> l{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0) fail("InvalidConfig", "correlation matrix not positive definite");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

double solar_profile(double hf) {
    if (hf < 6.0 || hf > 18.0) return 0.0;
    return 600.0 * std::sin(std::numbers::pi * (hf - 6.0) / 12.0);
}

double wind_profile(double day_frac, double hf) {
    return 300.0 + 200.0 * std::sin(kTwoPi * day_frac / 5.0 + 1.3) +
           50.0 * std::sin(kTwoPi * hf / 24.0 + 0.5);
}

double load_profile(double hf) {
    return 9000.0 + 1500.0 * std::sin(kTwoPi * (hf - 9.0) / 24.0) +
           400.0 * std::sin(2.0 * kTwoPi * hf / 24.0);
}

}  // namespace

void SynthConfig::validate() const {
    if (days < 1) fail("InvalidConfig", "days must be >= 1");
    if (da_amplitude < 0.0) fail("InvalidConfig", "da_amplitude must be >= 0");
    if (da_noise < 0.0) fail("InvalidConfig", "da_noise must be >= 0");
    if (noise_scale < 0.0) fail("InvalidConfig", "noise_scale must be >= 0");
    if (exo_error_scale < 0.0) fail("InvalidConfig", "exo_error_scale must be >= 0");
    if (!(rho > -1.0 && rho < 1.0)) fail("InvalidConfig", "rho must lie in (-1, 1)");
    if (!(std::abs(ar_coeff) < 1.0)) fail("InvalidConfig", "|ar_coeff| must be < 1");
    if (tail_df != 0 && tail_df < 3) fail("InvalidConfig", "tail_df must be 0 or >= 3");
    if (!(spike_prob >= 0.0 && spike_prob < 1.0)) {
        fail("InvalidConfig", "spike_prob must lie in [0, 1)");
    }
    if (!std::isfinite(spike_shift)) fail("InvalidConfig", "spike_shift must be finite");
    if (!(spike_scale >= 1.0)) fail("InvalidConfig", "spike_scale must be >= 1");
    parse_date_utc(start_date);  // throws on malformed date
}

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);

    const std::int64_t t0 = parse_date_utc(config.start_date);
    const int n_hours = config.days * 24;

    // Day-ahead price path: daily sinusoid plus iid noise.
    std::vector<double> da(n_hours);
    for (int i = 0; i < n_hours; ++i) {
        const int h = static_cast<int>(hour_of_day(t0 + i * kHour));
        da[i] = config.da_base + config.da_amplitude * std::sin(kTwoPi * (h - 9) / 24.0) +
                config.da_noise * rng.normal();
    }

    // Exogenous quarter-hourly series: smooth profiles plus forecast errors.
    struct Exo {
        std::array<double, 4> fc, act;
    };
    std::vector<Exo> solar(n_hours), wind(n_hours), load(n_hours);
    for (int i = 0; i < n_hours; ++i) {
        const std::int64_t t = t0 + i * kHour;
        const int h = static_cast<int>(hour_of_day(t));
        const double day_frac = double(t - t0) / double(kDay);
        for (int q = 0; q < 4; ++q) {
            const double hf = h + q * 0.25;
            solar[i].fc[q] = solar_profile(hf);
            wind[i].fc[q] = wind_profile(day_frac, hf);
            load[i].fc[q] = load_profile(hf);
            const double s_err =
                solar[i].fc[q] > 0.0 ? config.exo_error_scale * rng.normal() : 0.0;
            solar[i].act[q] = solar[i].fc[q] + s_err;
            wind[i].act[q] = wind[i].fc[q] + config.exo_error_scale * rng.normal();
            load[i].act[q] = load[i].fc[q] + 2.0 * config.exo_error_scale * rng.normal();
        }
    }

    // Delta noise geometry.
    std::array<std::array<double, 4>, 4> corr{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) corr[i][j] = std::pow(config.rho, std::abs(i - j));
    const auto l = chol4(corr);

    SynthResult out;
    out.truth.config = config;
    out.truth.seed = seed;
    out.truth.pattern = kPattern;
    out.truth.correlation = corr;
    out.dataset.has_fuel = true;

    std::array<double, 4> prev{};  // delta of the previous hour, zero before start
    for (int i = 0; i < n_hours; ++i) {
        const std::int64_t t = t0 + i * kHour;
        const double ddm = i > 0 ? da[i] - da[i - 1] : 0.0;
        const double ddp = i + 1 < n_hours ? da[i + 1] - da[i] : 0.0;
        const double ramp = 0.5 * (ddm + ddp);

        std::array<double, 4> mu;
        for (int q = 0; q < 4; ++q) {
            const double err_mix =
                load[i].act[q] - load[i].fc[q] - (solar[i].act[q] - solar[i].fc[q]) -
                (wind[i].act[q] - wind[i].fc[q]);
            mu[q] = config.ramp_coupling * kPattern[q] * ramp + config.ar_coeff * prev[q] +
                    config.error_coupling * err_mix / 1000.0;
        }

        // Spike regime: on rising-ramp hours the delta occasionally jumps
        // along the pattern with inflated noise. The uniform draw is consumed
        // whenever spikes are enabled so the stream layout stays fixed.
        double spike_w = 0.0;
        bool spike = false;
        if (config.spike_prob > 0.0) {
            spike_w = ramp > 0.0 ? config.spike_prob : 0.0;
            spike = rng.uniform() < spike_w;
        }

        // Correlated noise; optional Student-t scale mixture for heavy tails.
        double mix = 1.0;
        if (config.tail_df > 0) {
            double chi2 = 0.0;
            for (int k = 0; k < config.tail_df; ++k) {
                const double z = rng.normal();
                chi2 += z * z;
            }
            mix = std::sqrt(config.tail_df / chi2);
        }
        std::array<double, 4> z;
        for (int q = 0; q < 4; ++q) z[q] = rng.normal();
        const double reg_scale = spike ? config.spike_scale : 1.0;
        const double reg_shift = spike ? config.spike_shift : 0.0;
        std::array<double, 4> d;
        for (int q = 0; q < 4; ++q) {
            double n = 0.0;
            for (int k = 0; k <= q; ++k) n += l[q][k] * z[k];
            d[q] = mu[q] + reg_shift * kPattern[q] + config.noise_scale * reg_scale * mix * n;
        }
        prev = d;

        HourRecord h;
        h.hour = t;
        h.da = da[i];
        for (int q = 0; q < 4; ++q) h.id3[q] = da[i] + d[q];
        h.solar_actual = solar[i].act;
        h.solar_forecast = solar[i].fc;
        h.wind_actual = wind[i].act;
        h.wind_forecast = wind[i].fc;
        h.load_actual = load[i].act;
        h.load_forecast = load[i].fc;
        out.dataset.hours.push_back(h);
        out.truth.hours.push_back(t);
        out.truth.mu.push_back(mu);
        out.truth.spike_w.push_back(spike_w);
    }

    // Daily fuel prices as slow random walks.
    double oil = 80.0, gas = 30.0;
    for (int d = 0; d < config.days; ++d) {
        oil += 0.5 * rng.normal();
        gas += 0.3 * rng.normal();
        for (int h = 0; h < 24; ++h) {
            out.dataset.hours[static_cast<std::size_t>(d) * 24 + h].oil = oil;
            out.dataset.hours[static_cast<std::size_t>(d) * 24 + h].gas = gas;
        }
    }

    out.dataset.validate();
    return out;
}

namespace {

// Elliptical (Gaussian or Student-t) log density with scale matrix
// scale^2 * C, where l is the Cholesky factor of C.
double elliptical_log_density(const std::array<std::array<double, 4>, 4>& l, int tail_df,
                              const std::array<double, 4>& x, const std::array<double, 4>& mean,
                              double scale) {
    std::array<double, 4> w;  // solve L w = (x - mean) / scale
    for (int r = 0; r < 4; ++r) {
        double s = (x[r] - mean[r]) / scale;
        for (int k = 0; k < r; ++k) s -= l[r][k] * w[k];
        w[r] = s / l[r][r];
    }
    double logdet = 0.0;  // log det of the scale matrix scale^2 * C
    for (int r = 0; r < 4; ++r) logdet += 2.0 * std::log(scale * l[r][r]);
    double q = 0.0;
    for (int r = 0; r < 4; ++r) q += w[r] * w[r];

    if (tail_df == 0) {
        return -2.0 * std::log(kTwoPi) - 0.5 * logdet - 0.5 * q;
    }
    const double nu = tail_df;
    const double p = 4.0;
    return std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) -
           0.5 * p * std::log(nu * std::numbers::pi) - 0.5 * logdet -
           0.5 * (nu + p) * std::log1p(q / nu);
}

}  // namespace

double SynthTruth::log_density(std::size_t i, const std::array<double, 4>& x) const {
    if (i >= mu.size()) fail("InvalidConfig", "hour index out of range");
    if (config.noise_scale <= 0.0) {
        fail("InvalidConfig", "log_density undefined for zero noise_scale");
    }
    const auto l = chol4(correlation);
    const double base = elliptical_log_density(l, config.tail_df, x, mu[i], config.noise_scale);
    const double w = i < spike_w.size() ? spike_w[i] : 0.0;
    if (w <= 0.0) return base;
    std::array<double, 4> shifted;
    for (int q = 0; q < 4; ++q) shifted[q] = mu[i][q] + config.spike_shift * pattern[q];
    const double spike = elliptical_log_density(l, config.tail_df, x, shifted,
                                                config.noise_scale * config.spike_scale);
    // log(w e^spike + (1-w) e^base), stabilized around the larger exponent.
    const double a = std::log(w) + spike, b = std::log1p(-w) + base;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::array<double, 4> SynthTruth::sample(std::size_t i, Rng& rng) const {
    if (i >= mu.size()) fail("InvalidConfig", "hour index out of range");
    const auto l = chol4(correlation);
    double mix = 1.0;
    if (config.tail_df > 0) {
        double chi2 = 0.0;
        for (int k = 0; k < config.tail_df; ++k) {
            const double z = rng.normal();
            chi2 += z * z;
        }
        mix = std::sqrt(config.tail_df / chi2);
    }
    std::array<double, 4> z;
    for (int q = 0; q < 4; ++q) z[q] = rng.normal();
    std::array<double, 4> x;
    for (int q = 0; q < 4; ++q) {
        double n = 0.0;
        for (int k = 0; k <= q; ++k) n += l[q][k] * z[k];
        x[q] = mu[i][q] + config.noise_scale * mix * n;
    }
    return x;
}

void SynthTruth::save_json(const std::string& path) const {
    nlohmann::json j;
    j["config"] = {{"days", config.days},
                   {"start_date", config.start_date},
                   {"da_base", config.da_base},
                   {"da_amplitude", config.da_amplitude},
                   {"da_noise", config.da_noise},
                   {"ramp_coupling", config.ramp_coupling},
                   {"ar_coeff", config.ar_coeff},
                   {"error_coupling", config.error_coupling},
                   {"noise_scale", config.noise_scale},
                   {"rho", config.rho},
                   {"tail_df", config.tail_df},
                   {"exo_error_scale", config.exo_error_scale}};
    j["seed"] = seed;
    j["pattern"] = pattern;
    j["correlation"] = correlation;
    nlohmann::json hrs = nlohmann::json::array();
    for (std::size_t i = 0; i < hours.size(); ++i) {
        hrs.push_back({{"timestamp", format_time_utc(hours[i])}, {"mu", mu[i]}});
    }
    j["hours"] = std::move(hrs);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("InvalidConfig", "cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

SynthTruth SynthTruth::load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("InvalidConfig", "cannot read '" + path + "'");
    nlohmann::json j;
    in >> j;
    SynthTruth t;
    const auto& c = j.at("config");
    t.config.days = c.at("days").get<int>();
    t.config.start_date = c.at("start_date").get<std::string>();
    t.config.da_base = c.at("da_base").get<double>();
    t.config.da_amplitude = c.at("da_amplitude").get<double>();
    t.config.da_noise = c.at("da_noise").get<double>();
    t.config.ramp_coupling = c.at("ramp_coupling").get<double>();
    t.config.ar_coeff = c.at("ar_coeff").get<double>();
    t.config.error_coupling = c.at("error_coupling").get<double>();
    t.config.noise_scale = c.at("noise_scale").get<double>();
    t.config.rho = c.at("rho").get<double>();
    t.config.tail_df = c.at("tail_df").get<int>();
    t.config.exo_error_scale = c.at("exo_error_scale").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.pattern = j.at("pattern").get<std::array<double, 4>>();
    t.correlation = j.at("correlation").get<std::array<std::array<double, 4>, 4>>();
    for (const auto& h : j.at("hours")) {
        t.hours.push_back(parse_time_utc(h.at("timestamp").get<std::string>()));
        t.mu.push_back(h.at("mu").get<std::array<double, 4>>());
    }
    return t;
}

}  // namespace deltaflow
