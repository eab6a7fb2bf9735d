#pragma once

// Synthetic electricity-market data generator with a known conditional
// ground truth, so downstream estimators can be tested against closed-form
// densities instead of licensed exchange data.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deltaflow/common.hpp"
#include "deltaflow/dataset.hpp"

namespace deltaflow {

struct SynthConfig {
    int days = 30;
    std::string start_date = "2021-01-01";
    double da_base = 40.0;       // EUR/MWh
    double da_amplitude = 15.0;  // daily sinusoid amplitude
    double da_noise = 3.0;       // iid noise on the DA price
    double ramp_coupling = 0.0;  // links DA increments to the within-hour delta pattern
    double ar_coeff = 0.0;       // AR(1) on the previous hour's delta vector
    double error_coupling = 0.0; // links renewable/load forecast errors to deltas
    double noise_scale = 1.0;    // scale of the delta noise (EUR/MWh)
    double rho = 0.8;            // within-hour quarter correlation, C[i][j] = rho^|i-j|
    int tail_df = 0;             // 0 = Gaussian noise; >=3 = Student-t scale mixture
    double exo_error_scale = 50.0;  // MW scale of solar/wind/load forecast errors
    double spike_prob = 0.0;   // on rising-ramp hours, probability of a spike regime
    double spike_shift = 0.0;  // spike-regime mean displacement along the pattern
    double spike_scale = 3.0;  // spike-regime noise inflation factor (>= 1)

    void validate() const;  // throws InvalidConfig
};

// Conditional ground truth of the generated delta vectors: for each hour t,
// delta(t) ~ mu(t) + noise, where noise is N(0, noise_scale^2 * C) when
// tail_df == 0 and multivariate-t with scale noise_scale^2 * C otherwise.
// With spike_prob > 0 the conditional law is a two-component mixture: with
// per-hour weight w(t) (spike_prob on rising-ramp hours, 0 otherwise) the
// mean shifts by spike_shift * pattern and the noise scale inflates by
// spike_scale. mu(t) and w(t) are recorded after generation (mu depends on
// the realized lag).
struct SynthTruth {
    SynthConfig config;
    std::uint64_t seed = 0;
    std::array<double, 4> pattern{};  // per-quarter sign pattern of the ramp term
    std::array<std::array<double, 4>, 4> correlation{};
    std::vector<std::int64_t> hours;
    std::vector<std::array<double, 4>> mu;
    std::vector<double> spike_w;  // per-hour spike-regime weight

    // Log density of the conditional distribution at hour index i.
    double log_density(std::size_t i, const std::array<double, 4>& x) const;
    // Draw from the conditional distribution at hour index i.
    std::array<double, 4> sample(std::size_t i, Rng& rng) const;

    void save_json(const std::string& path) const;
    static SynthTruth load_json(const std::string& path);
};

struct SynthResult {
    MarketDataset dataset;
    SynthTruth truth;
};

SynthResult generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace deltaflow
