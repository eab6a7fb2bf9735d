#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltaflow {

/// Error with a stable machine-readable code ("GapDetected", "EmptyOverlap", ...)
/// in addition to the human-readable message. what() reads "<code>: <message>".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

// ---------------------------------------------------------------------------
// Normal distribution helpers.
// ---------------------------------------------------------------------------

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal quantile function (Wichura's rational approximation,
/// accurate to full double precision for p in (0,1)).
double norm_quantile(double p);

/// Log density of the standard normal.
double norm_logpdf(double x);

// ---------------------------------------------------------------------------
// Deterministic random source.
//
// std::mt19937_64 has a fully specified bit stream, but the standard
// distributions do not, so all sampling here is built from raw 64-bit draws.
// Results are reproducible across platforms for a fixed seed.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform draw strictly inside (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform draw in (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the inverse CDF; one 64-bit draw per variate.
    double normal() { return norm_quantile(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Integer in [0, n). Fixed-point scaling keeps the draw count constant.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Misc numeric helpers.
// ---------------------------------------------------------------------------

bool all_finite(const std::vector<double>& v);

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased (n-1)

/// Linear-interpolation quantile of a sample (type-7 order statistics),
/// p in [0, 1]. The input need not be sorted.
double quantile_type7(std::vector<double> values, double p);

/// Sample Pearson correlation; throws ZeroVariance when a side is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// acf[0] = 1, acf[k] = pearson(series[0..n-k), series[k..n)).
std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag);

/// Solves A x = b in place for a symmetric positive definite A (row-major
/// n*n). Throws Error("SingularDesign") when the factorization breaks down.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n);

/// Eigenvalues of a small symmetric matrix (cyclic Jacobi sweeps).
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n);

}  // namespace deltaflow
