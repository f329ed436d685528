#include "ricefield/rice.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ricefield/bessel.hpp"

namespace ricefield {

void validate(const RiceParams& p) {
    if (!(p.nu >= 0.0) || !std::isfinite(p.nu))
        throw std::domain_error("RiceParams: nu must be finite and nonnegative");
    if (!(p.sigma2 > 0.0) || !std::isfinite(p.sigma2))
        throw std::domain_error("RiceParams: sigma2 must be finite and positive");
}

double rice_log_density(double y, const RiceParams& p) {
    validate(p);
    if (!(y >= 0.0) || !std::isfinite(y))
        throw std::domain_error("rice_log_density: y must be finite and nonnegative");
    if (y == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(y / p.sigma2) - (y * y + p.nu * p.nu) / (2.0 * p.sigma2) +
           log_bessel_i0(y * p.nu / p.sigma2);
}

AugmentedPair sample_augmented(const RiceParams& p, Rng& rng) {
    validate(p);
    const double t = p.nu * p.nu / (2.0 * p.sigma2);
    const std::uint64_t n = rng.poisson(t);
    const double x = rng.gamma(static_cast<double>(n) + 1.0) * (2.0 * p.sigma2);
    return {n, std::sqrt(x)};
}

double reinforced_poisson_logpmf(std::uint64_t n, const ReinforcedPoisson& d) {
    if (!(d.tau >= 0.0) || !std::isfinite(d.tau))
        throw std::domain_error("reinforced_poisson_logpmf: tau must be finite and nonnegative");
    if (d.tau == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    return 2.0 * nn * std::log(d.tau) - 2.0 * std::lgamma(nn + 1.0) -
           log_bessel_i0(2.0 * d.tau);
}

double reinforced_poisson_mean(const ReinforcedPoisson& d) {
    if (d.tau == 0.0) return 0.0;
    // tau * I1(2 tau) / I0(2 tau) via the pmf recursion, summed from the mode
    const double log_i0 = log_bessel_i0(2.0 * d.tau);
    double mean = 0.0, mass = 0.0;
    const std::uint64_t n_max =
        static_cast<std::uint64_t>(d.tau + 12.0 * std::sqrt(d.tau + 1.0) + 40.0);
    for (std::uint64_t n = 0; n <= n_max; ++n) {
        const double nn = static_cast<double>(n);
        const double p = std::exp(2.0 * nn * std::log(d.tau) - 2.0 * std::lgamma(nn + 1.0) - log_i0);
        mean += nn * p;
        mass += p;
        if (mass > 1.0 - 1e-16 && nn > d.tau) break;
    }
    return mean;
}

ReinforcedPoisson conditional_n_given_y(double y, double linpred, double sigma2) {
    if (!(y >= 0.0) || !std::isfinite(y))
        throw std::domain_error("conditional_n_given_y: y must be finite and nonnegative");
    if (!(sigma2 > 0.0))
        throw std::domain_error("conditional_n_given_y: sigma2 must be positive");
    if (y == 0.0) return {0.0};
    return {y * std::exp(linpred) / (2.0 * sigma2)};
}

std::uint64_t sample_reinforced_poisson(const ReinforcedPoisson& d, Rng& rng) {
    if (!(d.tau >= 0.0) || !std::isfinite(d.tau))
        throw std::domain_error("sample_reinforced_poisson: tau must be finite and nonnegative");
    if (d.tau == 0.0) return 0;
    const double alpha = std::max(d.tau, 1e-8);
    const double log_ratio = 2.0 * std::log(d.tau) - std::log(alpha); // log(tau^2/alpha)
    const double mode = std::floor(d.tau * d.tau / alpha);
    const double log_envelope = mode * log_ratio - std::lgamma(mode + 1.0);
    for (;;) {
        const double n = static_cast<double>(rng.poisson(alpha));
        const double log_accept = n * log_ratio - std::lgamma(n + 1.0) - log_envelope;
        if (std::log(rng.uniform()) <= log_accept) return static_cast<std::uint64_t>(n);
    }
}

std::uint64_t sample_reinforced_poisson_inversion(const ReinforcedPoisson& d, Rng& rng) {
    if (!(d.tau >= 0.0) || !std::isfinite(d.tau))
        throw std::domain_error("sample_reinforced_poisson_inversion: tau must be nonnegative");
    if (d.tau == 0.0) return 0;
    const double log_i0 = log_bessel_i0(2.0 * d.tau);
    const double log_tau2 = 2.0 * std::log(d.tau);
    const double omega = rng.uniform();
    double cum = 0.0;
    std::uint64_t n = 0;
    for (;;) {
        const double nn = static_cast<double>(n);
        cum += std::exp(nn * log_tau2 - 2.0 * std::lgamma(nn + 1.0) - log_i0);
        if (cum >= omega) return n;
        ++n;
        if (n > 1000000) return n; // numerically exhausted tail
    }
}

std::uint64_t sample_reinforced_poisson_coincidence(const ReinforcedPoisson& d, Rng& rng) {
    if (!(d.tau >= 0.0) || !std::isfinite(d.tau))
        throw std::domain_error("sample_reinforced_poisson_coincidence: tau must be nonnegative");
    if (d.tau == 0.0) return 0;
    const double log_tau = std::log(d.tau);
    for (;;) {
        const double n = static_cast<double>(rng.poisson(d.tau));
        const double log_accept = -d.tau + n * log_tau - std::lgamma(n + 1.0);
        if (std::log(rng.uniform()) <= log_accept) return static_cast<std::uint64_t>(n);
    }
}

} // namespace ricefield
