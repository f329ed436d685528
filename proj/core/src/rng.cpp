#include "ricefield/rng.hpp"

#include <stdexcept>

namespace ricefield {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return normal_spare_;
    }
    // Marsaglia polar
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    normal_spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw std::domain_error("Rng::gamma: shape must be positive");
    if (shape < 1.0) {
        // boost to shape+1 and scale back
        const double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

namespace {

// Hormann's PTRS transformed-rejection sampler, exact for mean >= 10.
std::uint64_t poisson_ptrs(double mean, Rng& rng) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (kf < 0.0) continue;
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (us < 0.013 && v > us) continue;
        const double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - std::lgamma(k + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

} // namespace

std::uint64_t Rng::poisson(double mean) {
    if (!(mean >= 0.0)) throw std::domain_error("Rng::poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // inversion by sequential search
        const double l = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }
    return poisson_ptrs(mean, *this);
}

} // namespace ricefield
