#pragma once

#include <cstdint>

#include "ricefield/rng.hpp"

namespace ricefield {

// Amplitude/noise pair of the magnitude signal model: the measured magnitude
// is |nu + complex Gaussian noise| with independent N(0, sigma2) parts.
struct RiceParams {
    double nu;     // signal amplitude exp(Z theta), >= 0
    double sigma2; // noise variance, > 0
};

// Discrete distribution with pmf p_tau(n) = tau^(2n) / ((n!)^2 I0(2 tau)).
// tau = 0 degenerates to a point mass at n = 0.
struct ReinforcedPoisson {
    double tau;
};

// Latent count N together with the magnitude Y = sqrt(X) it was drawn with.
struct AugmentedPair {
    std::uint64_t n;
    double y;
};

void validate(const RiceParams& p);

// log density of the magnitude Y under (nu, sigma2); y = 0 gives -inf
double rice_log_density(double y, const RiceParams& p);

// Draws N ~ Poisson(nu^2 / (2 sigma2)) and Y = sqrt(X), X | N ~ Gamma(N+1, scale 2 sigma2).
// The marginal law of Y is the Rice density above.
AugmentedPair sample_augmented(const RiceParams& p, Rng& rng);

double reinforced_poisson_logpmf(std::uint64_t n, const ReinforcedPoisson& d);

// mean tau * I1(2 tau) / I0(2 tau), evaluated stably
double reinforced_poisson_mean(const ReinforcedPoisson& d);

// Conditional law of the latent count given the magnitude:
// tau = y * exp(linpred) / (2 sigma2); y = 0 forces tau = 0.
ReinforcedPoisson conditional_n_given_y(double y, double linpred, double sigma2);

// Rejection sampler with Poisson(alpha) proposals, alpha = max(tau, 1e-8),
// envelope maximized at the proposal mode floor(tau^2/alpha). Exact; this is
// the production sampler.
std::uint64_t sample_reinforced_poisson(const ReinforcedPoisson& d, Rng& rng);

// Reference sampler by CDF inversion; O(tau) per draw, used as a test oracle.
std::uint64_t sample_reinforced_poisson_inversion(const ReinforcedPoisson& d, Rng& rng);

// Naive coincidence sampler: propose N ~ Poisson(tau), accept with the
// probability that an independent copy equals it. For testing only; the
// acceptance rate decays like 1/sqrt(tau).
std::uint64_t sample_reinforced_poisson_coincidence(const ReinforcedPoisson& d, Rng& rng);

} // namespace ricefield
