#pragma once

namespace ricefield {

// log I0(z) for z >= 0, evaluated in log scale so it cannot overflow
// (finite up to z ~ 1e308, well past the 1e6 the samplers need).
// Power series below the crossover, asymptotic expansion above it.
double log_bessel_i0(double z);

// crossover point between the two evaluation regimes, exposed for tests
inline constexpr double log_bessel_i0_crossover = 20.0;

} // namespace ricefield
