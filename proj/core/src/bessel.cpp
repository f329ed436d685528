#include "ricefield/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace ricefield {

double log_bessel_i0(double z) {
    if (!(z >= 0.0) || !std::isfinite(z))
        throw std::domain_error("log_bessel_i0: argument must be finite and nonnegative");
    if (z == 0.0) return 0.0;

    if (z < log_bessel_i0_crossover) {
        // I0(z) = sum_n (z/2)^(2n) / (n!)^2, all terms positive
        const double q = 0.25 * z * z;
        double term = 1.0, sum = 1.0;
        for (int n = 1; n < 200; ++n) {
            term *= q / (static_cast<double>(n) * n);
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return std::log(sum);
    }

    // I0(z) ~ e^z / sqrt(2 pi z) * sum_k a_k / z^k with
    // a_k = prod_{j=1..k} (2j-1)^2 / (8^k k!); sum until terms stop decreasing.
    double term = 1.0, sum = 1.0, prev = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= odd * odd / (8.0 * k * z);
        if (term >= prev) break; // divergent tail reached
        sum += term;
        prev = term;
        if (term < sum * 1e-18) break;
    }
    return z - 0.5 * std::log(2.0 * M_PI * z) + std::log(sum);
}

} // namespace ricefield
