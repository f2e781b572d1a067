#pragma once

#include <cmath>

namespace monogp {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

inline double norm_pdf(double z) {
    return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

inline double norm_log_pdf(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

// Standard normal CDF via erfc for accuracy in both tails.
inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

// log Phi(z), finite for any finite z. The far negative tail uses the
// continued-fraction-free asymptotic series of the Mills ratio, since
// erfc underflows to 0 around z < -37.5 in double precision.
inline double log_ndtr(double z) {
    if (z > -1.0) return std::log1p(-0.5 * std::erfc(z * M_SQRT1_2));
    if (z > -37.0) return std::log(0.5 * std::erfc(-z * M_SQRT1_2));
    // Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6)
    const double zi = 1.0 / (z * z);
    const double series = 1.0 - zi * (1.0 - 3.0 * zi * (1.0 - 5.0 * zi));
    return norm_log_pdf(z) - std::log(-z) + std::log(series);
}

// Inverse Mills ratio phi(z)/Phi(z); robust for large negative z where the
// naive quotient is 0/0.
inline double inv_mills(double z) {
    return std::exp(norm_log_pdf(z) - log_ndtr(z));
}

}  // namespace monogp
