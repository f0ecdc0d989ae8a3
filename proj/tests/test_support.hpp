#pragma once

#include <random>

#include "antfungus/model.hpp"

// Shared fixtures for the test suites.
namespace testsupport {

// Reference parameter set used throughout the suites.
inline antfungus::ModelParams reference_params() {
    return antfungus::ModelParams::checked(0.1, 0.7, 0.0045, 0.1, 0.2, 0.002, 0.2);
}

// Interior equilibria of the reference set, frozen from a 30-digit
// evaluation of the closed form (and confirmed by the bisection oracle).
inline constexpr double kRefA1 = 0.0029239262013373032;
inline constexpr double kRefA2 = 3.4200589588842373;
inline constexpr double kRefThreshold = 6.8277959183673469e-4;
inline constexpr double kRefTrace1 = -8.7717786040119097e-4;
inline constexpr double kRefDet1 = -1.7453540559299226e-7;
inline constexpr double kRefTrace2 = -1.0260176876652712;
inline constexpr double kRefDet2 = 0.23879097649139581;
inline constexpr double kRefNullclineAt0p001 = 3.2746500349965003e-4;

// Log-uniform sample in [lo, hi].
inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return lo * std::pow(hi / lo, unit(rng));
}

// Random parameter set inside the documented estimation intervals,
// resampled until the two interior equilibria exist.
inline antfungus::ModelParams random_bistable_params(std::mt19937_64& rng) {
    for (;;) {
        antfungus::ModelParams p;
        p.r_a = log_uniform(rng, 0.05, 0.3);
        p.r_f = log_uniform(rng, 0.01, 1.0);
        p.r_c = log_uniform(rng, 0.001, 10.0);
        p.d_a = log_uniform(rng, 0.001, 1.0);
        p.d_f = log_uniform(rng, 0.001, 1.0);
        p.b = log_uniform(rng, 0.001, 10.0);
        p.a = log_uniform(rng, 1e-4, 0.2499);
        const double a_star = coexistence_threshold(p);
        if (p.a > 1.0001 * a_star) return p;
    }
}

}  // namespace testsupport
