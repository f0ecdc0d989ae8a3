#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "antfungus/model.hpp"

// Independent equilibrium finder used to cross-check the closed-form
// solution. It never touches the quadratic formula: interior equilibria lie
// on the line F = (d_a/r_a) A, so it scans the scalar residual
//   h(A) = r_f a A^2 / (b + a A^2) - (d_f d_a / r_a) A - r_c A
// for sign changes, bisects each bracket, and polishes with a full 2-D
// Newton iteration on the vector field.
namespace testsupport {

inline double line_residual(const antfungus::ModelParams& p, double A) {
    const double aA2 = p.a * A * A;
    return p.r_f * aA2 / (p.b + aA2) - (p.d_f * p.d_a / p.r_a) * A - p.r_c * A;
}

inline double bisect_line_residual(const antfungus::ModelParams& p, double lo, double hi) {
    double flo = line_residual(p, lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = line_residual(p, mid);
        if ((flo < 0.0) == (fmid < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-16 * hi) break;
    }
    return 0.5 * (lo + hi);
}

inline antfungus::BiomassState newton_polish(const antfungus::ModelParams& p,
                                             antfungus::BiomassState x) {
    for (int i = 0; i < 50; ++i) {
        const antfungus::BiomassState f = antfungus::vector_field(p, x);
        const Eigen::Matrix2d j = antfungus::jacobian(p, x);
        const Eigen::Vector2d delta =
            j.partialPivLu().solve(Eigen::Vector2d{f.A, f.F});
        x.A -= delta(0);
        x.F -= delta(1);
        if (delta.norm() < 1e-15 * (1.0 + std::hypot(x.A, x.F))) break;
    }
    return x;
}

// All interior equilibria found by scanning A over a log grid up to the
// attracting-box bound, sorted ascending in A.
inline std::vector<antfungus::BiomassState> oracle_interior_equilibria(
    const antfungus::ModelParams& p) {
    const double A_hi = 2.0 * antfungus::attracting_box(p).A_max;
    const double A_lo = 1e-16 * A_hi;
    constexpr int kScan = 40000;

    std::vector<antfungus::BiomassState> found;
    double prev_A = A_lo;
    double prev_h = line_residual(p, prev_A);
    for (int i = 1; i <= kScan; ++i) {
        const double A = A_lo * std::pow(A_hi / A_lo, static_cast<double>(i) / kScan);
        const double h = line_residual(p, A);
        if ((prev_h < 0.0) != (h < 0.0)) {
            const double root = bisect_line_residual(p, prev_A, A);
            found.push_back(
                newton_polish(p, {root, p.d_a / p.r_a * root}));
        }
        prev_A = A;
        prev_h = h;
    }
    return found;
}

}  // namespace testsupport
