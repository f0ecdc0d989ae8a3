#include "antfungus/rk45.hpp"

#include <algorithm>

namespace antfungus::detail {

namespace {

// Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order error weights (b - bhat)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

void rk45(const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& rhs,
          std::vector<double>& y, double t0, double t1, const RkOptions& opts,
          const std::vector<double>& forced_times,
          const std::function<bool(double, std::vector<double>&, bool)>& on_accepted) {
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> ytmp(n), ynew(n);

    double t = t0;
    std::size_t next_forced = 0;
    while (next_forced < forced_times.size() && forced_times[next_forced] <= t0) {
        ++next_forced;
    }

    rhs(t, y, k1);

    // Initial step: crude scale estimate, refined by the controller.
    double h = 0.0;
    {
        double ynorm = 0.0, fnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k1[i]));
        }
        h = (fnorm > 0.0) ? 0.01 * std::max(ynorm, opts.abs_tol) / fnorm
                          : 1e-3 * (t1 - t0);
        h = std::min({h, t1 - t0, opts.max_step});
        h = std::max(h, 1e-12 * (t1 - t0));
    }

    while (t < t1) {
        bool hit_forced = false;
        bool hit_end = false;
        double h_try = std::min(h, opts.max_step);
        if (t + h_try >= t1) {
            h_try = t1 - t;
            hit_end = true;
        }
        if (next_forced < forced_times.size() && t + h_try >= forced_times[next_forced]) {
            h_try = forced_times[next_forced] - t;
            hit_forced = true;
            hit_end = forced_times[next_forced] == t1;
        }
        if (!(h_try > 0.0) || t + h_try == t) {
            throw StepUnderflow(t);
        }

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h_try * a21 * k1[i];
        rhs(t + c2 * h_try, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h_try * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h_try, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h_try * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h_try, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h_try * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h_try, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h_try * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                      a64 * k4[i] + a65 * k5[i]);
        rhs(t + h_try, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h_try * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                      b6 * k6[i]);
        rhs(t + h_try, ynew, k7);  // FSAL

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h_try * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
            const double scale =
                opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (ei / scale) * (ei / scale);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            // Land exactly on forced output times despite rounding in t + h.
            t = hit_forced ? forced_times[next_forced] : (hit_end ? t1 : t + h_try);
            y.swap(ynew);
            k1.swap(k7);
            if (hit_forced) ++next_forced;
            if (!on_accepted(t, y, hit_forced)) return;
            const double grow = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
            h = h_try * std::clamp(grow, 0.2, 5.0);
        } else {
            h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
    }
}

}  // namespace antfungus::detail
