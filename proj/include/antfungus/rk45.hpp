#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace antfungus::detail {

// Generic adaptive Dormand-Prince 5(4) stepper over flat state vectors.
// Used by the trajectory integrator (dim 2) and by the forward sensitivity
// system (dim 2 + 2k).

struct RkOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
};

struct StepUnderflow : std::runtime_error {
    explicit StepUnderflow(double t)
        : std::runtime_error("adaptive step size underflow at t=" + std::to_string(t)),
          t_fail(t) {}
    double t_fail;
};

// rhs(t, y, dydt); on_accepted(t, y, forced) is called after every accepted
// step and must return true to continue. The callback may adjust y in place
// (state clamping). `forced_times` (sorted, within (t0, t1]) are hit
// exactly; `forced` marks those calls.
void rk45(const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& rhs,
          std::vector<double>& y, double t0, double t1, const RkOptions& opts,
          const std::vector<double>& forced_times,
          const std::function<bool(double, std::vector<double>&, bool)>& on_accepted);

}  // namespace antfungus::detail
