#pragma once

#include <limits>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "antfungus/model.hpp"

namespace antfungus {

enum class Method { adaptive_rk, implicit_trapezoidal };

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double t_start = 0.0;
    double t_end = 0.0;
    double max_step = std::numeric_limits<double>::infinity();
    double fixed_step = 1e-2;  // implicit trapezoidal only
    Method method = Method::adaptive_rk;

    // When nonempty, the trajectory is sampled exactly at these times
    // (strictly increasing, within (t_start, t_end]); otherwise every
    // accepted step is recorded.
    std::vector<double> dense_output_grid;

    // Convergence / extinction detection (artifact knobs). A run is flagged
    // converged once the field norm stays below
    // max(converge_field_norm, 10 (abs_tol + rel_tol |y|)) for converge_steps
    // accepted steps; 0 disables the check.
    double converge_field_norm = 1e-10;
    int converge_steps = 10;
    double extinct_tol = 1e-12;

    void validate() const;  // throws std::invalid_argument
};

enum class TerminalFlag { reached_horizon, converged_to_equilibrium, extinct };

struct Trajectory {
    std::vector<double> times;
    std::vector<BiomassState> states;
    TerminalFlag flag = TerminalFlag::reached_horizon;

    const BiomassState& terminal() const { return states.back(); }
};

struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, Trajectory partial_)
        : std::runtime_error(what), partial(std::move(partial_)) {}
    Trajectory partial;
};

// Integrates the two-species system from a nonnegative initial state.
// Negative excursions within -abs_tol are clamped to zero; anything more
// negative aborts with IntegrationError.
Trajectory integrate(const ModelParams& params, const BiomassState& init,
                     const IntegratorConfig& cfg);

enum class AttractorLabel { origin, interior, undecided };

// Labels the omega-limit of the trajectory from `init` by the nearest
// equilibrium within distance 1e-6 of the terminal state; undecided when
// the horizon is reached too far from any equilibrium.
AttractorLabel classify_limit(const ModelParams& params, const BiomassState& init,
                              const IntegratorConfig& cfg);

// CSV export: header t,A,F; 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace antfungus
