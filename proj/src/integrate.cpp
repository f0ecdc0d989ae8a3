#include "antfungus/integrate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "antfungus/equilibria.hpp"
#include "antfungus/rk45.hpp"

namespace antfungus {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("integrator config: tolerances must be positive");
    }
    if (!(t_end > t_start)) {
        throw std::invalid_argument("integrator config: t_end must exceed t_start");
    }
    if (method == Method::implicit_trapezoidal && !(fixed_step > 0.0)) {
        throw std::invalid_argument("integrator config: fixed_step must be positive");
    }
    double prev = t_start;
    for (double t : dense_output_grid) {
        if (!(t >= t_start) || !(t <= t_end) || (t <= prev && t != t_start)) {
            throw std::invalid_argument(
                "integrator config: dense output grid must increase within [t_start, t_end]");
        }
        prev = t;
    }
}

namespace {

// Shared bookkeeping for both integration methods: sampling, clamping and
// terminal detection on each accepted step.
class StepMonitor {
  public:
    StepMonitor(const ModelParams& params, const IntegratorConfig& cfg, Trajectory& out)
        : params_(params), cfg_(cfg), out_(out), grid_(!cfg.dense_output_grid.empty()) {}

    // Returns false once the trajectory is terminal.
    bool accept(double t, double& A, double& F, bool forced) {
        clamp(t, A, F);
        if (!grid_ || forced) {
            out_.times.push_back(t);
            out_.states.push_back({A, F});
        }
        if (std::abs(A) < cfg_.extinct_tol && std::abs(F) < cfg_.extinct_tol) {
            out_.flag = TerminalFlag::extinct;
            record_terminal(t, A, F);
            return false;
        }
        const BiomassState f = vector_field(params_, {A, F});
        // An adaptive run hovers at the tolerance floor, so the reachable
        // field norm is bounded below by roughly |J| * (abs_tol + rel_tol |y|);
        // the convergence threshold has to sit above that floor.
        const double floor =
            10.0 * (cfg_.abs_tol + cfg_.rel_tol * std::hypot(A, F));
        if (cfg_.converge_field_norm > 0.0 &&
            f.norm() < std::max(cfg_.converge_field_norm, floor)) {
            if (++quiet_steps_ >= cfg_.converge_steps) {
                out_.flag = TerminalFlag::converged_to_equilibrium;
                record_terminal(t, A, F);
                return false;
            }
        } else {
            quiet_steps_ = 0;
        }
        return true;
    }

  private:
    void clamp(double t, double& A, double& F) {
        for (double* v : {&A, &F}) {
            if (*v < 0.0) {
                if (*v >= -cfg_.abs_tol) {
                    *v = 0.0;
                } else {
                    out_.flag = TerminalFlag::reached_horizon;
                    throw IntegrationError(
                        "state fell below -abs_tol at t=" + std::to_string(t), out_);
                }
            }
        }
    }

    // Early termination must still leave the terminal state on record even
    // when sampling on a grid.
    void record_terminal(double t, double A, double F) {
        if (out_.times.empty() || out_.times.back() != t) {
            out_.times.push_back(t);
            out_.states.push_back({A, F});
        }
    }

    const ModelParams& params_;
    const IntegratorConfig& cfg_;
    Trajectory& out_;
    bool grid_;
    int quiet_steps_ = 0;
};

Trajectory integrate_adaptive(const ModelParams& params, const BiomassState& init,
                              const IntegratorConfig& cfg) {
    Trajectory out;
    const auto& grid = cfg.dense_output_grid;
    if (grid.empty() || grid.front() == cfg.t_start) {
        out.times.push_back(cfg.t_start);
        out.states.push_back(init);
    }

    detail::RkOptions opts{cfg.rel_tol, cfg.abs_tol, cfg.max_step};
    std::vector<double> forced;
    for (double t : grid) {
        if (t > cfg.t_start) forced.push_back(t);
    }

    std::vector<double> y{init.A, init.F};
    StepMonitor monitor(params, cfg, out);
    auto rhs = [&](double, const std::vector<double>& s, std::vector<double>& dydt) {
        const BiomassState f = vector_field(params, {s[0], s[1]});
        dydt[0] = f.A;
        dydt[1] = f.F;
    };
    try {
        detail::rk45(rhs, y, cfg.t_start, cfg.t_end, opts, forced,
                     [&](double t, std::vector<double>& s, bool is_forced) {
                         return monitor.accept(t, s[0], s[1], is_forced);
                     });
    } catch (const detail::StepUnderflow& e) {
        throw IntegrationError(e.what(), out);
    }
    return out;
}

Trajectory integrate_trapezoidal(const ModelParams& params, const BiomassState& init,
                                 const IntegratorConfig& cfg) {
    Trajectory out;
    const auto& grid = cfg.dense_output_grid;
    if (grid.empty() || grid.front() == cfg.t_start) {
        out.times.push_back(cfg.t_start);
        out.states.push_back(init);
    }
    std::vector<double> forced;
    for (double t : grid) {
        if (t > cfg.t_start) forced.push_back(t);
    }

    StepMonitor monitor(params, cfg, out);
    Eigen::Vector2d y{init.A, init.F};
    double t = cfg.t_start;
    std::size_t next_forced = 0;
    const double base_h = std::min(cfg.fixed_step, cfg.max_step);

    while (t < cfg.t_end) {
        bool is_forced = false;
        double h = std::min(base_h, cfg.t_end - t);
        if (next_forced < forced.size() && t + h >= forced[next_forced]) {
            h = forced[next_forced] - t;
            is_forced = true;
        }
        if (!(h > 0.0) || t + h == t) {
            throw IntegrationError("trapezoidal step underflow at t=" + std::to_string(t), out);
        }

        const BiomassState fy = vector_field(params, {y[0], y[1]});
        Eigen::Vector2d z = y + h * Eigen::Vector2d{fy.A, fy.F};  // explicit predictor
        bool newton_ok = false;
        for (int it = 0; it < 25; ++it) {
            const BiomassState fz = vector_field(params, {z[0], z[1]});
            Eigen::Vector2d g =
                z - y - 0.5 * h * (Eigen::Vector2d{fy.A, fy.F} + Eigen::Vector2d{fz.A, fz.F});
            Eigen::Matrix2d m =
                Eigen::Matrix2d::Identity() - 0.5 * h * jacobian(params, {z[0], z[1]});
            Eigen::Vector2d delta = m.partialPivLu().solve(g);
            z -= delta;
            if (delta.norm() < 1e-13 * (1.0 + z.norm())) {
                newton_ok = true;
                break;
            }
        }
        if (!newton_ok) {
            throw IntegrationError("trapezoidal Newton iteration stalled at t=" +
                                       std::to_string(t),
                                   out);
        }

        t = is_forced ? forced[next_forced] : std::min(t + h, cfg.t_end);
        if (is_forced) ++next_forced;
        y = z;
        if (!monitor.accept(t, y[0], y[1], is_forced)) break;
    }
    return out;
}

}  // namespace

Trajectory integrate(const ModelParams& params, const BiomassState& init,
                     const IntegratorConfig& cfg) {
    cfg.validate();
    if (!init.finite() || init.A < 0.0 || init.F < 0.0) {
        throw std::invalid_argument("integrate: initial state must be finite and nonnegative");
    }
    return cfg.method == Method::adaptive_rk ? integrate_adaptive(params, init, cfg)
                                             : integrate_trapezoidal(params, init, cfg);
}

AttractorLabel classify_limit(const ModelParams& params, const BiomassState& init,
                              const IntegratorConfig& cfg) {
    IntegratorConfig run = cfg;
    run.dense_output_grid.clear();
    const Trajectory traj = integrate(params, init, run);
    const BiomassState& end = traj.terminal();
    if (traj.flag == TerminalFlag::extinct) return AttractorLabel::origin;

    // A field-norm convergence certificate may fire while the slow algebraic
    // approach to the origin is still ~1e-5 away, so the match radius is
    // looser in that case.
    const double match = traj.flag == TerminalFlag::converged_to_equilibrium ? 1e-3 : 1e-6;
    if (std::hypot(end.A, end.F) < match) return AttractorLabel::origin;

    const EquilibriumReport report = equilibria(params);
    for (const auto& [point, stability] : report.interior_points) {
        if (stability.label == StabilityLabel::stable_node_or_focus &&
            std::hypot(end.A - point.A, end.F - point.F) < match) {
            return AttractorLabel::interior;
        }
    }
    return AttractorLabel::undecided;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,A,F\n";
    char buf[96];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", traj.times[i],
                      traj.states[i].A, traj.states[i].F);
        out << buf;
    }
}

}  // namespace antfungus
