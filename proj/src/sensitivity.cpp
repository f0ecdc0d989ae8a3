#include "antfungus/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "antfungus/rk45.hpp"

namespace antfungus {

const char* target_name(Target target) {
    switch (target) {
        case Target::r_a: return "r_a";
        case Target::r_f: return "r_f";
        case Target::r_c: return "r_c";
        case Target::d_a: return "d_a";
        case Target::d_f: return "d_f";
        case Target::b: return "b";
        case Target::a: return "a";
        case Target::A0: return "A0";
        case Target::F0: return "F0";
    }
    return "?";
}

double target_value(Target target, const ModelParams& params, const BiomassState& init) {
    switch (target) {
        case Target::r_a: return params.r_a;
        case Target::r_f: return params.r_f;
        case Target::r_c: return params.r_c;
        case Target::d_a: return params.d_a;
        case Target::d_f: return params.d_f;
        case Target::b: return params.b;
        case Target::a: return params.a;
        case Target::A0: return init.A;
        case Target::F0: return init.F;
    }
    return 0.0;
}

// df/dtheta at fixed state, with f1 = (r_a F - d_a A) A and
// f2 = (g - d_f F - r_c A) F, g = r_f a A^2 / (b + a A^2):
//   df1/dr_a = A F            df1/dd_a = -A^2
//   df2/dr_f = (a A^2 / (b + a A^2)) F
//   df2/dd_f = -F^2           df2/dr_c = -A F
//   df2/db   = -r_f a A^2 / (b + a A^2)^2 * F
//   df2/da   =  r_f b A^2 / (b + a A^2)^2 * F
// All other entries vanish.
BiomassState param_derivative(const ModelParams& params, const BiomassState& state,
                              Target target) {
    const double A = state.A;
    const double F = state.F;
    const double denom = params.b + params.a * A * A;
    switch (target) {
        case Target::r_a: return {A * F, 0.0};
        case Target::d_a: return {-A * A, 0.0};
        case Target::r_f: return {0.0, params.a * A * A / denom * F};
        case Target::d_f: return {0.0, -F * F};
        case Target::r_c: return {0.0, -A * F};
        case Target::b:
            return {0.0, -params.r_f * params.a * A * A / (denom * denom) * F};
        case Target::a:
            return {0.0, params.r_f * params.b * A * A / (denom * denom) * F};
        case Target::A0:
        case Target::F0: return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

std::vector<SensitivityTrajectory> forward_sensitivities(const ModelParams& params,
                                                         const BiomassState& init,
                                                         const std::vector<Target>& targets,
                                                         const IntegratorConfig& cfg) {
    cfg.validate();
    if (targets.empty()) {
        throw std::invalid_argument("forward_sensitivities: no targets");
    }
    if (!init.finite() || init.A < 0.0 || init.F < 0.0) {
        throw std::invalid_argument(
            "forward_sensitivities: initial state must be finite and nonnegative");
    }

    const std::size_t k = targets.size();
    const std::size_t dim = 2 + 2 * k;
    std::vector<double> y(dim, 0.0);
    y[0] = init.A;
    y[1] = init.F;
    for (std::size_t s = 0; s < k; ++s) {
        if (targets[s] == Target::A0) y[2 + 2 * s] = 1.0;
        if (targets[s] == Target::F0) y[2 + 2 * s + 1] = 1.0;
    }

    auto rhs = [&](double, const std::vector<double>& state, std::vector<double>& dydt) {
        const BiomassState x{state[0], state[1]};
        const BiomassState f = vector_field(params, x);
        dydt[0] = f.A;
        dydt[1] = f.F;
        const Eigen::Matrix2d j = jacobian(params, x);
        for (std::size_t s = 0; s < k; ++s) {
            const double sA = state[2 + 2 * s];
            const double sF = state[2 + 2 * s + 1];
            const BiomassState dtheta = param_derivative(params, x, targets[s]);
            dydt[2 + 2 * s] = j(0, 0) * sA + j(0, 1) * sF + dtheta.A;
            dydt[2 + 2 * s + 1] = j(1, 0) * sA + j(1, 1) * sF + dtheta.F;
        }
    };

    std::vector<SensitivityTrajectory> out(k);
    for (std::size_t s = 0; s < k; ++s) out[s].target = targets[s];

    const bool grid = !cfg.dense_output_grid.empty();
    auto record = [&](double t, const std::vector<double>& state) {
        for (std::size_t s = 0; s < k; ++s) {
            out[s].times.push_back(t);
            out[s].dA_dtheta.push_back(state[2 + 2 * s]);
            out[s].dF_dtheta.push_back(state[2 + 2 * s + 1]);
        }
    };
    if (!grid || cfg.dense_output_grid.front() == cfg.t_start) {
        record(cfg.t_start, y);
    }

    std::vector<double> forced;
    for (double t : cfg.dense_output_grid) {
        if (t > cfg.t_start) forced.push_back(t);
    }
    detail::RkOptions opts{cfg.rel_tol, cfg.abs_tol, cfg.max_step};
    detail::rk45(rhs, y, cfg.t_start, cfg.t_end, opts, forced,
                 [&](double t, std::vector<double>& state, bool is_forced) {
                     if (!grid || is_forced) record(t, state);
                     return true;
                 });
    return out;
}

std::vector<RankingEntry> sensitivity_ranking(const std::vector<SensitivityTrajectory>& results,
                                              const ModelParams& params,
                                              const BiomassState& init, bool scaled) {
    std::vector<RankingEntry> entries;
    entries.reserve(results.size());
    for (const auto& traj : results) {
        RankingEntry e;
        e.target = traj.target;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            e.peak_abs_dA = std::max(e.peak_abs_dA, std::abs(traj.dA_dtheta[i]));
            if (std::abs(traj.dF_dtheta[i]) > e.peak_abs_dF) {
                e.peak_abs_dF = std::abs(traj.dF_dtheta[i]);
                e.peak_time_dF = traj.times[i];
            }
        }
        e.scaled_peak_dF = e.peak_abs_dF * std::abs(target_value(e.target, params, init));
        entries.push_back(e);
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [scaled](const RankingEntry& x, const RankingEntry& y) {
                         const double vx = scaled ? x.scaled_peak_dF : x.peak_abs_dF;
                         const double vy = scaled ? y.scaled_peak_dF : y.peak_abs_dF;
                         if (vx != vy) return vx > vy;
                         return static_cast<int>(x.target) < static_cast<int>(y.target);
                     });
    return entries;
}

void write_sensitivity_csv(std::ostream& out, const SensitivityTrajectory& traj) {
    out << "t,dA,dF\n";
    char buf[96];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", traj.times[i],
                      traj.dA_dtheta[i], traj.dF_dtheta[i]);
        out << buf;
    }
}

nlohmann::json sensitivity_summary_json(const std::vector<SensitivityTrajectory>& results,
                                        const ModelParams& params, const BiomassState& init) {
    nlohmann::json per_target = nlohmann::json::object();
    for (const auto& e : sensitivity_ranking(results, params, init, false)) {
        per_target[target_name(e.target)] = {
            {"peak_abs_dF", e.peak_abs_dF},
            {"peak_time_dF", e.peak_time_dF},
            {"peak_abs_dA", e.peak_abs_dA},
            {"scaled_peak_dF", e.scaled_peak_dF},
        };
    }
    auto order = [&](bool scaled) {
        nlohmann::json names = nlohmann::json::array();
        for (const auto& e : sensitivity_ranking(results, params, init, scaled)) {
            names.push_back(target_name(e.target));
        }
        return names;
    };
    return nlohmann::json{{"targets", per_target},
                          {"ranking", order(false)},
                          {"ranking_scaled", order(true)}};
}

}  // namespace antfungus
