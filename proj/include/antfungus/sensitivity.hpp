#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "antfungus/integrate.hpp"
#include "antfungus/model.hpp"

namespace antfungus {

// Differentiation targets: the seven parameters plus the two initial
// conditions.
enum class Target { r_a, r_f, r_c, d_a, d_f, b, a, A0, F0 };

inline constexpr std::array<Target, 9> kAllTargets = {
    Target::r_a, Target::r_f, Target::r_c, Target::d_a, Target::d_f,
    Target::b,   Target::a,   Target::A0,  Target::F0};

const char* target_name(Target target);
double target_value(Target target, const ModelParams& params, const BiomassState& init);

// Analytic derivative of the vector field with respect to one parameter,
// holding the state fixed. Zero for the initial-condition targets.
BiomassState param_derivative(const ModelParams& params, const BiomassState& state,
                              Target target);

struct SensitivityTrajectory {
    Target target;
    std::vector<double> times;
    std::vector<double> dA_dtheta;
    std::vector<double> dF_dtheta;
};

// Integrates the variational system dS/dt = J(x(t)) S + df/dtheta jointly
// with the state for every requested target. Initial sensitivities are zero
// for parameter targets and the unit/zero pattern for A0/F0.
std::vector<SensitivityTrajectory> forward_sensitivities(const ModelParams& params,
                                                         const BiomassState& init,
                                                         const std::vector<Target>& targets,
                                                         const IntegratorConfig& cfg);

struct RankingEntry {
    Target target;
    double peak_abs_dF = 0.0;   // max_t |dF/dtheta|
    double peak_time_dF = 0.0;
    double peak_abs_dA = 0.0;
    double scaled_peak_dF = 0.0;  // peak_abs_dF * |theta|
};

// Deterministic ranking by peak |dF/dtheta| (raw), descending; ties broken
// by target declaration order. The scaled variant multiplies by |theta|.
std::vector<RankingEntry> sensitivity_ranking(const std::vector<SensitivityTrajectory>& results,
                                              const ModelParams& params,
                                              const BiomassState& init, bool scaled = false);

// Per-target CSV: header t,dA,dF.
void write_sensitivity_csv(std::ostream& out, const SensitivityTrajectory& traj);

// Summary with peak magnitudes, peak times and both rankings.
nlohmann::json sensitivity_summary_json(const std::vector<SensitivityTrajectory>& results,
                                        const ModelParams& params, const BiomassState& init);

}  // namespace antfungus
