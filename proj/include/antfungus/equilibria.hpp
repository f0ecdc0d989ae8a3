#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "antfungus/model.hpp"

namespace antfungus {

enum class Regime { extinction_only, tangent, bistable };

enum class StabilityLabel { stable_node_or_focus, saddle, degenerate };

struct StabilityClass {
    StabilityLabel label = StabilityLabel::degenerate;
    double trace = 0.0;
    double det = 0.0;
    std::pair<std::complex<double>, std::complex<double>> eigenvalues;
    std::string note;  // nonempty only for the degenerate origin
};

struct EquilibriumReport {
    Regime regime = Regime::extinction_only;
    BiomassState origin{0.0, 0.0};
    std::vector<std::pair<BiomassState, StabilityClass>> interior_points;  // sorted by A
    double threshold_value = 0.0;  // a*
};

// Closed-form equilibria. In the bistable regime the two interior points
// satisfy A1 * A2 = b/a (Vieta); A1 is computed through that product to
// avoid cancellation when b/a << R^2.
EquilibriumReport equilibria(const ModelParams& params);

// Stability from the Jacobian at an (approximate) equilibrium; the scaled
// field norm must be below 1e-8 or the call is rejected.
StabilityClass classify(const ModelParams& params, const BiomassState& eq);

// Ant nullcline F = (d_a/r_a) A and fungus nullcline
// F = r_f a A^2 / (d_f (b + a A^2)) - (r_c/d_f) A on the given grid.
// Fungus values may be negative; they are returned raw.
struct NullclineValues {
    std::vector<double> ant;
    std::vector<double> fungus;
};
NullclineValues nullclines(const ModelParams& params, const std::vector<double>& A_grid);

double fungus_nullcline_value(const ModelParams& params, double A);

nlohmann::json report_to_json(const EquilibriumReport& report);

const char* regime_name(Regime regime);
const char* stability_name(StabilityLabel label);

}  // namespace antfungus
