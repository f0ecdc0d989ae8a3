#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>

namespace antfungus {

// Instantaneous biomass pair: A = ants [g], F = fungus [g].
struct BiomassState {
    double A{0.0};
    double F{0.0};

    double norm() const;
    bool finite() const;
};

// Worker fraction p and leaf-collecting split q; compressed into the
// division-of-labor scalar a = p^2 q (1-q).
struct LaborAllocation {
    double p{0.0};
    double q{0.0};

    void validate() const;  // throws std::invalid_argument
};

double labor_coefficient(const LaborAllocation& alloc);

// The seven dynamical parameters. r_c is primary (r_c = c * r_a); the raw
// conversion rate c is recoverable read-only. Units: biomass in grams,
// time in weeks (documentation-level, not enforced).
struct ModelParams {
    double r_a{0.0};  // ant maximum growth rate
    double r_f{0.0};  // fungus maximum growth rate
    double r_c{0.0};  // fungus-to-ant consumption coefficient
    double d_a{0.0};  // ant density-dependent death rate
    double d_f{0.0};  // fungus density-dependent death rate
    double b{0.0};    // half-saturation constant
    double a{0.0};    // division-of-labor coefficient

    // Present when the parameter set was built from (p, q).
    std::optional<LaborAllocation> labor;

    double c() const { return r_c / r_a; }

    // Checked construction rejects nonpositive rates and the boundary
    // values a = 0 and a = 0.25. Aggregate initialization stays available
    // for numerical experiments at the boundaries.
    static ModelParams checked(double r_a, double r_f, double r_c, double d_a,
                               double d_f, double b, double a,
                               std::optional<LaborAllocation> labor = std::nullopt);

    void validate() const;  // throws std::invalid_argument
};

// Upper bounds of the compact set that attracts every trajectory:
// A_max = r_a r_f / (d_a d_f), F_max = r_f / d_f.
struct AttractingBox {
    double A_max{0.0};
    double F_max{0.0};

    bool contains(const BiomassState& s, double inflate = 0.0) const;
};

// Right-hand side of the two-species system:
//   dA/dt = (r_a F - d_a A) A
//   dF/dt = (r_f a A^2 / (b + a A^2) - d_f F - r_c A) F
// Throws std::domain_error on non-finite input.
BiomassState vector_field(const ModelParams& params, const BiomassState& state);

// Analytic Jacobian of the vector field at an arbitrary state,
// ordered d(dA/dt, dF/dt) / d(A, F).
Eigen::Matrix2d jacobian(const ModelParams& params, const BiomassState& state);

// Critical division-of-labor value a* = 4b ((r_c r_a + d_f d_a)/(r_a r_f))^2.
// Below it the origin is globally attracting; above it two interior
// equilibria exist.
double coexistence_threshold(const ModelParams& params);

AttractingBox attracting_box(const ModelParams& params);

// Flat key=value parameter files. Keys: r_a, r_f, r_c, d_a, d_f, b, a and
// optionally p, q. Unknown keys are errors. When both a and (p, q) are
// given they must agree to 1e-12.
ModelParams read_params(std::istream& in);
ModelParams read_params_file(const std::string& path);
void write_params(std::ostream& out, const ModelParams& params);

}  // namespace antfungus
