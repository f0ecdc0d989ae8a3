#include "antfungus/equilibria.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace antfungus {

namespace {

std::pair<std::complex<double>, std::complex<double>> eigenvalues_2x2(double trace,
                                                                      double det) {
    const double disc = trace * trace - 4.0 * det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        return {{0.5 * (trace - root), 0.0}, {0.5 * (trace + root), 0.0}};
    }
    const double imag = 0.5 * std::sqrt(-disc);
    return {{0.5 * trace, -imag}, {0.5 * trace, imag}};
}

}  // namespace

EquilibriumReport equilibria(const ModelParams& params) {
    params.validate();
    EquilibriumReport report;
    report.threshold_value = coexistence_threshold(params);

    const double a_star = report.threshold_value;
    constexpr double kTangentTol = 1e-12;  // relative tie tolerance
    if (std::abs(params.a - a_star) <= kTangentTol * a_star) {
        report.regime = Regime::tangent;
    } else if (params.a < a_star) {
        report.regime = Regime::extinction_only;
        return report;
    } else {
        report.regime = Regime::bistable;
    }

    // Midpoint of the quadratic's roots: R = r_f r_a / (2 (r_c r_a + d_f d_a)).
    const double R = params.r_f * params.r_a /
                     (2.0 * (params.r_c * params.r_a + params.d_f * params.d_a));
    const double slope = params.d_a / params.r_a;  // ant nullcline F = slope * A

    if (report.regime == Regime::tangent) {
        const BiomassState point{R, slope * R};
        report.interior_points.emplace_back(point, classify(params, point));
        return report;
    }

    const double disc = R * R - params.b / params.a;
    const double A2 = R + std::sqrt(disc);
    const double A1 = (params.b / params.a) / A2;  // Vieta: A1 A2 = b/a
    for (double A : {A1, A2}) {
        const BiomassState point{A, slope * A};
        report.interior_points.emplace_back(point, classify(params, point));
    }
    return report;
}

StabilityClass classify(const ModelParams& params, const BiomassState& eq) {
    const BiomassState f = vector_field(params, eq);
    const double scale = std::max(1.0, eq.norm());
    if (f.norm() / scale >= 1e-8) {
        throw std::invalid_argument("classify: state is not an equilibrium (field norm " +
                                    std::to_string(f.norm()) + ")");
    }

    StabilityClass result;
    const Eigen::Matrix2d j = jacobian(params, eq);
    result.trace = j(0, 0) + j(1, 1);
    result.det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    result.eigenvalues = eigenvalues_2x2(result.trace, result.det);

    // The origin linearizes to the zero matrix; an eigenvalue verdict there
    // would be fake. Stability of the origin is a nonlinear property
    // (Lyapunov argument), recorded as a note instead.
    const double jnorm = j.cwiseAbs().maxCoeff();
    if (jnorm < 1e-14) {
        result.label = StabilityLabel::degenerate;
        result.note =
            "linearization vanishes; the origin attracts nearby states through "
            "nonlinear (quadratic) terms, shown by a Lyapunov argument rather "
            "than eigenvalues";
        return result;
    }

    if (result.det < 0.0) {
        result.label = StabilityLabel::saddle;
    } else if (result.det > 0.0 && result.trace < 0.0) {
        result.label = StabilityLabel::stable_node_or_focus;
    } else {
        result.label = StabilityLabel::degenerate;
    }
    return result;
}

double fungus_nullcline_value(const ModelParams& params, double A) {
    const double aA2 = params.a * A * A;
    return params.r_f * aA2 / (params.d_f * (params.b + aA2)) -
           params.r_c * A / params.d_f;
}

NullclineValues nullclines(const ModelParams& params, const std::vector<double>& A_grid) {
    NullclineValues values;
    values.ant.reserve(A_grid.size());
    values.fungus.reserve(A_grid.size());
    for (double A : A_grid) {
        if (A < 0.0) {
            throw std::invalid_argument("nullclines: A grid must be nonnegative");
        }
        values.ant.push_back(params.d_a / params.r_a * A);
        values.fungus.push_back(fungus_nullcline_value(params, A));
    }
    return values;
}

const char* regime_name(Regime regime) {
    switch (regime) {
        case Regime::extinction_only: return "extinction_only";
        case Regime::tangent: return "tangent";
        case Regime::bistable: return "bistable";
    }
    return "?";
}

const char* stability_name(StabilityLabel label) {
    switch (label) {
        case StabilityLabel::stable_node_or_focus: return "stable_node_or_focus";
        case StabilityLabel::saddle: return "saddle";
        case StabilityLabel::degenerate: return "degenerate";
    }
    return "?";
}

nlohmann::json report_to_json(const EquilibriumReport& report) {
    nlohmann::json points = nlohmann::json::array();
    auto point_json = [](const BiomassState& s, const StabilityClass& c) {
        nlohmann::json j{
            {"A", s.A},
            {"F", s.F},
            {"label", stability_name(c.label)},
            {"trace", c.trace},
            {"det", c.det},
            {"eigs",
             {{c.eigenvalues.first.real(), c.eigenvalues.first.imag()},
              {c.eigenvalues.second.real(), c.eigenvalues.second.imag()}}},
        };
        if (!c.note.empty()) j["note"] = c.note;
        return j;
    };
    points.push_back(point_json(report.origin, StabilityClass{
                                                   StabilityLabel::degenerate,
                                                   0.0,
                                                   0.0,
                                                   {{0.0, 0.0}, {0.0, 0.0}},
                                                   "linearization vanishes; the origin "
                                                   "attracts nearby states through nonlinear "
                                                   "(quadratic) terms, shown by a Lyapunov "
                                                   "argument rather than eigenvalues"}));
    for (const auto& [state, stability] : report.interior_points) {
        points.push_back(point_json(state, stability));
    }
    return nlohmann::json{{"regime", regime_name(report.regime)},
                          {"threshold", report.threshold_value},
                          {"points", points}};
}

}  // namespace antfungus
