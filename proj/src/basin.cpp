#include "antfungus/basin.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "antfungus/equilibria.hpp"

namespace antfungus {

namespace {

// F^{i1} for the bistable regime; throws RegimeError otherwise.
double saddle_fungus_level(const ModelParams& params) {
    const double a_star = coexistence_threshold(params);
    if (!(params.a > a_star) ||
        std::abs(params.a - a_star) <= 1e-12 * a_star) {
        throw RegimeError("basin query requires the bistable regime: a = " +
                          std::to_string(params.a) + " vs threshold a* = " +
                          std::to_string(a_star));
    }
    const double R = params.r_f * params.r_a /
                     (2.0 * (params.r_c * params.r_a + params.d_f * params.d_a));
    const double A2 = R + std::sqrt(R * R - params.b / params.a);
    const double A1 = (params.b / params.a) / A2;
    return params.d_a / params.r_a * A1;
}

void require_strictly_positive(const BiomassState& state) {
    if (!(state.A > 0.0) || !(state.F > 0.0)) {
        throw std::invalid_argument("basin query requires a strictly positive state");
    }
}

}  // namespace

void BasinGrid::validate() const {
    if (!(A_max > A_min) || !(F_max > F_min) || nA <= 0 || nF <= 0) {
        throw std::invalid_argument("basin grid: empty or inverted ranges");
    }
}

bool in_extinction_region(const ModelParams& params, const BiomassState& state) {
    const double f1 = saddle_fungus_level(params);
    require_strictly_positive(state);
    const double lower = fungus_nullcline_value(params, state.A);
    return lower <= state.F && state.F < f1;
}

bool in_invariant_wedge(const ModelParams& params, const BiomassState& state) {
    saddle_fungus_level(params);  // regime guard
    require_strictly_positive(state);
    const double lower = fungus_nullcline_value(params, state.A);
    const double upper = params.d_a / params.r_a * state.A;
    return lower <= state.F && state.F <= upper;
}

BasinMap map_basins(const ModelParams& params, const BasinGrid& grid,
                    const IntegratorConfig& cfg) {
    grid.validate();
    saddle_fungus_level(params);  // regime guard before any integration

    BasinMap map;
    map.grid = grid;
    map.threshold_value = coexistence_threshold(params);
    map.labels.resize(static_cast<std::size_t>(grid.nA) * grid.nF,
                      AttractorLabel::undecided);
    map.analytic_region_mask.resize(map.labels.size(), 0);

    for (int j = 0; j < grid.nF; ++j) {
        for (int i = 0; i < grid.nA; ++i) {
            const BiomassState center{grid.A_center(i), grid.F_center(j)};
            const std::size_t idx = static_cast<std::size_t>(j) * grid.nA + i;
            map.analytic_region_mask[idx] =
                in_extinction_region(params, center) ? 1 : 0;
            try {
                map.labels[idx] = classify_limit(params, center, cfg);
            } catch (const IntegrationError&) {
                map.labels[idx] = AttractorLabel::undecided;
            }
        }
    }
    return map;
}

void write_basin_csv(std::ostream& out, const BasinMap& map) {
    for (int j = 0; j < map.grid.nF; ++j) {
        for (int i = 0; i < map.grid.nA; ++i) {
            if (i) out << ',';
            out << static_cast<int>(map.label_at(i, j));
        }
        out << '\n';
    }
}

nlohmann::json basin_sidecar_json(const BasinMap& map) {
    return nlohmann::json{
        {"grid",
         {{"A_min", map.grid.A_min},
          {"A_max", map.grid.A_max},
          {"F_min", map.grid.F_min},
          {"F_max", map.grid.F_max},
          {"nA", map.grid.nA},
          {"nF", map.grid.nF}}},
        {"threshold", map.threshold_value},
        {"label_encoding", {{"origin", 0}, {"interior", 1}, {"undecided", 2}}},
    };
}

}  // namespace antfungus
