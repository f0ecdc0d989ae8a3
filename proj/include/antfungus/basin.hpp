#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "antfungus/integrate.hpp"
#include "antfungus/model.hpp"

namespace antfungus {

// Thrown when a basin query is made outside the bistable regime.
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

// Analytic membership in the extinction region: true iff
//   fungus-nullcline(A) <= F < F^{i1}.
// Requires a > a* and a strictly positive state.
bool in_extinction_region(const ModelParams& params, const BiomassState& state);

// Positively invariant wedge between the fungus nullcline and the ant
// nullcline: fungus-nullcline(A) <= F <= (d_a/r_a) A. Requires a > a*.
bool in_invariant_wedge(const ModelParams& params, const BiomassState& state);

struct BasinGrid {
    double A_min = 0.0, A_max = 0.0;
    double F_min = 0.0, F_max = 0.0;
    int nA = 0, nF = 0;

    double A_center(int i) const { return A_min + (i + 0.5) * (A_max - A_min) / nA; }
    double F_center(int j) const { return F_min + (j + 0.5) * (F_max - F_min) / nF; }
    void validate() const;
};

struct BasinMap {
    BasinGrid grid;
    std::vector<AttractorLabel> labels;       // row-major, index = j * nA + i
    std::vector<char> analytic_region_mask;   // extinction-region membership
    double threshold_value = 0.0;

    AttractorLabel label_at(int i, int j) const { return labels[j * grid.nA + i]; }
    bool mask_at(int i, int j) const { return analytic_region_mask[j * grid.nA + i] != 0; }
};

// Classifies every cell center by simulation; integration failures become
// undecided cells rather than errors.
BasinMap map_basins(const ModelParams& params, const BasinGrid& grid,
                    const IntegratorConfig& cfg);

// CSV matrix of labels (0=origin, 1=interior, 2=undecided), one row per F
// value from F_min upward, plus a JSON sidecar with grid and threshold.
void write_basin_csv(std::ostream& out, const BasinMap& map);
nlohmann::json basin_sidecar_json(const BasinMap& map);

}  // namespace antfungus
