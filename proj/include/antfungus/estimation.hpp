#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "antfungus/model.hpp"
#include "antfungus/sensitivity.hpp"

namespace antfungus {

struct Observation {
    double week = 0.0;
    double A_mean = 0.0;
    double A_sd = std::numeric_limits<double>::quiet_NaN();  // NaN when absent
    double F_mean = 0.0;
    double F_sd = std::numeric_limits<double>::quiet_NaN();
};

// Biomass time series, CSV header `week,A_mean,A_sd,F_mean,F_sd`
// (sd columns optional).
struct ObservationSeries {
    std::vector<Observation> rows;

    bool has_sd() const;
    void validate() const;  // >= 4 rows, strictly increasing weeks, means >= 0

    static ObservationSeries read_csv(std::istream& in);
    static ObservationSeries read_csv_file(const std::string& path);
    void write_csv(std::ostream& out) const;
};

struct Bounds {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
};

// Default estimation box: a constrained to (0, 0.25), everything else to
// (0, inf).
std::array<Bounds, 9> default_bounds();

struct FitOptions {
    int max_iterations = 200;
    bool free_initials = false;  // estimate A0/F0 instead of fixing at guess
    bool log_loss = false;       // residuals on log10(x+1)
    double gradient_tol = 1e-8;
    double rel_tol = 1e-10;      // inner ODE tolerances
    double abs_tol = 1e-12;
    int multistart = 8;
    std::uint64_t seed = 0;
};

struct FitResult {
    std::array<double, 9> estimates{};                    // indexed by Target
    std::array<std::optional<double>, 9> std_devs{};      // nullopt = not estimable
    std::array<bool, 9> free_mask{};
    std::array<double, 9> initial_guess{};
    std::array<Bounds, 9> bounds{};
    double residual_norm = 0.0;  // weighted SSE
    int iterations = 0;
    bool converged = false;
    double covariance_condition_number = 0.0;  // cond(J^T J)

    double estimate(Target t) const { return estimates[static_cast<std::size_t>(t)]; }
    const std::optional<double>& std_dev(Target t) const {
        return std_devs[static_cast<std::size_t>(t)];
    }
};

// Damped Gauss-Newton (Levenberg style) in a reparameterized space:
// log-type transform for half-open bounds, scaled logistic for finite ones.
// The residual Jacobian comes from forward sensitivities. Standard
// deviations use sigma^2 (J^T J)^-1 mapped back by the delta method.
FitResult fit(const ObservationSeries& data, const std::array<double, 9>& initial_guess,
              const std::array<Bounds, 9>& bounds, const FitOptions& opts);

// Latin-hypercube multistart around the provided guess; returns the
// distinct minima found, best first. Deterministic given opts.seed.
std::vector<FitResult> multistart_fit(const ObservationSeries& data,
                                      const std::array<double, 9>& initial_guess,
                                      const std::array<Bounds, 9>& bounds,
                                      const FitOptions& opts);

enum class IdentFlag { well_identified, poorly_identified };

// Per free target: poorly identified iff not estimable or
// std_dev / |estimate| > 10. Requires a converged fit.
std::array<std::optional<IdentFlag>, 9> identifiability_report(const FitResult& fit);

// Human-readable table with columns Parameters / Initial values /
// Intervals / Estimated values / Standard Deviation ("DNE" where a
// standard deviation is not estimable).
std::string format_fit_table(const FitResult& result);

nlohmann::json fit_to_json(const FitResult& result);

}  // namespace antfungus
