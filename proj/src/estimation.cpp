#include "antfungus/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "antfungus/integrate.hpp"

namespace antfungus {

namespace {

constexpr double kLn10 = 2.302585092994045684;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        field.erase(0, field.find_first_not_of(" \t\r"));
        field.erase(field.find_last_not_of(" \t\r") + 1);
        fields.push_back(field);
    }
    return fields;
}

}  // namespace

bool ObservationSeries::has_sd() const {
    return !rows.empty() && std::isfinite(rows.front().A_sd);
}

void ObservationSeries::validate() const {
    if (rows.size() < 4) {
        throw std::invalid_argument("observation series: need at least 4 rows");
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        if (!(row.week > prev)) {
            throw std::invalid_argument("observation series: weeks must strictly increase");
        }
        prev = row.week;
        if (!(row.A_mean >= 0.0) || !(row.F_mean >= 0.0)) {
            throw std::invalid_argument("observation series: means must be nonnegative");
        }
        if ((std::isfinite(row.A_sd) && row.A_sd < 0.0) ||
            (std::isfinite(row.F_sd) && row.F_sd < 0.0)) {
            throw std::invalid_argument("observation series: sd values must be nonnegative");
        }
    }
}

ObservationSeries ObservationSeries::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("observation csv: empty file");
    }
    const auto header = split_csv_line(line);
    bool with_sd = false;
    if (header == std::vector<std::string>{"week", "A_mean", "A_sd", "F_mean", "F_sd"}) {
        with_sd = true;
    } else if (header != std::vector<std::string>{"week", "A_mean", "F_mean"}) {
        throw std::invalid_argument(
            "observation csv: header must be week,A_mean,A_sd,F_mean,F_sd or "
            "week,A_mean,F_mean");
    }

    ObservationSeries series;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        const std::size_t expected = with_sd ? 5 : 3;
        if (fields.size() != expected) {
            throw std::invalid_argument("observation csv line " + std::to_string(lineno) +
                                        ": wrong field count");
        }
        try {
            Observation row;
            row.week = std::stod(fields[0]);
            row.A_mean = std::stod(fields[1]);
            if (with_sd) {
                row.A_sd = std::stod(fields[2]);
                row.F_mean = std::stod(fields[3]);
                row.F_sd = std::stod(fields[4]);
            } else {
                row.F_mean = std::stod(fields[2]);
            }
            series.rows.push_back(row);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("observation csv line " + std::to_string(lineno) +
                                        ": bad numeric field");
        }
    }
    series.validate();
    return series;
}

ObservationSeries ObservationSeries::read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open observation csv: " + path);
    }
    return read_csv(in);
}

void ObservationSeries::write_csv(std::ostream& out) const {
    char buf[160];
    if (has_sd()) {
        out << "week,A_mean,A_sd,F_mean,F_sd\n";
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.week,
                          r.A_mean, r.A_sd, r.F_mean, r.F_sd);
            out << buf;
        }
    } else {
        out << "week,A_mean,F_mean\n";
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.week, r.A_mean,
                          r.F_mean);
            out << buf;
        }
    }
}

std::array<Bounds, 9> default_bounds() {
    std::array<Bounds, 9> bounds;
    bounds.fill(Bounds{0.0, std::numeric_limits<double>::infinity()});
    bounds[static_cast<std::size_t>(Target::a)] = Bounds{0.0, 0.25};
    return bounds;
}

namespace {

// Smooth box transform: theta = lo + exp(u) for half-open bounds,
// theta = lo + (hi - lo) * sigmoid(u) for finite ones. Keeps every iterate
// strictly inside the box.
struct BoxTransform {
    Bounds bounds;

    double to_theta(double u) const {
        if (std::isinf(bounds.hi)) {
            return bounds.lo + std::exp(u);
        }
        const double s = 1.0 / (1.0 + std::exp(-u));
        return bounds.lo + (bounds.hi - bounds.lo) * s;
    }
    double to_u(double theta) const {
        if (std::isinf(bounds.hi)) {
            return std::log(theta - bounds.lo);
        }
        const double s = (theta - bounds.lo) / (bounds.hi - bounds.lo);
        return std::log(s / (1.0 - s));
    }
    double dtheta_du(double u) const {
        if (std::isinf(bounds.hi)) {
            return std::exp(u);
        }
        const double s = 1.0 / (1.0 + std::exp(-u));
        return (bounds.hi - bounds.lo) * s * (1.0 - s);
    }
};

struct Problem {
    const ObservationSeries& data;
    std::array<Bounds, 9> bounds;
    FitOptions opts;
    std::vector<Target> free_targets;
    std::array<double, 9> theta_fixed;  // fixed entries stay at the guess
    std::vector<double> weights;        // per residual (2 per row)

    std::size_t n_free() const { return free_targets.size(); }
    std::size_t m() const { return 2 * data.rows.size(); }

    std::array<double, 9> assemble(const Eigen::VectorXd& u) const {
        std::array<double, 9> theta = theta_fixed;
        for (std::size_t i = 0; i < free_targets.size(); ++i) {
            theta[static_cast<std::size_t>(free_targets[i])] =
                BoxTransform{bounds[static_cast<std::size_t>(free_targets[i])]}.to_theta(
                    u[static_cast<Eigen::Index>(i)]);
        }
        return theta;
    }

    static ModelParams params_of(const std::array<double, 9>& theta) {
        return ModelParams{theta[0], theta[1], theta[2], theta[3], theta[4],
                           theta[5], theta[6], std::nullopt};
    }

    IntegratorConfig ode_config() const {
        IntegratorConfig cfg;
        cfg.rel_tol = opts.rel_tol;
        cfg.abs_tol = opts.abs_tol;
        cfg.t_start = data.rows.front().week;
        cfg.t_end = data.rows.back().week;
        for (const auto& row : data.rows) cfg.dense_output_grid.push_back(row.week);
        // Keep integrating through quiet stretches; residuals need every week.
        cfg.converge_field_norm = 0.0;
        return cfg;
    }

    bool simulate(const std::array<double, 9>& theta, Trajectory& traj) const {
        const ModelParams params = params_of(theta);
        const BiomassState init{theta[7], theta[8]};
        try {
            traj = integrate(params, init, ode_config());
        } catch (const std::exception&) {
            return false;
        }
        return traj.times.size() == data.rows.size();
    }

    void fill_residuals(const Trajectory& traj, Eigen::VectorXd& r) const {
        r.resize(static_cast<Eigen::Index>(m()));
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            double mA = traj.states[i].A, mF = traj.states[i].F;
            double dA = data.rows[i].A_mean, dF = data.rows[i].F_mean;
            if (opts.log_loss) {
                mA = std::log10(mA + 1.0);
                dA = std::log10(dA + 1.0);
                mF = std::log10(mF + 1.0);
                dF = std::log10(dF + 1.0);
            }
            r[static_cast<Eigen::Index>(2 * i)] = weights[2 * i] * (mA - dA);
            r[static_cast<Eigen::Index>(2 * i + 1)] = weights[2 * i + 1] * (mF - dF);
        }
    }

    // Residual vector; false when the candidate could not be simulated.
    bool residuals(const std::array<double, 9>& theta, Eigen::VectorXd& r) const {
        Trajectory traj;
        if (!simulate(theta, traj)) return false;
        fill_residuals(traj, r);
        return true;
    }

    // Residuals plus the Jacobian wrt u via forward sensitivities.
    bool residuals_and_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd& r,
                                Eigen::MatrixXd& J) const {
        const std::array<double, 9> theta = assemble(u);
        Trajectory traj;
        if (!simulate(theta, traj)) return false;
        fill_residuals(traj, r);

        const ModelParams params = params_of(theta);
        const BiomassState init{theta[7], theta[8]};
        std::vector<SensitivityTrajectory> sens;
        try {
            sens = forward_sensitivities(params, init, free_targets, ode_config());
        } catch (const std::exception&) {
            return false;
        }

        J.resize(static_cast<Eigen::Index>(m()), static_cast<Eigen::Index>(n_free()));
        for (std::size_t col = 0; col < n_free(); ++col) {
            const auto& s = sens[col];
            const double scale = BoxTransform{bounds[static_cast<std::size_t>(
                                     free_targets[col])]}
                                     .dtheta_du(u[static_cast<Eigen::Index>(col)]);
            for (std::size_t i = 0; i < data.rows.size(); ++i) {
                double gA = s.dA_dtheta[i];
                double gF = s.dF_dtheta[i];
                if (opts.log_loss) {
                    gA /= (traj.states[i].A + 1.0) * kLn10;
                    gF /= (traj.states[i].F + 1.0) * kLn10;
                }
                J(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(col)) =
                    weights[2 * i] * gA * scale;
                J(static_cast<Eigen::Index>(2 * i + 1), static_cast<Eigen::Index>(col)) =
                    weights[2 * i + 1] * gF * scale;
            }
        }
        return true;
    }
};

Problem make_problem(const ObservationSeries& data, const std::array<double, 9>& guess,
                     const std::array<Bounds, 9>& bounds, const FitOptions& opts) {
    data.validate();
    Problem prob{data, bounds, opts, {}, guess, {}};
    for (Target t : kAllTargets) {
        const bool is_init = t == Target::A0 || t == Target::F0;
        if (!is_init || opts.free_initials) {
            prob.free_targets.push_back(t);
        }
    }
    for (Target t : prob.free_targets) {
        const auto idx = static_cast<std::size_t>(t);
        if (!(guess[idx] > bounds[idx].lo) || !(guess[idx] < bounds[idx].hi)) {
            throw std::invalid_argument(std::string("fit: initial guess for ") +
                                        target_name(t) + " is outside its bounds");
        }
    }
    prob.weights.assign(prob.m(), 1.0);
    if (data.has_sd()) {
        for (std::size_t i = 0; i < data.rows.size(); ++i) {
            if (data.rows[i].A_sd > 0.0) prob.weights[2 * i] = 1.0 / data.rows[i].A_sd;
            if (data.rows[i].F_sd > 0.0) prob.weights[2 * i + 1] = 1.0 / data.rows[i].F_sd;
        }
    }
    return prob;
}

FitResult run_fit(const Problem& prob, const std::array<double, 9>& guess) {
    const std::size_t n = prob.n_free();
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(prob.free_targets[i]);
        u[static_cast<Eigen::Index>(i)] = BoxTransform{prob.bounds[idx]}.to_u(guess[idx]);
    }

    FitResult result;
    result.free_mask.fill(false);
    for (Target t : prob.free_targets) result.free_mask[static_cast<std::size_t>(t)] = true;
    result.initial_guess = guess;
    result.bounds = prob.bounds;

    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    if (!prob.residuals_and_jacobian(u, r, J)) {
        result.estimates = guess;
        return result;  // unsimulatable guess: converged=false
    }
    double sse = r.squaredNorm();

    double lambda = 1e-3;
    int accepted = 0;
    bool converged = false;
    while (accepted < prob.opts.max_iterations) {
        const Eigen::VectorXd grad = J.transpose() * r;
        if (grad.norm() < prob.opts.gradient_tol * (1.0 + sse)) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = J.transpose() * J;
        bool stepped = false;
        while (lambda <= 1e12) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index i = 0; i < damped.rows(); ++i) {
                damped(i, i) += lambda * std::max(jtj(i, i), 1e-14);
            }
            Eigen::VectorXd delta = damped.ldlt().solve(-grad);
            // Per-coordinate step cap in the transformed space: oversized
            // steps drive weakly identified parameters toward the boundary of
            // the box, where the transform's vanishing slope freezes them.
            // The cap is applied coordinate-wise so that one runaway
            // coordinate cannot starve the rest of the step.
            for (Eigen::Index i = 0; i < delta.size(); ++i) {
                delta[i] = std::clamp(delta[i], -1.5, 1.5);
            }
            const Eigen::VectorXd u_trial = u + delta;
            Eigen::VectorXd r_trial;
            if (prob.residuals(prob.assemble(u_trial), r_trial) &&
                r_trial.squaredNorm() < sse) {
                u = u_trial;
                if (!prob.residuals_and_jacobian(u, r, J)) break;
                sse = r.squaredNorm();
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                ++accepted;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;  // no descent direction left
    }

    result.iterations = accepted;
    result.converged = converged;
    result.residual_norm = sse;
    result.estimates = prob.assemble(u);

    // Delta-method standard deviations from the covariance in u-space.
    const Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    result.covariance_condition_number =
        (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();

    const std::size_t m = prob.m();
    const bool dof_ok = m > n;
    const bool invertible =
        smin > smax * 1e3 * std::numeric_limits<double>::epsilon() && smin > 0.0;
    if (dof_ok && invertible) {
        const double sigma2 = sse / static_cast<double>(m - n);
        const Eigen::MatrixXd cov = sigma2 * jtj.inverse();
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(prob.free_targets[i]);
            const double scale =
                BoxTransform{prob.bounds[idx]}.dtheta_du(u[static_cast<Eigen::Index>(i)]);
            const double var = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            if (var >= 0.0 && std::isfinite(var)) {
                result.std_devs[idx] = std::sqrt(var) * std::abs(scale);
            }
        }
    }
    return result;
}

}  // namespace

FitResult fit(const ObservationSeries& data, const std::array<double, 9>& initial_guess,
              const std::array<Bounds, 9>& bounds, const FitOptions& opts) {
    const Problem prob = make_problem(data, initial_guess, bounds, opts);
    return run_fit(prob, initial_guess);
}

std::vector<FitResult> multistart_fit(const ObservationSeries& data,
                                      const std::array<double, 9>& initial_guess,
                                      const std::array<Bounds, 9>& bounds,
                                      const FitOptions& opts) {
    const Problem prob = make_problem(data, initial_guess, bounds, opts);
    const std::size_t n = prob.n_free();
    const int count = std::max(opts.multistart, 0);

    std::vector<std::array<double, 9>> guesses{initial_guess};
    std::mt19937_64 rng(opts.seed);

    // Latin hypercube in log space: finite bounds span the whole interval,
    // half-open ones a decade either side of the guess.
    std::vector<std::vector<int>> strata(n, std::vector<int>(count));
    for (std::size_t d = 0; d < n; ++d) {
        std::iota(strata[d].begin(), strata[d].end(), 0);
        std::shuffle(strata[d].begin(), strata[d].end(), rng);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < count; ++s) {
        std::array<double, 9> g = initial_guess;
        for (std::size_t d = 0; d < n; ++d) {
            const auto idx = static_cast<std::size_t>(prob.free_targets[d]);
            const Bounds& bd = bounds[idx];
            double lo, hi;
            if (std::isinf(bd.hi)) {
                lo = std::log(initial_guess[idx] / 10.0);
                hi = std::log(initial_guess[idx] * 10.0);
            } else {
                const double width = bd.hi - bd.lo;
                lo = std::log(bd.lo + 1e-3 * width);
                hi = std::log(bd.hi - 1e-3 * width);
            }
            const double frac = (strata[d][s] + unit(rng)) / count;
            g[idx] = std::exp(lo + frac * (hi - lo));
        }
        guesses.push_back(g);
    }

    std::vector<FitResult> minima;
    for (const auto& g : guesses) {
        FitResult res = run_fit(prob, g);
        if (!res.converged) continue;
        bool duplicate = false;
        for (auto& seen : minima) {
            double rel = 0.0;
            for (Target t : prob.free_targets) {
                const auto idx = static_cast<std::size_t>(t);
                rel = std::max(rel, std::abs(res.estimates[idx] - seen.estimates[idx]) /
                                        std::max(1e-30, std::abs(seen.estimates[idx])));
            }
            if (rel < 1e-3) {
                duplicate = true;
                if (res.residual_norm < seen.residual_norm) seen = res;
                break;
            }
        }
        if (!duplicate) minima.push_back(std::move(res));
    }
    std::sort(minima.begin(), minima.end(), [](const FitResult& x, const FitResult& y) {
        return x.residual_norm < y.residual_norm;
    });
    return minima;
}

std::array<std::optional<IdentFlag>, 9> identifiability_report(const FitResult& fit) {
    if (!fit.converged) {
        throw std::invalid_argument("identifiability_report: fit did not converge");
    }
    std::array<std::optional<IdentFlag>, 9> flags{};
    for (Target t : kAllTargets) {
        const auto idx = static_cast<std::size_t>(t);
        if (!fit.free_mask[idx]) continue;
        if (!fit.std_devs[idx]) {
            flags[idx] = IdentFlag::poorly_identified;
        } else {
            const double rel = *fit.std_devs[idx] / std::abs(fit.estimates[idx]);
            flags[idx] = rel > 10.0 ? IdentFlag::poorly_identified
                                    : IdentFlag::well_identified;
        }
    }
    return flags;
}

std::string format_fit_table(const FitResult& result) {
    std::ostringstream out;
    out << "Parameters  Initial values  Intervals         Estimated values  Standard Deviation\n";
    char buf[256];
    for (Target t : kAllTargets) {
        const auto idx = static_cast<std::size_t>(t);
        const Bounds& bd = result.bounds[idx];
        std::string interval = "(" + (std::ostringstream() << bd.lo).str() + ", " +
                               (std::isinf(bd.hi) ? std::string("inf")
                                                  : (std::ostringstream() << bd.hi).str()) +
                               ")";
        std::string sd = "DNE";
        if (result.free_mask[idx] && result.std_devs[idx]) {
            std::snprintf(buf, sizeof(buf), "%.6g", *result.std_devs[idx]);
            sd = buf;
        }
        std::snprintf(buf, sizeof(buf), "%-10s  %-14.6g  %-16s  %-16.6g  %s\n",
                      target_name(t), result.initial_guess[idx], interval.c_str(),
                      result.estimates[idx], sd.c_str());
        out << buf;
    }
    return out.str();
}

nlohmann::json fit_to_json(const FitResult& result) {
    nlohmann::json targets = nlohmann::json::object();
    for (Target t : kAllTargets) {
        const auto idx = static_cast<std::size_t>(t);
        nlohmann::json entry{
            {"initial", result.initial_guess[idx]},
            {"estimate", result.estimates[idx]},
            {"free", result.free_mask[idx]},
        };
        if (result.std_devs[idx]) {
            entry["std_dev"] = *result.std_devs[idx];
        } else {
            entry["std_dev"] = "DNE";
        }
        targets[target_name(t)] = entry;
    }
    return nlohmann::json{
        {"targets", targets},
        {"residual_norm", result.residual_norm},
        {"iterations", result.iterations},
        {"converged", result.converged},
        {"covariance_condition_number", result.covariance_condition_number},
    };
}

}  // namespace antfungus
