// Command-line front end: simulate, equilibria, basin, sense, fit.
// Exit codes: 0 success, 2 precondition error, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "antfungus/basin.hpp"
#include "antfungus/equilibria.hpp"
#include "antfungus/estimation.hpp"
#include "antfungus/integrate.hpp"
#include "antfungus/model.hpp"
#include "antfungus/rk45.hpp"
#include "antfungus/sensitivity.hpp"

namespace {

using namespace antfungus;

constexpr int kExitOk = 0;
constexpr int kExitPrecondition = 2;
constexpr int kExitNumerical = 3;

nlohmann::json params_json(const ModelParams& p) {
    nlohmann::json j{{"r_a", p.r_a}, {"r_f", p.r_f}, {"r_c", p.r_c}, {"d_a", p.d_a},
                     {"d_f", p.d_f}, {"b", p.b},     {"a", p.a}};
    if (p.labor) {
        j["p"] = p.labor->p;
        j["q"] = p.labor->q;
    }
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

std::string derived_csv(const Trajectory& traj) {
    std::string out = "t,log10A1,log10F1,ratio\n";
    char buf[128];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double la = std::log10(traj.states[i].A + 1.0);
        const double lf = std::log10(traj.states[i].F + 1.0);
        if (lf == 0.0) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,\n", traj.times[i], la, lf);
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", traj.times[i], la,
                          lf, la / lf);
        }
        out += buf;
    }
    return out;
}

const char* flag_name(TerminalFlag f) {
    switch (f) {
        case TerminalFlag::reached_horizon: return "reached_horizon";
        case TerminalFlag::converged_to_equilibrium: return "converged_to_equilibrium";
        case TerminalFlag::extinct: return "extinct";
    }
    return "?";
}

struct CommonArgs {
    std::string params_path;
    std::string out_dir;
    double t0 = 0.0;
    double t1 = 0.0;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double A0 = 0.0;
    double F0 = 0.0;
};

int run_simulate(const CommonArgs& args) {
    const ModelParams params = read_params_file(args.params_path);
    IntegratorConfig cfg;
    cfg.t_start = args.t0;
    cfg.t_end = args.t1;
    cfg.rel_tol = args.rel_tol;
    cfg.abs_tol = args.abs_tol;
    cfg.validate();

    const auto dir = prepare_out_dir(args.out_dir);
    Trajectory traj;
    bool partial = false;
    std::string failure;
    try {
        traj = integrate(params, {args.A0, args.F0}, cfg);
    } catch (const IntegrationError& e) {
        traj = e.partial;
        partial = true;
        failure = e.what();
    }

    {
        std::ofstream out(dir / "trajectory.csv", std::ios::binary);
        write_trajectory_csv(out, traj);
    }
    write_text(dir / "derived.csv", derived_csv(traj));
    nlohmann::json meta{{"command", "simulate"},
                        {"params", params_json(params)},
                        {"initial", {{"A", args.A0}, {"F", args.F0}}},
                        {"t0", args.t0},
                        {"t1", args.t1},
                        {"rel_tol", args.rel_tol},
                        {"abs_tol", args.abs_tol},
                        {"terminal_flag", flag_name(traj.flag)},
                        {"partial", partial}};
    if (partial) meta["error"] = failure;
    write_json(dir / "metadata.json", meta);
    if (partial) {
        std::cerr << "integration failed, partial outputs written: " << failure << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int run_equilibria(const CommonArgs& args) {
    const ModelParams params = read_params_file(args.params_path);
    const auto dir = prepare_out_dir(args.out_dir);
    nlohmann::json j = report_to_json(equilibria(params));
    j["params"] = params_json(params);
    write_json(dir / "equilibria.json", j);
    return kExitOk;
}

struct BasinArgs {
    CommonArgs common;
    std::string grid_spec = "100x100";
    double A_min = 0.0, A_max = 0.0;
    double F_min = 0.0, F_max = 0.0;
};

int run_basin(const BasinArgs& args) {
    const ModelParams params = read_params_file(args.common.params_path);

    BasinGrid grid;
    if (std::sscanf(args.grid_spec.c_str(), "%dx%d", &grid.nA, &grid.nF) != 2) {
        throw std::invalid_argument("--grid expects the form AxB, e.g. 100x100");
    }
    grid.A_min = args.A_min;
    grid.F_min = args.F_min;
    grid.A_max = args.A_max;
    grid.F_max = args.F_max;
    if (grid.A_max == 0.0 || grid.F_max == 0.0) {
        const AttractingBox box = attracting_box(params);
        if (grid.A_max == 0.0) grid.A_max = box.A_max;
        if (grid.F_max == 0.0) grid.F_max = box.F_max;
    }
    grid.validate();

    IntegratorConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = args.common.t1 > 0.0 ? args.common.t1 : 1e4;
    cfg.rel_tol = args.common.rel_tol;
    cfg.abs_tol = args.common.abs_tol;
    cfg.dense_output_grid = {cfg.t_end};

    const BasinMap map = map_basins(params, grid, cfg);
    const auto dir = prepare_out_dir(args.common.out_dir);
    {
        std::ofstream out(dir / "basin.csv", std::ios::binary);
        write_basin_csv(out, map);
    }
    nlohmann::json side = basin_sidecar_json(map);
    side["params"] = params_json(params);
    side["horizon"] = cfg.t_end;
    write_json(dir / "basin.json", side);
    return kExitOk;
}

struct SenseArgs {
    CommonArgs common;
    std::vector<std::string> targets;
};

int run_sense(const SenseArgs& args) {
    const ModelParams params = read_params_file(args.common.params_path);
    std::vector<Target> targets;
    if (args.targets.empty()) {
        targets.assign(kAllTargets.begin(), kAllTargets.end());
    } else {
        for (const auto& name : args.targets) {
            bool found = false;
            for (Target t : kAllTargets) {
                if (name == target_name(t)) {
                    targets.push_back(t);
                    found = true;
                    break;
                }
            }
            if (!found) throw std::invalid_argument("unknown sensitivity target: " + name);
        }
    }

    IntegratorConfig cfg;
    cfg.t_start = args.common.t0;
    cfg.t_end = args.common.t1;
    cfg.rel_tol = args.common.rel_tol;
    cfg.abs_tol = args.common.abs_tol;
    cfg.converge_field_norm = 0.0;  // always run to the horizon
    cfg.validate();

    const BiomassState init{args.common.A0, args.common.F0};
    const auto results = forward_sensitivities(params, init, targets, cfg);
    const auto dir = prepare_out_dir(args.common.out_dir);
    for (const auto& traj : results) {
        std::ofstream out(dir / ("sensitivity_" + std::string(target_name(traj.target)) +
                                 ".csv"),
                          std::ios::binary);
        write_sensitivity_csv(out, traj);
    }
    nlohmann::json j = sensitivity_summary_json(results, params, init);
    j["params"] = params_json(params);
    j["initial"] = {{"A", init.A}, {"F", init.F}};
    write_json(dir / "sensitivity.json", j);
    return kExitOk;
}

struct FitArgs {
    CommonArgs common;
    std::string data_path;
    int multistart = 8;
    std::uint64_t seed = 0;
    bool free_initials = false;
};

int run_fit(const FitArgs& args) {
    const ModelParams params = read_params_file(args.common.params_path);
    const ObservationSeries data = ObservationSeries::read_csv_file(args.data_path);

    std::array<double, 9> guess{params.r_a, params.r_f, params.r_c, params.d_a,
                                params.d_f, params.b,   params.a,   args.common.A0,
                                args.common.F0};
    if (guess[7] <= 0.0) guess[7] = data.rows.front().A_mean;
    if (guess[8] <= 0.0) guess[8] = data.rows.front().F_mean;

    FitOptions opts;
    opts.multistart = args.multistart;
    opts.seed = args.seed;
    opts.free_initials = args.free_initials;

    const auto fits = multistart_fit(data, guess, default_bounds(), opts);
    if (fits.empty()) {
        std::cerr << "no multistart candidate could be evaluated\n";
        return kExitNumerical;
    }
    const FitResult& best = fits.front();

    const auto dir = prepare_out_dir(args.common.out_dir);
    nlohmann::json j = fit_to_json(best);
    j["params"] = params_json(params);
    j["data"] = args.data_path;
    j["multistart"] = args.multistart;
    j["seed"] = args.seed;
    j["candidates"] = fits.size();
    write_json(dir / "fit.json", j);
    write_text(dir / "fit_table.txt", format_fit_table(best));
    std::cout << format_fit_table(best);
    if (!best.converged) {
        std::cerr << "fit did not converge\n";
        return kExitNumerical;
    }
    return kExitOk;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_window, bool needs_init) {
    cmd->add_option("--params", args.params_path, "key=value parameter file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--tol-rel", args.rel_tol, "relative integration tolerance");
    cmd->add_option("--tol-abs", args.abs_tol, "absolute integration tolerance");
    if (needs_window) {
        cmd->add_option("--t0", args.t0, "window start [weeks]");
        cmd->add_option("--t1", args.t1, "window end [weeks]")->required();
    }
    if (needs_init) {
        cmd->add_option("--A0", args.A0, "initial ant biomass")->required();
        cmd->add_option("--F0", args.F0, "initial fungus biomass")->required();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical workbench for a two-species ant/fungus mutualism model"};
    app.require_subcommand(1);

    CommonArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "integrate a trajectory and derived series");
    add_common(sim, sim_args, true, true);

    CommonArgs eq_args;
    auto* eq = app.add_subcommand("equilibria", "closed-form equilibria and stability");
    add_common(eq, eq_args, false, false);

    BasinArgs basin_args;
    auto* basin = app.add_subcommand("basin", "basin-of-attraction grid map");
    add_common(basin, basin_args.common, false, false);
    basin->add_option("--grid", basin_args.grid_spec, "grid resolution AxB");
    basin->add_option("--t1", basin_args.common.t1, "classification horizon");
    basin->add_option("--A-min", basin_args.A_min, "grid lower A bound");
    basin->add_option("--A-max", basin_args.A_max, "grid upper A bound (default: attracting box)");
    basin->add_option("--F-min", basin_args.F_min, "grid lower F bound");
    basin->add_option("--F-max", basin_args.F_max, "grid upper F bound (default: attracting box)");

    SenseArgs sense_args;
    auto* sense = app.add_subcommand("sense", "forward sensitivity trajectories");
    add_common(sense, sense_args.common, true, true);
    sense->add_option("--targets", sense_args.targets,
                      "subset of r_a r_f r_c d_a d_f b a A0 F0 (default: all)");

    FitArgs fit_args;
    auto* fitc = app.add_subcommand("fit", "least-squares parameter estimation");
    add_common(fitc, fit_args.common, false, false);
    fitc->add_option("--data", fit_args.data_path, "observation CSV")
        ->required()
        ->check(CLI::ExistingFile);
    fitc->add_option("--multistart", fit_args.multistart, "number of multistart points");
    fitc->add_option("--seed", fit_args.seed, "multistart RNG seed");
    fitc->add_flag("--free-initials", fit_args.free_initials,
                   "estimate A0/F0 alongside the parameters");
    fitc->add_option("--A0", fit_args.common.A0, "initial-state guess (default: first row)");
    fitc->add_option("--F0", fit_args.common.F0, "initial-state guess (default: first row)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitPrecondition;
    }

    try {
        if (*sim) return run_simulate(sim_args);
        if (*eq) return run_equilibria(eq_args);
        if (*basin) return run_basin(basin_args);
        if (*sense) return run_sense(sense_args);
        if (*fitc) return run_fit(fit_args);
    } catch (const RegimeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const IntegrationError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitPrecondition;
}
