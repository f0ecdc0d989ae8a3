#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "antfungus/integrate.hpp"
#include "test_support.hpp"

using namespace antfungus;

namespace {

IntegratorConfig window(double t0, double t1) {
    IntegratorConfig cfg;
    cfg.t_start = t0;
    cfg.t_end = t1;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(window(5.0, 5.0).validate(), std::invalid_argument);
    IntegratorConfig bad = window(0.0, 1.0);
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = window(0.0, 1.0);
    bad.dense_output_grid = {0.5, 0.4};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.dense_output_grid = {0.5, 2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    const ModelParams p = testsupport::reference_params();
    CHECK_THROWS_AS(integrate(p, {-0.1, 0.2}, window(0.0, 1.0)), std::invalid_argument);
}

TEST_CASE("dense output grid is hit exactly") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig cfg = window(6.0, 29.0);
    for (int w = 6; w <= 29; ++w) cfg.dense_output_grid.push_back(w);
    const Trajectory traj = integrate(p, {0.05, 0.3}, cfg);
    REQUIRE(traj.times.size() == 24);
    for (int w = 6; w <= 29; ++w) CHECK(traj.times[w - 6] == static_cast<double>(w));
    CHECK(traj.states.front().A == 0.05);
    CHECK(traj.flag == TerminalFlag::reached_horizon);
}

TEST_CASE("adaptive and implicit trapezoidal integrations agree") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig fine = window(0.0, 50.0);
    fine.rel_tol = 1e-12;
    fine.abs_tol = 1e-14;
    fine.dense_output_grid = {50.0};
    const Trajectory ref = integrate(p, {0.05, 0.3}, fine);

    IntegratorConfig trap = window(0.0, 50.0);
    trap.method = Method::implicit_trapezoidal;
    trap.fixed_step = 1e-3;
    trap.dense_output_grid = {50.0};
    const Trajectory other = integrate(p, {0.05, 0.3}, trap);

    REQUIRE(ref.times.size() == 1);
    REQUIRE(other.times.size() == 1);
    CHECK(other.terminal().A ==
          doctest::Approx(ref.terminal().A).epsilon(1e-5));
    CHECK(other.terminal().F ==
          doctest::Approx(ref.terminal().F).epsilon(1e-5));
}

TEST_CASE("tolerance tightening is self-consistent") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig loose = window(6.0, 29.0);
    loose.rel_tol = 1e-6;
    loose.abs_tol = 1e-9;
    loose.dense_output_grid = {29.0};
    IntegratorConfig tight = loose;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const BiomassState a = integrate(p, {0.05, 0.3}, loose).terminal();
    const BiomassState b = integrate(p, {0.05, 0.3}, tight).terminal();
    CHECK(a.A == doctest::Approx(b.A).epsilon(1e-5));
    CHECK(a.F == doctest::Approx(b.F).epsilon(1e-5));
}

TEST_CASE("equilibrium convergence is flagged and stops early") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig cfg = window(0.0, 1e6);
    const Trajectory traj = integrate(p, {0.05, 0.3}, cfg);
    CHECK(traj.flag == TerminalFlag::converged_to_equilibrium);
    CHECK(traj.times.back() < 1e6);
    CHECK(traj.terminal().A == doctest::Approx(testsupport::kRefA2).epsilon(1e-6));
    CHECK(traj.terminal().F == doctest::Approx(testsupport::kRefA2).epsilon(1e-6));
}

TEST_CASE("an effectively empty colony is flagged extinct") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig cfg = window(0.0, 10.0);
    const Trajectory traj = integrate(p, {1e-13, 1e-13}, cfg);
    CHECK(traj.flag == TerminalFlag::extinct);
    CHECK(traj.times.back() <= 10.0);
}

TEST_CASE("states never leave the nonnegative quadrant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelParams p = testsupport::random_bistable_params(rng);
        const AttractingBox box = attracting_box(p);
        const BiomassState init{unit(rng) * box.A_max, unit(rng) * box.F_max};
        const Trajectory traj = integrate(p, init, window(0.0, 200.0));
        for (const BiomassState& s : traj.states) {
            CHECK(s.A >= 0.0);
            CHECK(s.F >= 0.0);
        }
    }
}

TEST_CASE("limit classification for the reference set") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig cfg = window(0.0, 1e8);
    CHECK(classify_limit(p, {0.05, 0.3}, cfg) == AttractorLabel::interior);
    // tiny colony in the extinction region
    CHECK(classify_limit(p, {0.001, 0.0005}, cfg) == AttractorLabel::origin);
    // short horizon leaves the slow decay undecided
    CHECK(classify_limit(p, {0.001, 0.0005}, window(0.0, 10.0)) ==
          AttractorLabel::undecided);
}

TEST_CASE("trajectory csv round-trips at full precision") {
    const ModelParams p = testsupport::reference_params();
    IntegratorConfig cfg = window(6.0, 12.0);
    const Trajectory traj = integrate(p, {0.05, 0.3}, cfg);
    std::ostringstream out;
    write_trajectory_csv(out, traj);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,A,F");
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::string line;
        REQUIRE(std::getline(in, line));
        double t, A, F;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &A, &F) == 3);
        CHECK(t == traj.times[i]);
        CHECK(A == traj.states[i].A);
        CHECK(F == traj.states[i].F);
    }
}
