#include "relflow/errors.hpp"
#include "relflow/gaussian.hpp"
#include "relflow/grid.hpp"
#include "relflow/json_io.hpp"
#include "relflow/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace relflow;

namespace {
Density std_normal_1d() {
    return gaussian_density(Vec::Zero(1), Mat::Identity(1, 1));
}
} // namespace

TEST_CASE("grid interpolant: constant density") {
    Density c;
    c.dim = 1;
    c.pdf = [](const Vec&) { return 0.7; };
    const GridDensity g = build_grid_interpolant(c, 1.0, 1.0);
    CHECK(g.cells_per_axis() == 2);
    CHECK(g.values.size() == 2);
    CHECK(g.values[0] == doctest::Approx(0.7));
    CHECK(g.values[1] == doctest::Approx(0.7));
}

TEST_CASE("grid interpolant: standard normal symmetry") {
    const GridDensity g = build_grid_interpolant(std_normal_1d(), 4.0, 0.5);
    REQUIRE(g.cells_per_axis() == 16);
    for (int i = 0; i < 8; ++i)
        CHECK(g.values[i] == doctest::Approx(g.values[15 - i]).epsilon(1e-12));
}

TEST_CASE("grid interpolant: L1 gap shrinks with the spacing") {
    const Density rho = std_normal_1d();
    const GridDensity fine = build_grid_interpolant(rho, 4.0, 0.1);
    CHECK(grid_l1_gap(fine, rho) < 0.01);

    double prev = 1e9;
    for (double h : {1.0, 0.5, 0.25, 0.125}) {
        const double gap = grid_l1_gap(build_grid_interpolant(rho, 4.0, h), rho);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("grid interpolant: non-finite density is reported with the point") {
    Density bad;
    bad.dim = 1;
    bad.pdf = [](const Vec& x) { return x[0] > 0 ? 1.0 / 0.0 : 1.0; };
    CHECK_THROWS_AS(build_grid_interpolant(bad, 1.0, 1.0), EvaluationError);
}

TEST_CASE("switch budget values") {
    CHECK(switch_budget(1.0, 2.0, 1) == 13);
    CHECK(switch_budget(4.0, 0.5, 2) == 3076);
    CHECK(switch_budget(4.0, 0.5, 1) == 178);
    CHECK_THROWS_AS(switch_budget(1e6, 1e-6, 8), BudgetError);
}

TEST_CASE("switch budget monotonicity") {
    // nonincreasing in h, nondecreasing in R and d
    for (double h : {2.0, 1.0, 0.5, 0.25}) {
        CHECK(switch_budget(4.0, h, 2) <= switch_budget(4.0, h / 2.0, 2));
        CHECK(switch_budget(2.0, h, 2) <= switch_budget(4.0, h, 2));
        CHECK(switch_budget(4.0, h, 1) <= switch_budget(4.0, h, 2));
    }
}

TEST_CASE("select_truncation on matching normals") {
    const Density rho = std_normal_1d();
    const Truncation tr = select_truncation(rho, rho, 0.1);
    // first doubling with mass > 0.9 on [-R, R]
    CHECK(tr.R == doctest::Approx(2.0));
    CHECK(tr.h <= tr.R);
}

TEST_CASE("select_truncation on compactly supported density") {
    const Density u = uniform_density(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
    const Truncation tr = select_truncation(u, u, 0.5);
    CHECK(tr.R == doctest::Approx(1.0));
}

TEST_CASE("select_truncation exhausts for absurd tolerances") {
    const Density rho = std_normal_1d();
    CHECK_THROWS_AS(select_truncation(rho, rho, 1e-30), SearchExhaustedError);
}

TEST_CASE("piecewise gaussian partition and mass") {
    // split the standard normal at x = 0.3 by hand
    Halfspace left{(Vec(1) << 1.0).finished(), -0.3, false};
    Halfspace right{(Vec(1) << 1.0).finished(), -0.3, true};
    GaussianPiece a{1.0, Mat::Identity(1, 1), Vec::Zero(1), Polyhedron{{left}}};
    GaussianPiece b{1.0, Mat::Identity(1, 1), Vec::Zero(1), Polyhedron{{right}}};
    const PiecewiseGaussianDensity rho(Vec::Zero(1), Mat::Identity(1, 1), {a, b});
    CHECK(rho.partition_violations() == 0);
    CHECK(rho.mass() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rho.eval((Vec(1) << 0.3).finished()) > 0.0);
}

TEST_CASE("polyhedron feasibility") {
    const Vec e1 = Vec::Unit(2, 0);
    const Vec e2 = Vec::Unit(2, 1);
    Polyhedron box;
    box.faces = {Halfspace{e1, 0.0, true}, Halfspace{-e1, 1.0, false},
                 Halfspace{e2, 0.0, true}};
    CHECK(polyhedron_nonempty(box, 2));
    Polyhedron empty;
    empty.faces = {Halfspace{e1, 0.0, true}, Halfspace{e1, 1.0, false}};
    CHECK_FALSE(polyhedron_nonempty(empty, 2));
}

TEST_CASE("schedule json round trip") {
    ControlSchedule s = ControlSchedule::identity(2, 1.0);
    s.segments[0].w = (Vec(2) << 1.0, -2.0).finished();
    s.segments[0].a = (Vec(2) << 0.5, 0.0).finished();
    s.segments[0].b = 0.25;
    const Json j = schedule_to_json(s);
    const ControlSchedule back = schedule_from_json(j);
    CHECK(back.horizon == s.horizon);
    CHECK(back.segments[0].w[1] == -2.0);
    CHECK(back.segments[0].b == 0.25);
    Json bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(schedule_from_json(bad), ValidationError);
}

TEST_CASE("grid json round trip") {
    const GridDensity g = build_grid_interpolant(std_normal_1d(), 2.0, 0.5);
    const GridDensity back = grid_from_json(grid_to_json(g));
    CHECK(back.values == g.values);
    CHECK(back.radius == g.radius);
}
