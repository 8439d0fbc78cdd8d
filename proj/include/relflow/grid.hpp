#ifndef RELFLOW_GRID_HPP
#define RELFLOW_GRID_HPP

#include "relflow/density.hpp"
#include "relflow/types.hpp"

#include <cstdint>
#include <vector>

namespace relflow {

/// Piecewise-constant interpolant on a regular grid of [-R, R]^d with cell
/// spacing h; ceil(2R/h) cells per axis, values stored row-major.
struct GridDensity {
    double radius = 1.0;  // R
    double spacing = 1.0; // h
    int dim = 1;
    std::vector<double> values;

    int cells_per_axis() const;
    std::size_t size() const { return values.size(); }
    /// Value of the interpolant (0 outside [-R, R]^d).
    double eval(const Vec& x) const;
    Vec cell_center(const std::vector<int>& index) const;
};

/// Samples the density at cell centers. Throws EvaluationError (with the
/// offending point) on a non-finite density value.
GridDensity build_grid_interpolant(const Density& rho, double R, double h);

/// ceil(2R/h)^d * (d + 10) + 2d, the switch budget of the grid construction.
/// Throws BudgetError on overflow.
std::int64_t switch_budget(double R, double h, int d);

struct Truncation {
    double R = 1.0;
    double h = 1.0;
};

/// Deterministic search for (R, h): R doubles from 1 until both densities
/// carry mass > 1 - eps on [-R, R]^d; h halves from R until both piecewise
/// constant interpolants are within eps of their density in L1 on the box.
/// Iteration caps of 40 each; throws SearchExhaustedError with the best pair.
Truncation select_truncation(const Density& rho_base, const Density& rho_target, double eps);

/// L1 distance between the interpolant and the density over [-R, R]^d,
/// by quadrature aligned with the grid cells.
double grid_l1_gap(const GridDensity& grid, const Density& rho);

} // namespace relflow

#endif
