#include "relflow/grid.hpp"
#include "relflow/errors.hpp"
#include "relflow/quadrature.hpp"

#include <cmath>
#include <sstream>

namespace relflow {

namespace {
std::string point_repr(const Vec& x) {
    std::ostringstream os;
    os << "(" << x.transpose() << ")";
    return os.str();
}
} // namespace

int GridDensity::cells_per_axis() const {
    return static_cast<int>(std::ceil(2.0 * radius / spacing - 1e-12));
}

Vec GridDensity::cell_center(const std::vector<int>& index) const {
    Vec c(dim);
    for (int k = 0; k < dim; ++k)
        c[k] = -radius + (index[k] + 0.5) * spacing;
    return c;
}

double GridDensity::eval(const Vec& x) const {
    const int n = cells_per_axis();
    std::size_t flat = 0;
    for (int k = 0; k < dim; ++k) {
        if (x[k] < -radius || x[k] > radius)
            return 0.0;
        int i = static_cast<int>(std::floor((x[k] + radius) / spacing));
        i = std::min(std::max(i, 0), n - 1);
        flat = flat * n + static_cast<std::size_t>(i);
    }
    return values[flat];
}

GridDensity build_grid_interpolant(const Density& rho, double R, double h) {
    if (!(R > 0.0) || !(h > 0.0) || h > 2.0 * R)
        throw ValidationError("grid interpolant needs R > 0 and 0 < h <= 2R");
    GridDensity g;
    g.radius = R;
    g.spacing = h;
    g.dim = rho.dim;
    const int n = g.cells_per_axis();
    std::size_t total = 1;
    for (int k = 0; k < g.dim; ++k)
        total *= static_cast<std::size_t>(n);
    g.values.resize(total);
    std::vector<int> idx(g.dim, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        const Vec c = g.cell_center(idx);
        const double v = rho(c);
        if (!std::isfinite(v))
            throw EvaluationError("density evaluated to a non-finite value", point_repr(c));
        g.values[flat] = v;
        for (int k = g.dim - 1; k >= 0; --k) {
            if (++idx[k] < n)
                break;
            idx[k] = 0;
        }
    }
    return g;
}

std::int64_t switch_budget(double R, double h, int d) {
    if (!(R > 0.0) || !(h > 0.0) || d < 1)
        throw ValidationError("switch_budget needs R, h > 0 and d >= 1");
    const double n = std::ceil(2.0 * R / h - 1e-12);
    const double est = std::pow(n, d) * (d + 10) + 2.0 * d;
    if (!(est < 9.0e18))
        throw BudgetError("switch budget overflows (report as unbounded)", est);
    std::int64_t cells = 1;
    const auto ni = static_cast<std::int64_t>(n);
    for (int k = 0; k < d; ++k) {
        if (cells > (std::int64_t{1} << 62) / std::max<std::int64_t>(ni, 1))
            throw BudgetError("switch budget overflows (report as unbounded)", est);
        cells *= ni;
    }
    return cells * (d + 10) + 2 * d;
}

double grid_l1_gap(const GridDensity& grid, const Density& rho) {
    const int d = grid.dim;
    const double R = grid.radius;
    const Vec lo = Vec::Constant(d, -R);
    const Vec hi = Vec::Constant(d, R);
    const auto f = [&](const Vec& x) { return std::abs(grid.eval(x) - rho(x)); };
    if (d == 1) {
        // align quadrature cells with the grid so the integrand is smooth per cell
        const int n = grid.cells_per_axis();
        std::vector<double> bps;
        for (int i = 1; i < n; ++i)
            bps.push_back(-R + i * grid.spacing);
        return quad::integrate_1d_breakpoints([&](double x) { Vec v(1); v[0] = x; return f(v); },
                                              -R, R, bps, 4);
    }
    const int cells = d == 2 ? std::max(32, 2 * grid.cells_per_axis()) : 32;
    return quad::integrate_box(f, lo, hi, cells, /*mc_seed=*/17, /*mc_samples=*/1 << 17);
}

Truncation select_truncation(const Density& rho_base, const Density& rho_target, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw ValidationError("select_truncation needs 0 < eps < 1");
    const int d = rho_base.dim;
    const int cap = 40;
    double R = 1.0;
    bool mass_ok = false;
    Truncation best{1.0, 1.0};
    for (int it = 0; it < cap; ++it) {
        const Vec lo = Vec::Constant(d, -R);
        const Vec hi = Vec::Constant(d, R);
        const int cells = d == 1 ? 128 : 40;
        const double mb = quad::integrate_box(rho_base.pdf, lo, hi, cells, 17);
        const double mt = quad::integrate_box(rho_target.pdf, lo, hi, cells, 17);
        if (std::min(mb, mt) > 1.0 - eps) {
            mass_ok = true;
            break;
        }
        best.R = R;
        R *= 2.0;
    }
    if (!mass_ok)
        throw SearchExhaustedError("mass condition not reached within iteration cap", R, R);
    best.R = R;
    double h = R;
    for (int it = 0; it < cap; ++it) {
        const GridDensity gb = build_grid_interpolant(rho_base, R, h);
        const GridDensity gt = build_grid_interpolant(rho_target, R, h);
        const double eb = grid_l1_gap(gb, rho_base);
        const double et = grid_l1_gap(gt, rho_target);
        best.h = h;
        if (std::max(eb, et) < eps)
            return Truncation{R, h};
        h *= 0.5;
    }
    throw SearchExhaustedError("interpolation condition not reached within iteration cap",
                               best.R, best.h);
}

} // namespace relflow
