#ifndef RELFLOW_QUADRATURE_HPP
#define RELFLOW_QUADRATURE_HPP

#include "relflow/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace relflow {

using ScalarField = std::function<double(const Vec&)>;

namespace quad {

/// Nodes/weights of the 16-point Gauss-Legendre rule on [-1, 1].
const std::array<double, 16>& gl_nodes();
const std::array<double, 16>& gl_weights();

/// Composite 16-point Gauss-Legendre over [a,b] with `cells` equal cells.
double integrate_1d(const std::function<double(double)>& f, double a, double b, int cells = 64);

/// As integrate_1d, but cells are aligned with the given interior breakpoints
/// (jump locations of the integrand) and each smooth span is subdivided.
double integrate_1d_breakpoints(const std::function<double(double)>& f, double a, double b,
                                std::vector<double> breakpoints, int cells_per_span = 8);

/// Integral of f over the box [lo, hi]. Tensor Gauss-Legendre in d <= 2,
/// counter-seeded Monte Carlo in d >= 3 (deterministic for a fixed seed).
double integrate_box(const ScalarField& f, const Vec& lo, const Vec& hi,
                     int cells_per_axis = 32, std::uint64_t mc_seed = 0,
                     int mc_samples = 1 << 16);

/// Plain Monte Carlo over the box with counter-based uniforms.
double integrate_box_mc(const ScalarField& f, const Vec& lo, const Vec& hi,
                        int samples, std::uint64_t seed, double* std_error = nullptr);

} // namespace quad

/// Smallest box half-width R (over a doubling scan from `start`) such that the
/// integral of f over [-R, R]^dim reaches `coverage`. Returns the last R tried
/// if the scan tops out.
double coverage_radius(const ScalarField& f, int dim, double coverage,
                       double start = 1.0, int max_doublings = 24);

} // namespace relflow

#endif
