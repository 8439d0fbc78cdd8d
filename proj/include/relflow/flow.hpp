#ifndef RELFLOW_FLOW_HPP
#define RELFLOW_FLOW_HPP

#include "relflow/gaussian.hpp"
#include "relflow/types.hpp"

namespace relflow {

struct FlowResult {
    Vec point;
    double log_jacobian = 0.0; // log |det of the applied map's gradient|
};

/// exp(t w a') in closed form: I + ((e^{t w'a} - 1) / (w'a)) w a', with the
/// nilpotent limit I + t w a' when w'a = 0.
Mat rank_one_exponential(const Vec& w, const Vec& a, double t);

/// Exact characteristic flow of x' = w (a'x + b)_+ under the schedule,
/// from time 0 to t. Points on or below the switching hyperplane do not move
/// during a segment; active points follow the affine-exponential closed form.
FlowResult flow_forward(const ControlSchedule& schedule, const Vec& x0, double t);

/// Flow restricted to [t_from, t_to] (for group-law composition).
FlowResult flow_forward_between(const ControlSchedule& schedule, const Vec& x0,
                                double t_from, double t_to);

/// Inverse flow: composes exact segment inverses in reverse order.
/// log_jacobian is that of the inverse map.
FlowResult flow_inverse(const ControlSchedule& schedule, const Vec& y, double t);

/// Exact solution of the continuity equation at the schedule end time:
/// each segment splits every piece against its switching hyperplane and maps
/// the active part. Throws ComplexityError beyond piece_cap pieces.
PiecewiseGaussianDensity pushforward_density(const PiecewiseGaussianDensity& initial,
                                             const ControlSchedule& schedule,
                                             std::size_t piece_cap = std::size_t{1} << 20);

/// rho(t, x) by the change-of-variables route: initial density at the inverse
/// flow image times the inverse-map Jacobian. Independent of pushforward_density.
double density_at(const PiecewiseGaussianDensity& initial, const ControlSchedule& schedule,
                  double t, const Vec& x);

/// log rho(t, x) along the same route (usable far into the tails).
double log_density_at(const PiecewiseGaussianDensity& initial, const ControlSchedule& schedule,
                      double t, const Vec& x);

} // namespace relflow

#endif
