#ifndef RELFLOW_XLOGX_HPP
#define RELFLOW_XLOGX_HPP

#include <vector>

namespace relflow {

/// Normalized density proportional to exp(-|x|^p) on the line. The
/// normalization constant is computed by quadrature once per exponent.
struct StretchedExponential {
    double p = 1.0;
    double normalization = 1.0; // density = normalization * exp(-|x|^p)

    static StretchedExponential make(double p);
    double pdf(double x) const;
    double log_pdf(double x) const;
};

/// Flow of x' = (|x| log x_+)_+ : x^{e^t} for x >= 1, frozen below 1.
/// Defined for all real t.
double xlogx_flow(double x, double t);

/// Closed-form solution of the superlinear transport equation at time t >= 0
/// with initial density proportional to exp(-|x|^p).
double xlogx_density(double p, double t, double x);
double xlogx_log_density(double p, double t, double x);

struct TailConversionResult {
    bool ratio_limit_finite = false;
    double threshold = 0.0; // log(p/q)
    std::vector<double> xs;
    std::vector<double> log_ratios; // log rho_{B,q}(x) - log rho(t,x)
};

/// Monitors the tail-class ratio rho_{B,q} / rho(t, .) on a geometric grid up
/// to 1e6 and reports whether it is eventually nonincreasing (the finite-grid
/// proxy for a finite limit, i.e. the transported density now carries at
/// least a q-class tail): true iff t exceeds log(p/q) up to grid resolution.
TailConversionResult tail_conversion_check(double p, double q, double t);

} // namespace relflow

#endif
