#ifndef RELFLOW_TEST_ORACLES_HPP
#define RELFLOW_TEST_ORACLES_HPP

// Independent reference computations for the test suites. Nothing here may
// call into the closed-form production paths it is used to check.

#include "relflow/types.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <vector>

namespace oracles {

using relflow::ControlSchedule;
using relflow::Mat;
using relflow::Vec;

using state_type = std::vector<double>;

/// Adaptive RKF78 integration of x' = w (a'x + b)_+, segment by segment.
/// The last state entry accumulates the divergence integral, so
/// exp(back) is the flow-map Jacobian determinant along the trajectory.
inline std::pair<Vec, double> integrate_flow(const ControlSchedule& schedule, const Vec& x0,
                                             double t_end, double tol = 1e-12) {
    namespace ode = boost::numeric::odeint;
    const int d = static_cast<int>(x0.size());
    state_type s(d + 1);
    for (int i = 0; i < d; ++i)
        s[i] = x0[i];
    s[d] = 0.0;
    for (const auto& seg : schedule.segments) {
        const double lo = seg.t_start;
        const double hi = std::min(seg.t_end, t_end);
        if (hi <= lo)
            continue;
        auto rhs = [&](const state_type& x, state_type& dxdt, double) {
            double act = seg.b;
            for (int i = 0; i < d; ++i)
                act += seg.a[i] * x[i];
            const double gate = act > 0.0 ? act : 0.0;
            for (int i = 0; i < d; ++i)
                dxdt[i] = seg.w[i] * gate;
            dxdt[d] = act > 0.0 ? seg.w.dot(seg.a) : 0.0;
        };
        auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<state_type>());
        ode::integrate_adaptive(stepper, rhs, s, lo, hi, (hi - lo) / 64.0);
    }
    Vec out(d);
    for (int i = 0; i < d; ++i)
        out[i] = s[i];
    return {out, s[d]};
}

// Closed-form Gaussian references (1D), derived independently:
//   KL(N(m1,s1^2) || N(m2,s2^2)) = log(s2/s1) + (s1^2 + (m1-m2)^2)/(2 s2^2) - 1/2
//   TV(N(m,s), N(m',s)) = 2 (2 Phi(|m-m'|/(2s)) - 1)   (L1 convention)
//   H^2 = 2 (1 - sqrt(2 s1 s2 / (s1^2+s2^2)) exp(-(m1-m2)^2/(4(s1^2+s2^2))))

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double gaussian_kl(double m1, double s1, double m2, double s2) {
    return std::log(s2 / s1) + (s1 * s1 + (m1 - m2) * (m1 - m2)) / (2.0 * s2 * s2) - 0.5;
}

inline double gaussian_tv_equal_var(double m1, double m2, double s) {
    return 2.0 * (2.0 * normal_cdf(std::abs(m1 - m2) / (2.0 * s)) - 1.0);
}

inline double gaussian_hellinger_sq(double m1, double s1, double m2, double s2) {
    const double bc = std::sqrt(2.0 * s1 * s2 / (s1 * s1 + s2 * s2)) *
                      std::exp(-((m1 - m2) * (m1 - m2)) / (4.0 * (s1 * s1 + s2 * s2)));
    return 2.0 * (1.0 - bc);
}

} // namespace oracles

#endif
