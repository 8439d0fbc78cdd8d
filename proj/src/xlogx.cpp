#include "relflow/xlogx.hpp"
#include "relflow/errors.hpp"
#include "relflow/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace relflow {

StretchedExponential StretchedExponential::make(double p) {
    if (!(p > 0.0))
        throw ValidationError("stretched exponential needs p > 0");
    StretchedExponential s;
    s.p = p;
    // integral of exp(-x^p) over [0, X] converges fast; X = max(40, 40^{1/p})
    const double X = std::max(40.0, std::pow(40.0, 1.0 / p));
    const double half = quad::integrate_1d([p](double x) { return std::exp(-std::pow(x, p)); },
                                           0.0, X, 512);
    s.normalization = 1.0 / (2.0 * half);
    return s;
}

double StretchedExponential::pdf(double x) const {
    return normalization * std::exp(-std::pow(std::abs(x), p));
}

double StretchedExponential::log_pdf(double x) const {
    return std::log(normalization) - std::pow(std::abs(x), p);
}

double xlogx_flow(double x, double t) {
    if (x <= 1.0)
        return x;
    return std::pow(x, std::exp(t));
}

namespace {
const StretchedExponential& cached_base(double p) {
    static std::map<double, StretchedExponential> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(p);
    if (it == cache.end())
        it = cache.emplace(p, StretchedExponential::make(p)).first;
    return it->second;
}
} // namespace

double xlogx_log_density(double p, double t, double x) {
    if (t < 0.0)
        throw ValidationError("xlogx density is defined for t >= 0");
    const StretchedExponential& base = cached_base(p);
    if (x < 1.0)
        return base.log_pdf(x);
    // characteristic transport through x -> x^{e^t}: the preimage is
    // x^{1/e^t} and the inverse Jacobian contributes e^{-t} x^{1/e^t - 1}
    const double ei = std::exp(-t);
    return -t + base.log_pdf(std::pow(x, ei)) + (ei - 1.0) * std::log(x);
}

double xlogx_density(double p, double t, double x) {
    return std::exp(xlogx_log_density(p, t, x));
}

TailConversionResult tail_conversion_check(double p, double q, double t) {
    if (!(q > 0.0) || !(p >= q))
        throw ValidationError("tail conversion check needs 0 < q <= p");
    TailConversionResult out;
    out.threshold = std::log(p / q);
    const StretchedExponential target = StretchedExponential::make(q);
    const int n = 160;
    const double x0 = 10.0, x1 = 1e6;
    const double step = std::pow(x1 / x0, 1.0 / (n - 1));
    double x = x0;
    for (int i = 0; i < n; ++i, x *= step) {
        out.xs.push_back(x);
        // monitored ratio: target class over transported density, the
        // quantity whose finite limit certifies the tail conversion
        out.log_ratios.push_back(target.log_pdf(x) - xlogx_log_density(p, t, x));
    }
    // finite-limit proxy: the last 10 grid ratios are nonincreasing (with a
    // small relative slack)
    bool nonincreasing = true;
    for (int i = n - 10; i < n - 1 && nonincreasing; ++i) {
        const double slack = 1e-3 * std::max(1.0, std::abs(out.log_ratios[i]));
        nonincreasing = out.log_ratios[i + 1] <= out.log_ratios[i] + slack;
    }
    out.ratio_limit_finite = nonincreasing;
    return out;
}

} // namespace relflow
