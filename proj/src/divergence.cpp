#include "relflow/divergence.hpp"
#include "relflow/errors.hpp"
#include "relflow/quadrature.hpp"
#include "relflow/rng.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace relflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string point_repr(const Vec& x) {
    std::ostringstream os;
    os << "(" << x.transpose() << ")";
    return os.str();
}

double default_halfwidth(const Density& reference, const DomainSpec& dom) {
    if (dom.halfwidth)
        return *dom.halfwidth;
    return coverage_radius(reference.pdf, reference.dim, dom.coverage,
                           std::max(1.0, reference.radius_hint), 16);
}

int default_cells(int dim, const DomainSpec& dom) {
    if (dom.cells_per_axis > 0)
        return dom.cells_per_axis;
    return dim == 1 ? 192 : 40;
}

// Quadrature at two refinement levels (Richardson gap as error bar) or a
// seeded Monte Carlo pass over the same box.
DivergenceEstimate estimate_integral(const ScalarField& integrand, int dim,
                                     double halfwidth, EstimatorMethod method,
                                     std::optional<std::uint64_t> seed, const DomainSpec& dom) {
    DivergenceEstimate out;
    out.method = method;
    const Vec lo = Vec::Constant(dim, -halfwidth);
    const Vec hi = Vec::Constant(dim, halfwidth);
    if (method == EstimatorMethod::quadrature) {
        if (dim >= 3) {
            // quadrature degrades to deterministic MC in high dimension
            double se = 0.0;
            out.value = quad::integrate_box_mc(integrand, lo, hi, dom.mc_samples,
                                               seed.value_or(0), &se);
            out.error_bar = se;
            out.seed = seed.value_or(0);
            return out;
        }
        const int cells = default_cells(dim, dom);
        const double coarse = quad::integrate_box(integrand, lo, hi, cells);
        const double fine = quad::integrate_box(integrand, lo, hi, 2 * cells);
        out.value = fine;
        out.error_bar = std::abs(fine - coarse) + 1e-15;
        return out;
    }
    if (!seed)
        throw ValidationError("monte_carlo estimators require an explicit seed");
    double se = 0.0;
    out.value = quad::integrate_box_mc(integrand, lo, hi, dom.mc_samples, *seed, &se);
    out.error_bar = se;
    out.seed = seed;
    return out;
}

} // namespace

DivergenceEstimate kl(const Density& rho_num, const Density& rho_den,
                      EstimatorMethod method, std::optional<std::uint64_t> seed,
                      const DomainSpec& dom) {
    const double R = default_halfwidth(rho_den, dom);
    auto integrand = [&](const Vec& x) {
        const double pn = rho_num(x);
        if (pn <= 1e-300)
            return 0.0;
        const double log_ratio = std::log(pn) - rho_den.log_at(x);
        if (!std::isfinite(log_ratio) || log_ratio > 690.0)
            throw AbsoluteContinuityError("density ratio overflow in KL integrand",
                                          point_repr(x));
        return pn * log_ratio;
    };
    DivergenceEstimate e = estimate_integral(integrand, rho_num.dim, R, method, seed, dom);
    if (e.value < 0.0 && e.value > -2.0 * e.error_bar - 1e-12)
        e.value = 0.0; // numerical slack around the Gibbs inequality
    return e;
}

DivergenceEstimate tv(const Density& rho1, const Density& rho2,
                      EstimatorMethod method, std::optional<std::uint64_t> seed,
                      const DomainSpec& dom) {
    const double R = std::max(default_halfwidth(rho2, dom), default_halfwidth(rho1, dom));
    auto integrand = [&](const Vec& x) { return std::abs(rho1(x) - rho2(x)); };
    return estimate_integral(integrand, rho1.dim, R, method, seed, dom);
}

DivergenceEstimate hellinger_sq(const Density& rho1, const Density& rho2,
                                EstimatorMethod method, std::optional<std::uint64_t> seed,
                                const DomainSpec& dom) {
    const double R = std::max(default_halfwidth(rho2, dom), default_halfwidth(rho1, dom));
    auto integrand = [&](const Vec& x) {
        const double s = std::sqrt(rho1(x)) - std::sqrt(rho2(x));
        return s * s;
    };
    return estimate_integral(integrand, rho1.dim, R, method, seed, dom);
}

DivergenceEstimate f_divergence(const std::function<double(double)>& f,
                                const Density& rho1, const Density& rho2,
                                EstimatorMethod method, std::optional<std::uint64_t> seed,
                                const DomainSpec& dom) {
    const double R = default_halfwidth(rho2, dom);
    auto integrand = [&](const Vec& x) {
        const double p2 = rho2(x);
        const double p1 = rho1(x);
        if (p2 <= 1e-300) {
            if (p1 <= 1e-300)
                return 0.0;
            throw AbsoluteContinuityError("support violation in f-divergence integrand",
                                          point_repr(x));
        }
        return f(p1 / p2) * p2;
    };
    return estimate_integral(integrand, rho1.dim, R, method, seed, dom);
}

DivergenceEstimate renyi(double lambda, const Density& rho1, const Density& rho2,
                         EstimatorMethod method, std::optional<std::uint64_t> seed,
                         const DomainSpec& dom) {
    if (!(lambda > 0.0) || lambda == 1.0)
        throw ValidationError("renyi order must be positive and != 1");
    auto integrand = [&](const Vec& x) {
        const double l1 = rho1.log_at(x);
        const double l2 = rho2.log_at(x);
        if (!std::isfinite(l2))
            return std::isfinite(l1) ? kInf : 0.0;
        const double le = lambda * l1 + (1.0 - lambda) * l2;
        return std::isfinite(l1) ? std::exp(le) : 0.0;
    };
    // the integral can genuinely diverge for lambda > 1; detect growth by
    // widening the integration box and signal +infinity instead of crashing
    const double R0 = default_halfwidth(rho2, dom);
    DivergenceEstimate inner = estimate_integral(integrand, rho1.dim, R0, method, seed, dom);
    for (int k = 1; k <= 3; ++k) {
        const DivergenceEstimate wider =
            estimate_integral(integrand, rho1.dim, R0 * std::pow(2.0, k), method, seed, dom);
        const bool grew = !std::isfinite(wider.value) ||
                          wider.value > inner.value +
                                        10.0 * (inner.error_bar + wider.error_bar) +
                                        1e-9 * std::abs(inner.value);
        if (!grew) {
            inner = wider;
            break;
        }
        inner = wider;
        if (k == 3 || !std::isfinite(inner.value)) {
            DivergenceEstimate out = inner;
            out.value = kInf;
            out.error_bar = kInf;
            return out;
        }
    }
    DivergenceEstimate out = inner;
    out.value = std::log(std::max(inner.value, 1e-300)) / (lambda - 1.0);
    out.error_bar = inner.error_bar / std::max(inner.value, 1e-300) / std::abs(lambda - 1.0);
    return out;
}

double sup_ratio(const Density& rho_num, const Density& rho_den, const DomainSpec& dom) {
    const int d = rho_num.dim;
    const double R = std::max(default_halfwidth(rho_den, dom), default_halfwidth(rho_num, dom));
    auto log_ratio = [&](const Vec& x) { return rho_num.log_at(x) - rho_den.log_at(x); };

    double best = -kInf;
    // dense grid on the box
    const int grid_n = d == 1 ? 4096 : (d == 2 ? 128 : 0);
    if (grid_n > 0) {
        std::vector<int> idx(d, 0);
        Vec x(d);
        std::size_t total = 1;
        for (int k = 0; k < d; ++k)
            total *= static_cast<std::size_t>(grid_n);
        for (std::size_t flat = 0; flat < total; ++flat) {
            for (int k = 0; k < d; ++k)
                x[k] = -R + (idx[k] + 0.5) * (2.0 * R / grid_n);
            best = std::max(best, log_ratio(x));
            for (int k = d - 1; k >= 0; --k) {
                if (++idx[k] < grid_n)
                    break;
                idx[k] = 0;
            }
        }
    } else {
        Vec x(d);
        for (int i = 0; i < (1 << 14); ++i) {
            for (int k = 0; k < d; ++k)
                x[k] = R * (2.0 * counter_uniform(23, static_cast<std::uint64_t>(i) * d + k) - 1.0);
            best = std::max(best, log_ratio(x));
        }
    }

    // outward ray scan: growth over three consecutive doublings => unbounded
    const int n_dirs = (1 << d) * 64;
    for (int i = 0; i < n_dirs; ++i) {
        Vec u(d);
        if (d == 1)
            u[0] = (i % 2 == 0) ? 1.0 : -1.0;
        else {
            for (int k = 0; k < d; ++k)
                u[k] = counter_normal(31, static_cast<std::uint64_t>(i) * d + k);
            if (u.norm() < 1e-12)
                u.setConstant(1.0);
            u.normalize();
        }
        double prev = log_ratio(R * u);
        int increases = 0;
        for (int j = 1; j <= 15; ++j) {
            const double r = R * std::pow(2.0, j);
            const double cur = log_ratio(r * u);
            if (!std::isfinite(cur) && !std::isfinite(prev))
                break; // both tails underflowed; ray carries no more signal
            if (std::isinf(cur) && cur > 0.0)
                return kInf;
            if (cur > prev + 1e-9) {
                if (++increases >= 3)
                    return kInf;
            } else {
                increases = 0;
            }
            best = std::max(best, cur);
            prev = cur;
        }
    }
    return std::exp(std::max(best, 0.0)); // the essential sup of a ratio of densities is >= 1
}

PinskerCertificates pinsker_certificates(const Density& rho2, const Density& rho1,
                                         const DomainSpec& dom) {
    PinskerCertificates c;
    c.kl_value = kl(rho2, rho1, EstimatorMethod::quadrature, {}, dom).value;
    c.tv_value = tv(rho2, rho1, EstimatorMethod::quadrature, {}, dom).value;
    c.sup_ratio_value = sup_ratio(rho2, rho1, dom);
    const double tol = 1e-9;
    c.pinsker_slack = std::sqrt(std::max(0.0, 2.0 * c.kl_value)) - c.tv_value;
    c.pinsker_ok = c.pinsker_slack >= -tol;
    if (std::isfinite(c.sup_ratio_value)) {
        const double S = c.sup_ratio_value;
        const double factor = S <= 1.0 + 1e-12 ? 0.5 : 0.5 * S * std::log(S) / (S - 1.0);
        c.reverse_applicable = true;
        c.reverse_slack = factor * c.tv_value - c.kl_value;
        c.reverse_pinsker_ok = c.reverse_slack >= -tol;
    }
    return c;
}

std::string divergence_csv_row(const std::string& name, const DivergenceEstimate& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%s,%s", name.c_str(), e.value, e.error_bar,
                  e.method == EstimatorMethod::quadrature ? "quadrature" : "monte_carlo",
                  e.seed ? std::to_string(*e.seed).c_str() : "");
    return std::string(buf);
}

} // namespace relflow
