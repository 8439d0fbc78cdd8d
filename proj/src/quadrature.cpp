#include "relflow/quadrature.hpp"
#include "relflow/errors.hpp"
#include "relflow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace relflow {
namespace quad {

namespace {

// Nodes of the n-point Gauss-Legendre rule by Newton iteration on P_n.
struct GaussLegendre16 {
    std::array<double, 16> x{};
    std::array<double, 16> w{};
    GaussLegendre16() {
        const int n = 16;
        for (int i = 0; i < n / 2; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double p0 = 0, p1 = 0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = t;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-16)
                    break;
            }
            p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            x[i] = -t;
            x[n - 1 - i] = t;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
    }
};

const GaussLegendre16& rule() {
    static const GaussLegendre16 r;
    return r;
}

} // namespace

const std::array<double, 16>& gl_nodes() { return rule().x; }
const std::array<double, 16>& gl_weights() { return rule().w; }

double integrate_1d(const std::function<double(double)>& f, double a, double b, int cells) {
    const auto& xs = gl_nodes();
    const auto& ws = gl_weights();
    const double h = (b - a) / cells;
    double total = 0.0;
    for (int c = 0; c < cells; ++c) {
        const double mid = a + (c + 0.5) * h;
        double s = 0.0;
        for (int q = 0; q < 16; ++q)
            s += ws[q] * f(mid + 0.5 * h * xs[q]);
        total += 0.5 * h * s;
    }
    return total;
}

double integrate_1d_breakpoints(const std::function<double(double)>& f, double a, double b,
                                std::vector<double> breakpoints, int cells_per_span) {
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    double total = 0.0;
    double prev = a;
    for (double t : breakpoints) {
        const double lo = std::max(prev, a), hi = std::min(t, b);
        if (hi > lo + 1e-300)
            total += integrate_1d(f, lo, hi, cells_per_span);
        prev = std::max(prev, t);
        if (prev >= b)
            break;
    }
    return total;
}

double integrate_box_mc(const ScalarField& f, const Vec& lo, const Vec& hi,
                        int samples, std::uint64_t seed, double* std_error) {
    const int d = static_cast<int>(lo.size());
    double vol = 1.0;
    for (int k = 0; k < d; ++k)
        vol *= hi[k] - lo[k];
    double sum = 0.0, sumsq = 0.0;
    Vec x(d);
    for (int i = 0; i < samples; ++i) {
        for (int k = 0; k < d; ++k) {
            const double u = counter_uniform(seed, static_cast<std::uint64_t>(i) * d + k);
            x[k] = lo[k] + u * (hi[k] - lo[k]);
        }
        const double v = f(x);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / samples;
    if (std_error) {
        const double var = std::max(0.0, sumsq / samples - mean * mean);
        *std_error = vol * std::sqrt(var / samples);
    }
    return vol * mean;
}

double integrate_box(const ScalarField& f, const Vec& lo, const Vec& hi,
                     int cells_per_axis, std::uint64_t mc_seed, int mc_samples) {
    const int d = static_cast<int>(lo.size());
    if (d == 1) {
        return integrate_1d([&](double x) { Vec v(1); v[0] = x; return f(v); },
                            lo[0], hi[0], cells_per_axis);
    }
    if (d == 2) {
        const auto& xs = gl_nodes();
        const auto& ws = gl_weights();
        const double hx = (hi[0] - lo[0]) / cells_per_axis;
        const double hy = (hi[1] - lo[1]) / cells_per_axis;
        double total = 0.0;
        Vec p(2);
        for (int cx = 0; cx < cells_per_axis; ++cx) {
            const double mx = lo[0] + (cx + 0.5) * hx;
            for (int cy = 0; cy < cells_per_axis; ++cy) {
                const double my = lo[1] + (cy + 0.5) * hy;
                double s = 0.0;
                for (int qx = 0; qx < 16; ++qx) {
                    p[0] = mx + 0.5 * hx * xs[qx];
                    double row = 0.0;
                    for (int qy = 0; qy < 16; ++qy) {
                        p[1] = my + 0.5 * hy * xs[qy];
                        row += ws[qy] * f(p);
                    }
                    s += ws[qx] * row;
                }
                total += 0.25 * hx * hy * s;
            }
        }
        return total;
    }
    return integrate_box_mc(f, lo, hi, mc_samples, mc_seed, nullptr);
}

} // namespace quad

double coverage_radius(const ScalarField& f, int dim, double coverage,
                       double start, int max_doublings) {
    double R = start;
    for (int it = 0; it < max_doublings; ++it) {
        const Vec lo = Vec::Constant(dim, -R);
        const Vec hi = Vec::Constant(dim, R);
        const int cells = dim == 1 ? 128 : 48;
        const double mass = quad::integrate_box(f, lo, hi, cells);
        if (mass >= coverage)
            return R;
        R *= 2.0;
    }
    return R;
}

} // namespace relflow
