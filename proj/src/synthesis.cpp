#include "relflow/synthesis.hpp"
#include "relflow/divergence.hpp"
#include "relflow/errors.hpp"
#include "relflow/grid.hpp"
#include "relflow/quadrature.hpp"
#include "relflow/rng.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

namespace relflow {

// ---------------------------------------------------------------------------
// Envelope constants
// ---------------------------------------------------------------------------

double envelope_sigma(const PiecewiseGaussianDensity& solution, EnvelopeMode mode) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < solution.pieces().size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(solution.piece_covariance(i));
        if (es.info() != Eigen::Success)
            throw SpectralError("piece covariance eigensolve failed");
        const double mn = es.eigenvalues().minCoeff();
        const double mx = es.eigenvalues().maxCoeff();
        if (!(mn > 0.0) || !std::isfinite(mx))
            throw SpectralError("piece covariance is not positive definite");
        lo = std::min(lo, mn);
        hi = std::max(hi, mx);
    }
    return mode == EnvelopeMode::lower ? std::sqrt(0.5 * lo) : std::sqrt(2.0 * hi);
}

double omega_threshold(int d, double T_stage, double sigma_target, double sigma_env) {
    if (d < 1 || !(T_stage > 0.0) || !(sigma_target > 0.0) || !(sigma_env > 0.0))
        throw ValidationError("omega_threshold needs positive arguments");
    const double v = (2.0 * d / T_stage) * std::log((sigma_target * sigma_target) /
                                                    (sigma_env * sigma_env));
    return v > 0.0 ? 1.05 * v : 1.0;
}

std::vector<ControlSegment> tail_taming_segments(int d, double M_bar, double omega,
                                                 double t0, double t1,
                                                 TailDirection direction) {
    if (!(M_bar > 0.0) || !(omega > 0.0) || !(t1 > t0))
        throw ValidationError("tail taming needs M_bar, omega > 0 and t1 > t0");
    const double tau = (t1 - t0) / (2 * d);
    const double sign = direction == TailDirection::dominate_target ? 1.0 : -1.0;
    std::vector<ControlSegment> segs;
    segs.reserve(2 * d);
    for (int k = 0; k < d; ++k) {
        ControlSegment up;
        up.t_start = t0 + 2 * k * tau;
        up.t_end = up.t_start + tau;
        up.w = sign * omega * Vec::Unit(d, k);
        up.a = Vec::Unit(d, k);
        up.b = -M_bar;
        segs.push_back(up);
        ControlSegment down;
        down.t_start = up.t_end;
        down.t_end = down.t_start + tau;
        down.w = -sign * omega * Vec::Unit(d, k);
        down.a = -Vec::Unit(d, k);
        down.b = -M_bar;
        segs.push_back(down);
    }
    return segs;
}

// ---------------------------------------------------------------------------
// Tail-domination certificate
// ---------------------------------------------------------------------------

namespace {

// Deterministic scan directions: axes and corners first (the tight directions
// of the taming geometry), then counter-seeded unit vectors.
std::vector<Vec> scan_directions(int d, int total) {
    std::vector<Vec> dirs;
    for (int k = 0; k < d; ++k) {
        dirs.push_back(Vec::Unit(d, k));
        dirs.push_back(-Vec::Unit(d, k));
    }
    if (d <= 6) {
        for (int mask = 0; mask < (1 << d); ++mask) {
            Vec u(d);
            for (int k = 0; k < d; ++k)
                u[k] = (mask >> k) & 1 ? 1.0 : -1.0;
            dirs.push_back(u.normalized());
        }
    }
    int i = 0;
    while (static_cast<int>(dirs.size()) < total) {
        Vec u(d);
        for (int k = 0; k < d; ++k)
            u[k] = counter_normal(101, static_cast<std::uint64_t>(i) * d + k);
        ++i;
        if (u.norm() < 1e-12)
            continue;
        dirs.push_back(u.normalized());
    }
    return dirs;
}

} // namespace

TailCertificate certify_tail_domination_detail(const PiecewiseGaussianDensity& result,
                                               const TargetSpec& target,
                                               const TailPlan& plan) {
    const int d = result.dim();
    const bool dominate = plan.direction == TailDirection::dominate_target;
    const int n_dirs = 32;
    std::vector<Vec> dirs;
    {
        int total = 32;
        for (int k = 0; k < d; ++k)
            total *= 4;
        dirs = scan_directions(d, std::min(total, 4096));
    }
    double worst_overall = -std::numeric_limits<double>::infinity();
    double M = std::max(plan.M_bar, target.tail_radius);
    (void)n_dirs;
    for (int doubling = 0; doubling < 30; ++doubling, M *= 2.0) {
        double worst = -std::numeric_limits<double>::infinity();
        bool ok = true;
        for (const Vec& u : dirs) {
            const double r0 = M / std::max(u.lpNorm<Eigen::Infinity>(), 1e-12);
            for (double r = r0 * 1.0001; r <= 8.0 * M / u.lpNorm<Eigen::Infinity>() && ok;
                 r *= 1.09) {
                const Vec x = r * u;
                if (x.lpNorm<Eigen::Infinity>() <= M)
                    continue;
                const double le = gaussian_envelope_log_pdf(target.sigma_bullet, x);
                const double lr = result.log_eval(x);
                const double gap = dominate ? le - lr : lr - le;
                worst = std::max(worst, gap);
                if (gap >= 0.0)
                    ok = false;
            }
            if (!ok)
                break;
        }
        worst_overall = std::max(worst_overall, worst);
        if (ok)
            return TailCertificate{M, std::exp(worst)};
    }
    throw CertificationError("tail domination could not be certified within the radius cap",
                             std::exp(worst_overall));
}

double certify_tail_domination(const PiecewiseGaussianDensity& result,
                               const TargetSpec& target, const TailPlan& plan) {
    return certify_tail_domination_detail(result, target, plan).M_bar_bar;
}

// ---------------------------------------------------------------------------
// 1D transport stage: monotone rearrangement realized by ReLU primitives
// ---------------------------------------------------------------------------

namespace {

struct Cdf1D {
    std::vector<double> xs, Fs;

    static Cdf1D build(const Density& rho, double lo, double hi, int n = 16384) {
        Cdf1D c;
        c.xs.resize(n);
        c.Fs.resize(n);
        const double h = (hi - lo) / (n - 1);
        double acc = 0.0;
        double prev = rho((Vec(1) << lo).finished());
        c.xs[0] = lo;
        c.Fs[0] = 0.0;
        for (int i = 1; i < n; ++i) {
            const double x = lo + i * h;
            const double cur = rho((Vec(1) << x).finished());
            acc += 0.5 * (prev + cur) * h;
            c.xs[i] = x;
            c.Fs[i] = acc;
            prev = cur;
        }
        for (double& f : c.Fs)
            f /= acc;
        return c;
    }

    double value(double x) const {
        if (x <= xs.front())
            return 0.0;
        if (x >= xs.back())
            return 1.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return Fs[i - 1] + t * (Fs[i] - Fs[i - 1]);
    }

    double inverse(double u) const {
        u = std::clamp(u, 0.0, 1.0);
        const auto it = std::lower_bound(Fs.begin(), Fs.end(), u);
        if (it == Fs.begin())
            return xs.front();
        if (it == Fs.end())
            return xs.back();
        const std::size_t i = static_cast<std::size_t>(it - Fs.begin());
        const double df = Fs[i] - Fs[i - 1];
        const double t = df > 0.0 ? (u - Fs[i - 1]) / df : 0.5;
        return xs[i - 1] + t * (xs[i] - xs[i - 1]);
    }
};

/// Increasing piecewise-linear map with knots (xi_j, eta_j), extended
/// affinely beyond the knot range.
struct PiecewiseLinearMap {
    std::vector<double> xi, eta;

    double slope(std::size_t cell) const {
        return (eta[cell + 1] - eta[cell]) / (xi[cell + 1] - xi[cell]);
    }
    std::size_t cell_of(double x, const std::vector<double>& knots) const {
        if (x <= knots.front())
            return 0;
        if (x >= knots.back())
            return knots.size() - 2;
        return static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) -
                                        knots.begin()) - 1;
    }
    double forward(double x) const {
        const std::size_t c = cell_of(x, xi);
        return eta[c] + slope(c) * (x - xi[c]);
    }
    double inverse(double y) const {
        const std::size_t c = cell_of(y, eta);
        return xi[c] + (y - eta[c]) / slope(c);
    }
    /// Density of the pushforward of rho under this map, at y.
    double push_density(const Density& rho, double y) const {
        const std::size_t c = cell_of(y, eta);
        const double x = xi[c] + (y - eta[c]) / slope(c);
        return rho((Vec(1) << x).finished()) / slope(c);
    }
};

struct DilateOp { double pivot; double factor; bool right_side; };
struct TranslateOp { double delta; };
using PrimitiveOp = std::variant<DilateOp, TranslateOp>;

// Decomposes the map into a global affine prefix (two one-sided dilations and
// a translation) followed by one right-dilation per interior knot.
std::vector<PrimitiveOp> decompose_map(const PiecewiseLinearMap& map) {
    std::vector<PrimitiveOp> ops;
    const std::size_t m = map.xi.size();
    const double s0 = map.slope(0);
    ops.push_back(DilateOp{map.xi.front(), s0, true});
    ops.push_back(DilateOp{map.xi.front(), s0, false});
    ops.push_back(TranslateOp{map.eta.front() - map.xi.front()});
    for (std::size_t j = 1; j + 1 < m; ++j) {
        const double factor = map.slope(j) / map.slope(j - 1);
        if (std::abs(std::log(factor)) > 1e-14)
            ops.push_back(DilateOp{map.eta[j], factor, true});
    }
    return ops;
}

ControlSchedule emit_schedule_1d(const std::vector<PrimitiveOp>& ops, double t0, double t1) {
    ControlSchedule sched;
    sched.horizon = t1;
    if (ops.empty()) {
        ControlSegment z;
        z.t_start = t0;
        z.t_end = t1;
        z.w = Vec::Zero(1);
        z.a = Vec::Zero(1);
        z.b = 0.0;
        sched.segments.push_back(z);
        return sched;
    }
    const double tau = (t1 - t0) / ops.size();
    double t = t0;
    for (const PrimitiveOp& op : ops) {
        ControlSegment seg;
        seg.t_start = t;
        seg.t_end = t + tau;
        if (const auto* dil = std::get_if<DilateOp>(&op)) {
            // one-sided exponential dilation about the pivot
            if (dil->right_side) {
                seg.w = (Vec(1) << std::log(dil->factor) / tau).finished();
                seg.a = (Vec(1) << 1.0).finished();
                seg.b = -dil->pivot;
            } else {
                seg.w = (Vec(1) << -std::log(dil->factor) / tau).finished();
                seg.a = (Vec(1) << -1.0).finished();
                seg.b = dil->pivot;
            }
        } else {
            const auto& tr = std::get<TranslateOp>(op);
            seg.w = (Vec(1) << tr.delta / tau).finished();
            seg.a = Vec::Zero(1);
            seg.b = 1.0;
        }
        sched.segments.push_back(seg);
        t += tau;
    }
    sched.segments.back().t_end = t1;
    return sched;
}

} // namespace

ControlSchedule tv_stage_1d(const Density& rho_base, const TargetSpec& target,
                            double eps_tv, double t0, double t1) {
    if (rho_base.dim != 1 || target.density.dim != 1)
        throw ValidationError("tv_stage_1d supports d = 1 only");
    if (!(eps_tv > 0.0) || !(eps_tv < 1.0))
        throw ValidationError("tv_stage_1d needs 0 < eps_tv < 1");

    const Truncation tr = select_truncation(rho_base, target.density, 0.25 * eps_tv);
    const double W = std::max({coverage_radius(rho_base.pdf, 1, 1.0 - 1e-9,
                                               std::max(1.0, rho_base.radius_hint), 12),
                               coverage_radius(target.density.pdf, 1, 1.0 - 1e-9,
                                               std::max(1.0, target.density.radius_hint), 12),
                               tr.R});
    const Cdf1D F_base = Cdf1D::build(rho_base, -W, W);
    const Cdf1D F_target = Cdf1D::build(target.density, -W, W);

    double achieved = std::numeric_limits<double>::infinity();
    for (int refine = 0; refine < 7; ++refine) {
        const double h = tr.h * std::pow(0.5, refine);
        const int n_knots = static_cast<int>(std::ceil(2.0 * tr.R / h)) + 1;

        PiecewiseLinearMap map;
        double last_eta = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n_knots; ++j) {
            const double x = -tr.R + j * (2.0 * tr.R / (n_knots - 1));
            const double y = F_target.inverse(F_base.value(x));
            if (y > last_eta + 1e-10 * (1.0 + std::abs(y))) {
                map.xi.push_back(x);
                map.eta.push_back(y);
                last_eta = y;
            }
        }
        if (map.xi.size() < 2)
            throw BudgetError("degenerate rearrangement map", achieved);

        // identity shortcut
        double dev = 0.0;
        for (std::size_t j = 0; j < map.xi.size(); ++j)
            dev = std::max(dev, std::abs(map.eta[j] - map.xi[j]));
        ControlSchedule sched =
            dev < 1e-12 * (1.0 + tr.R)
                ? emit_schedule_1d({}, t0, t1)
                : emit_schedule_1d(decompose_map(map), t0, t1);

        // realized gap: pushforward density through the map against the target
        std::vector<double> bps = map.eta;
        achieved = quad::integrate_1d_breakpoints(
            [&](double y) {
                return std::abs(map.push_density(rho_base, y) -
                                target.density((Vec(1) << y).finished()));
            },
            -W, W, bps, 6);
        // mass escaping the measured window (both tails), reported honestly
        achieved += 1.0 - F_base.value(map.inverse(W)) + F_base.value(map.inverse(-W));
        achieved += 1.0 - F_target.value(W) + F_target.value(-W);

        if (achieved <= eps_tv) {
            const std::int64_t budget = switch_budget(tr.R, h, 1);
            if (sched.switch_count() > budget)
                throw BudgetError("transport stage exceeded its switch budget", achieved);
            return sched;
        }
    }
    throw BudgetError("transport stage could not reach the requested L1 gap", achieved);
}

// ---------------------------------------------------------------------------
// d >= 2 transport stage: deterministic pattern search (best effort)
// ---------------------------------------------------------------------------

namespace {

struct NdObjective {
    const PiecewiseGaussianDensity& base;
    const Density& target;
    double t_end;
    Mat grid_points; // d x m evaluation grid
    double cell_weight;

    double operator()(const std::vector<ControlSegment>& segs, double t0) const {
        ControlSchedule sched;
        sched.horizon = t_end;
        sched.segments = segs;
        double acc = 0.0;
        for (int i = 0; i < grid_points.cols(); ++i) {
            const Vec x = grid_points.col(i);
            acc += std::abs(density_at(base, sched, t_end, x) - target(x));
        }
        (void)t0;
        return acc * cell_weight;
    }
};

} // namespace

ControlSchedule tv_stage_nd(const PiecewiseGaussianDensity& base, const TargetSpec& target,
                            double eps_tv, double t0, double t1, int budget,
                            std::uint64_t seed) {
    const int d = base.dim();
    if (d < 2)
        throw ValidationError("tv_stage_nd supports d >= 2 only");
    if (budget < 1)
        throw ValidationError("tv_stage_nd needs a positive switch budget");
    const int n_seg = std::min(budget + 1, 12);
    const double tau = (t1 - t0) / n_seg;

    // evaluation grid over a box covering both densities
    const double R = std::max(coverage_radius(base.as_density().pdf, d, 1.0 - 1e-4,
                                              base.coverage_halfwidth(1.0 - 1e-4), 4),
                              coverage_radius(target.density.pdf, d, 1.0 - 1e-4,
                                              std::max(1.0, target.density.radius_hint), 6));
    const int per_axis = d == 2 ? 48 : 12;
    std::size_t m = 1;
    for (int k = 0; k < d; ++k)
        m *= static_cast<std::size_t>(per_axis);
    Mat grid(d, static_cast<int>(m));
    std::vector<int> idx(d, 0);
    for (std::size_t flat = 0; flat < m; ++flat) {
        for (int k = 0; k < d; ++k)
            grid(k, static_cast<int>(flat)) = -R + (idx[k] + 0.5) * (2.0 * R / per_axis);
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[k] < per_axis)
                break;
            idx[k] = 0;
        }
    }
    double cellw = 1.0;
    for (int k = 0; k < d; ++k)
        cellw *= 2.0 * R / per_axis;

    // target mean by quadrature moments, for the translation baseline
    Vec mean_t = Vec::Zero(d);
    for (int i = 0; i < grid.cols(); ++i)
        mean_t += target.density(grid.col(i)) * grid.col(i);
    mean_t *= cellw;
    Vec mean_b = Vec::Zero(d);
    {
        const Density bd = base.as_density();
        for (int i = 0; i < grid.cols(); ++i)
            mean_b += bd(grid.col(i)) * grid.col(i);
        mean_b *= cellw;
    }

    std::vector<ControlSegment> segs(n_seg);
    for (int k = 0; k < n_seg; ++k) {
        segs[k].t_start = t0 + k * tau;
        segs[k].t_end = k + 1 == n_seg ? t1 : t0 + (k + 1) * tau;
        segs[k].w = Vec::Zero(d);
        segs[k].a = Vec::Zero(d);
        segs[k].b = 0.0;
        if (k > 0) {
            // seeded gating directions give the search nontrivial hyperplanes
            for (int q = 0; q < d; ++q)
                segs[k].a[q] = counter_normal(seed, static_cast<std::uint64_t>(k) * d + q);
            segs[k].a.normalize();
            segs[k].b = 0.0;
        }
    }
    // baseline: translate the base mean onto the target mean in segment 0
    segs[0].w = (mean_t - mean_b) / tau;
    segs[0].a = Vec::Zero(d);
    segs[0].b = 1.0;

    NdObjective obj{base, target.density, t1, grid, cellw};
    double best = obj(segs, t0);

    // coordinatewise pattern search, deterministic
    double step = 0.5;
    for (int sweep = 0; sweep < 30 && step > 1e-3; ++sweep) {
        bool improved = false;
        for (int k = 0; k < n_seg; ++k) {
            auto try_param = [&](double* p, double scale) {
                const double orig = *p;
                for (const double delta : {step * scale, -step * scale}) {
                    *p = orig + delta;
                    const double val = obj(segs, t0);
                    if (val < best - 1e-12) {
                        best = val;
                        improved = true;
                        return;
                    }
                    *p = orig;
                }
            };
            for (int q = 0; q < d; ++q)
                try_param(&segs[k].w[q], 1.0 / tau * 0.25);
            for (int q = 0; q < d; ++q)
                try_param(&segs[k].a[q], 1.0);
            try_param(&segs[k].b, std::max(1.0, R * 0.25));
        }
        if (!improved)
            step *= 0.6;
        if (best <= eps_tv * 0.9)
            break;
    }

    ControlSchedule sched;
    sched.horizon = t1;
    sched.segments = std::move(segs);
    sched.validate();
    return sched;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

namespace {

struct EnvelopeFit {
    double M_bar;
    double alpha;
};

// Chooses M_bar (doubling) and the envelope amplitude so that
// alpha exp(-|x|^2 / 2 sigma_env^2) bounds the stage density from the correct
// side everywhere: amplitude fitted on the box, domination checked on rays.
EnvelopeFit fit_envelope(const PiecewiseGaussianDensity& mid, double sigma_env,
                         EnvelopeMode mode, double M_start) {
    const int d = mid.dim();
    const std::vector<Vec> dirs = scan_directions(d, d == 1 ? 2 : 64);
    double M = M_start;
    double worst = 0.0;
    for (int doubling = 0; doubling < 30; ++doubling, M *= 2.0) {
        // amplitude from a grid on the box
        double extreme = mode == EnvelopeMode::lower
                             ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
        const int per_axis = d == 1 ? 1024 : (d == 2 ? 96 : 24);
        std::vector<int> idx(d, 0);
        std::size_t total = 1;
        for (int k = 0; k < d; ++k)
            total *= static_cast<std::size_t>(per_axis);
        Vec x(d);
        for (std::size_t flat = 0; flat < total; ++flat) {
            for (int k = 0; k < d; ++k)
                x[k] = -M + (idx[k] + 0.5) * (2.0 * M / per_axis);
            const double log_ratio =
                mid.log_eval(x) + 0.5 * x.squaredNorm() / (sigma_env * sigma_env);
            extreme = mode == EnvelopeMode::lower ? std::min(extreme, log_ratio)
                                                  : std::max(extreme, log_ratio);
            for (int k = d - 1; k >= 0; --k) {
                if (++idx[k] < per_axis)
                    break;
                idx[k] = 0;
            }
        }
        const double log_alpha =
            mode == EnvelopeMode::lower ? extreme + std::log(0.9) : extreme + std::log(1.1);

        // domination beyond the box
        bool ok = true;
        double local_worst = -std::numeric_limits<double>::infinity();
        for (const Vec& u : dirs) {
            for (double r = M * 1.0001; r <= 16.0 * M && ok; r *= 1.13) {
                const Vec p = r * u;
                const double le = log_alpha - 0.5 * p.squaredNorm() / (sigma_env * sigma_env);
                const double lm = mid.log_eval(p);
                const double gap = mode == EnvelopeMode::lower ? le - lm : lm - le;
                local_worst = std::max(local_worst, gap);
                if (gap >= 0.0)
                    ok = false;
            }
            if (!ok)
                break;
        }
        worst = std::max(worst, local_worst);
        if (ok)
            return EnvelopeFit{M, std::exp(log_alpha)};
    }
    throw CertificationError("envelope fitting failed within the radius cap", std::exp(worst));
}

double box_mass(const PiecewiseGaussianDensity& rho, double halfwidth) {
    const int d = rho.dim();
    if (d == 1)
        return quad::integrate_1d_breakpoints(
            [&](double x) { return rho.eval((Vec(1) << x).finished()); }, -halfwidth,
            halfwidth, rho.breakpoints_1d(), 6);
    return quad::integrate_box([&](const Vec& x) { return rho.eval(x); },
                               Vec::Constant(d, -halfwidth), Vec::Constant(d, halfwidth),
                               d == 2 ? 64 : 32, 5);
}

double box_mass(const Density& rho, double halfwidth) {
    const int d = rho.dim;
    if (d == 1)
        return quad::integrate_1d(
            [&](double x) { return rho((Vec(1) << x).finished()); }, -halfwidth, halfwidth, 256);
    return quad::integrate_box(rho.pdf, Vec::Constant(d, -halfwidth),
                               Vec::Constant(d, halfwidth), d == 2 ? 64 : 32, 5);
}

} // namespace

SynthesisReport synthesize(const Vec& mean_base, const Mat& cov_base, const TargetSpec& target,
                           double eps, double T, Objective objective, std::uint64_t seed) {
    if (!(eps > 0.0) || !(T > 0.0))
        throw ValidationError("synthesize needs eps > 0 and T > 0");
    const int d = static_cast<int>(mean_base.size());
    if (target.density.dim != d)
        throw ValidationError("base and target dimensions differ");
    const bool forward_kl = objective == Objective::kl;
    if (forward_kl && target.mode != TailMode::upper_bounded)
        throw ValidationError("kl objective needs an upper_bounded target tail");
    if (!forward_kl && target.mode != TailMode::lower_bounded)
        throw ValidationError("reverse_kl objective needs a lower_bounded target tail");
    target.validate();

    const PiecewiseGaussianDensity base_pgd = PiecewiseGaussianDensity::gaussian(mean_base, cov_base);
    const Density base_density = gaussian_density(mean_base, cov_base);

    SynthesisReport report;
    report.objective = objective;
    report.horizon = T;
    report.epsilon_request = eps;

    for (int attempt = 0; attempt < 3; ++attempt) {
        const double eps0 = eps / (4 << attempt);
        report.eps_tv_used = eps0;

        ControlSchedule tv_sched;
        if (d == 1) {
            tv_sched = tv_stage_1d(base_density, target, eps0, 0.0, T / 2.0);
        } else {
            const Truncation tr = select_truncation(base_density, target.density,
                                                    std::max(eps0, 0.05));
            const std::int64_t budget =
                std::min<std::int64_t>(switch_budget(tr.R, tr.h, d), 64);
            tv_sched = tv_stage_nd(base_pgd, target, eps0, 0.0, T / 2.0,
                                   static_cast<int>(budget), seed);
        }

        const PiecewiseGaussianDensity mid = pushforward_density(base_pgd, tv_sched);
        const double sigma_env =
            envelope_sigma(mid, forward_kl ? EnvelopeMode::lower : EnvelopeMode::upper);

        // interior box: mass conditions for both densities plus envelope domination
        double M_start = std::max(target.tail_radius, 1.0);
        for (int it = 0; it < 30; ++it) {
            if (box_mass(mid, M_start) > 1.0 - eps0 &&
                box_mass(target.density, M_start) > 1.0 - eps0)
                break;
            M_start *= 2.0;
        }
        const EnvelopeFit fit = fit_envelope(
            mid, sigma_env, forward_kl ? EnvelopeMode::lower : EnvelopeMode::upper, M_start);

        const double omega = forward_kl
                                 ? omega_threshold(d, T, target.sigma_bullet, sigma_env)
                                 : omega_threshold(d, T, sigma_env, target.sigma_bullet);
        const TailDirection direction = forward_kl ? TailDirection::dominate_target
                                                   : TailDirection::dominated_by_target;
        ControlSchedule tail;
        tail.horizon = T;
        tail.segments = tail_taming_segments(d, fit.M_bar, omega, T / 2.0, T, direction);
        const ControlSchedule full = tv_sched.followed_by(tail);
        full.validate();

        ControlSchedule tail_only;
        tail_only.horizon = T;
        tail_only.segments = tail.segments;
        tail_only.segments.insert(tail_only.segments.begin(),
                                  ControlSegment{0.0, T / 2.0, Vec::Zero(d), Vec::Zero(d), 0.0});
        const PiecewiseGaussianDensity result = pushforward_density(mid, tail_only);

        TailPlan plan;
        plan.sigma_env = sigma_env;
        plan.alpha = fit.alpha;
        plan.omega = omega;
        plan.M_bar = fit.M_bar;
        plan.direction = direction;
        const TailCertificate cert = certify_tail_domination_detail(result, target, plan);
        plan.M_bar_bar = cert.M_bar_bar;

        const Density result_density = result.as_density();
        const DivergenceEstimate tv_est = tv(result_density, target.density);
        const DivergenceEstimate kl_est =
            forward_kl ? kl(target.density, result_density)
                       : kl(result_density, target.density);
        const double S = forward_kl ? sup_ratio(target.density, result_density)
                                    : sup_ratio(result_density, target.density);

        report.schedule = full;
        report.switch_count = full.switch_count();
        report.tail_plan = plan;
        report.tv_achieved = tv_est.value;
        report.kl_achieved = kl_est.value;
        report.sup_ratio = S;
        report.reverse_pinsker_bound =
            std::isfinite(S)
                ? (S <= 1.0 + 1e-12 ? 0.5 : 0.5 * S * std::log(S) / (S - 1.0)) * tv_est.value
                : std::numeric_limits<double>::infinity();
        report.interior_gap = d == 1
            ? quad::integrate_1d_breakpoints(
                  [&](double x) {
                      const Vec v = (Vec(1) << x).finished();
                      return std::abs(mid.eval(v) - target.density(v));
                  },
                  -fit.M_bar, fit.M_bar, mid.breakpoints_1d(), 6)
            : quad::integrate_box(
                  [&](const Vec& x) { return std::abs(mid.eval(x) - target.density(x)); },
                  Vec::Constant(d, -fit.M_bar), Vec::Constant(d, fit.M_bar),
                  d == 2 ? 64 : 32, 5);
        report.outer_mass_solution = std::max(0.0, 1.0 - box_mass(result, fit.M_bar));
        report.outer_mass_target = std::max(0.0, 1.0 - box_mass(target.density, fit.M_bar));
        report.within_tolerance = report.kl_achieved <= eps;
        if (report.within_tolerance || d >= 2)
            return report;
    }
    return report;
}

} // namespace relflow
