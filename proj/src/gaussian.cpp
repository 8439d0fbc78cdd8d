#include "relflow/gaussian.hpp"
#include "relflow/errors.hpp"
#include "relflow/quadrature.hpp"
#include "relflow/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace relflow {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// ---------------------------------------------------------------------------
// Feasibility LP: maximize the worst face margin t over a large box. The
// region is reported nonempty iff the optimum is strictly positive. Closed
// faces that can only be satisfied with equality give t* = 0, which we keep
// conservatively (never drop a possibly nonempty piece).
// ---------------------------------------------------------------------------

class MarginSimplex {
public:
    // rows: normalized (a, b, open); maximize t s.t. margins >= t inside box.
    static double max_margin(const std::vector<Halfspace>& faces, int d) {
        const double kBox = 1e8;
        double bmax = 1.0;
        for (const auto& f : faces)
            bmax = std::max(bmax, std::abs(f.b));
        const double T0 = 1.0 + 2.0 * bmax;

        const int nstruct = 2 * d + 1; // x+, x-, s  (t = s - T0)
        const int m = static_cast<int>(faces.size()) + 1 + 2 * d;
        const int n = nstruct + m;
        Mat T = Mat::Zero(m + 1, n + 1);

        int row = 0;
        for (const auto& f : faces) {
            const double sgn = f.positive_open ? -1.0 : 1.0;
            for (int k = 0; k < d; ++k) {
                T(row, k) = sgn * f.a[k];
                T(row, d + k) = -sgn * f.a[k];
            }
            T(row, 2 * d) = 1.0;
            T(row, n) = (f.positive_open ? f.b : -f.b) + T0;
            ++row;
        }
        T(row, 2 * d) = 1.0;
        T(row, n) = 1.0 + T0;
        ++row;
        for (int k = 0; k < 2 * d; ++k) {
            T(row, k) = 1.0;
            T(row, n) = kBox;
            ++row;
        }
        for (int i = 0; i < m; ++i)
            T(i, nstruct + i) = 1.0;
        T(m, 2 * d) = -1.0; // maximize s: row holds -c

        std::vector<int> basis(m);
        for (int i = 0; i < m; ++i)
            basis[i] = nstruct + i;

        const double eps = 1e-11;
        for (int iter = 0; iter < 4000; ++iter) {
            int enter = -1;
            for (int j = 0; j < n; ++j)
                if (T(m, j) < -eps) { enter = j; break; } // Bland
            if (enter < 0)
                break;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > eps) {
                    const double ratio = T(i, n) / T(i, enter);
                    if (ratio < best - eps || (ratio < best + eps &&
                        (leave < 0 || basis[i] < basis[leave]))) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0)
                break; // unbounded (cannot happen: s is capped); bail out
            const double piv = T(leave, enter);
            T.row(leave) /= piv;
            for (int i = 0; i <= m; ++i)
                if (i != leave && std::abs(T(i, enter)) > 0.0)
                    T.row(i) -= T(i, enter) * T.row(leave);
            basis[leave] = enter;
        }
        return T(m, n) - T0;
    }
};

} // namespace

bool polyhedron_nonempty(const Polyhedron& poly, int dim) {
    std::vector<Halfspace> faces;
    faces.reserve(poly.faces.size());
    for (const Halfspace& f : poly.faces) {
        const double na = f.a.norm();
        if (na < 1e-300) {
            // constant face
            const bool ok = f.positive_open ? (f.b > 0.0) : (f.b <= 0.0);
            if (!ok)
                return false;
            continue;
        }
        Halfspace g = f;
        g.a /= na;
        g.b /= na;
        faces.push_back(std::move(g));
    }
    if (faces.empty())
        return true;
    if (dim == 1) {
        // exact interval intersection
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        bool lo_open = false, hi_open = false;
        for (const auto& f : faces) {
            const double boundary = -f.b / f.a[0];
            const bool lower = (f.a[0] > 0.0) == f.positive_open;
            const bool open = f.positive_open;
            if (lower) {
                if (boundary > lo || (boundary == lo && open)) { lo = boundary; lo_open = open; }
            } else {
                if (boundary < hi || (boundary == hi && open)) { hi = boundary; hi_open = open; }
            }
        }
        if (lo > hi) return false;
        if (lo == hi) return !(lo_open || hi_open);
        return true;
    }
    const double margin = MarginSimplex::max_margin(faces, dim);
    return margin > -1e-9;
}

// ---------------------------------------------------------------------------
// PiecewiseGaussianDensity
// ---------------------------------------------------------------------------

PiecewiseGaussianDensity::PiecewiseGaussianDensity(Vec mean_base, Mat cov_base,
                                                   std::vector<GaussianPiece> pieces)
    : mean_base_(std::move(mean_base)), cov_base_(std::move(cov_base)),
      pieces_(std::move(pieces)) {
    const int d = dim();
    Eigen::LLT<Mat> llt(0.5 * (cov_base_ + cov_base_.transpose()));
    if (llt.info() != Eigen::Success)
        throw SpectralError("base covariance is not positive definite");
    cov_chol_lower_ = llt.matrixL();
    double logdet = 0.0;
    for (int i = 0; i < d; ++i)
        logdet += 2.0 * std::log(cov_chol_lower_(i, i));
    log_norm_ = -0.5 * (d * kLog2Pi + logdet);
    for (const GaussianPiece& p : pieces_) {
        if (!(p.amplitude > 0.0))
            throw ValidationError("piece amplitude must be positive");
        if (p.lin.rows() != d || p.lin.cols() != d || p.shift.size() != d)
            throw ValidationError("piece has inconsistent dimensions");
        if (std::abs(p.lin.determinant()) < 1e-300)
            throw ValidationError("piece matrix is singular");
    }
    if (d == 1)
        build_interval_index();
}

PiecewiseGaussianDensity PiecewiseGaussianDensity::gaussian(const Vec& mean, const Mat& cov) {
    GaussianPiece p;
    p.amplitude = 1.0;
    p.lin = Mat::Identity(mean.size(), mean.size());
    p.shift = Vec::Zero(mean.size());
    return PiecewiseGaussianDensity(mean, cov, {p});
}

void PiecewiseGaussianDensity::build_interval_index() {
    interval_index_.clear();
    interval_index_.reserve(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        double lo = -std::numeric_limits<double>::infinity();
        for (const Halfspace& f : pieces_[i].region.faces) {
            if (std::abs(f.a[0]) < 1e-300)
                continue;
            const double boundary = -f.b / f.a[0];
            const bool lower = (f.a[0] > 0.0) == f.positive_open;
            if (lower)
                lo = std::max(lo, boundary);
        }
        interval_index_.emplace_back(lo, static_cast<int>(i));
    }
    std::sort(interval_index_.begin(), interval_index_.end());
}

double PiecewiseGaussianDensity::piece_log_value(std::size_t i, const Vec& x) const {
    const GaussianPiece& p = pieces_[i];
    const Vec z = cov_chol_lower_.triangularView<Eigen::Lower>().solve(p.lin * x + p.shift - mean_base_);
    return std::log(p.amplitude) + log_norm_ - 0.5 * z.squaredNorm();
}

int PiecewiseGaussianDensity::piece_index(const Vec& x) const {
    if (dim() == 1 && !interval_index_.empty()) {
        // candidates near the rightmost interval whose lower bound is <= x
        auto it = std::upper_bound(interval_index_.begin(), interval_index_.end(),
                                   std::make_pair(x[0], std::numeric_limits<int>::max()));
        int steps = 0;
        for (auto rit = std::make_reverse_iterator(it);
             rit != interval_index_.rend() && steps < 6; ++rit, ++steps)
            if (pieces_[rit->second].region.contains(x))
                return rit->second;
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i)
        if (pieces_[i].region.contains(x))
            return static_cast<int>(i);
    return -1;
}

double PiecewiseGaussianDensity::eval(const Vec& x) const {
    const int i = piece_index(x);
    return i < 0 ? 0.0 : std::exp(piece_log_value(static_cast<std::size_t>(i), x));
}

double PiecewiseGaussianDensity::log_eval(const Vec& x) const {
    const int i = piece_index(x);
    return i < 0 ? -std::numeric_limits<double>::infinity()
                 : piece_log_value(static_cast<std::size_t>(i), x);
}

Vec PiecewiseGaussianDensity::piece_mean(std::size_t i) const {
    return pieces_[i].lin.partialPivLu().solve(mean_base_ - pieces_[i].shift);
}

Mat PiecewiseGaussianDensity::piece_covariance(std::size_t i) const {
    const Mat inv = pieces_[i].lin.partialPivLu().inverse();
    Mat cov = inv * cov_base_ * inv.transpose();
    return 0.5 * (cov + cov.transpose());
}

double PiecewiseGaussianDensity::coverage_halfwidth(double coverage) const {
    double R0 = 1.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(piece_covariance(i));
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
            throw SpectralError("piece covariance is not positive definite");
        R0 = std::max(R0, piece_mean(i).lpNorm<Eigen::Infinity>() +
                              6.0 * std::sqrt(es.eigenvalues().maxCoeff()));
    }
    const auto f = [this](const Vec& x) { return eval(x); };
    return coverage_radius(f, dim(), coverage, R0, 8);
}

double PiecewiseGaussianDensity::mass(int cells_per_axis) const {
    const double R = coverage_halfwidth();
    const Vec lo = Vec::Constant(dim(), -R);
    const Vec hi = Vec::Constant(dim(), R);
    if (dim() == 1) {
        auto bps = breakpoints_1d();
        return quad::integrate_1d_breakpoints(
            [this](double x) { Vec v(1); v[0] = x; return eval(v); }, -R, R, bps,
            std::max(2, cells_per_axis / std::max<int>(1, static_cast<int>(bps.size()))));
    }
    return quad::integrate_box([this](const Vec& x) { return eval(x); }, lo, hi, cells_per_axis);
}

int PiecewiseGaussianDensity::partition_violations(int n_points, std::uint64_t seed) const {
    const double R = coverage_halfwidth();
    int bad = 0;
    Vec x(dim());
    for (int i = 0; i < n_points; ++i) {
        for (int k = 0; k < dim(); ++k)
            x[k] = R * (2.0 * counter_uniform(seed, static_cast<std::uint64_t>(i) * dim() + k) - 1.0);
        int hits = 0;
        for (const GaussianPiece& p : pieces_)
            hits += p.region.contains(x) ? 1 : 0;
        if (hits != 1)
            ++bad;
    }
    return bad;
}

std::vector<double> PiecewiseGaussianDensity::breakpoints_1d() const {
    std::vector<double> bps;
    if (dim() != 1)
        return bps;
    for (const GaussianPiece& p : pieces_)
        for (const Halfspace& f : p.region.faces)
            if (std::abs(f.a[0]) > 1e-300)
                bps.push_back(-f.b / f.a[0]);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-14; }),
              bps.end());
    return bps;
}

Density PiecewiseGaussianDensity::as_density() const {
    auto self = std::make_shared<PiecewiseGaussianDensity>(*this);
    Density d;
    d.dim = dim();
    d.pdf = [self](const Vec& x) { return self->eval(x); };
    d.log_pdf = [self](const Vec& x) { return self->log_eval(x); };
    double hint = 1.0;
    for (std::size_t i = 0; i < self->pieces().size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(self->piece_covariance(i));
        hint = std::max(hint, self->piece_mean(i).lpNorm<Eigen::Infinity>() +
                                  6.0 * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
    }
    d.radius_hint = hint;
    return d;
}

} // namespace relflow
