#include "relflow/density.hpp"
#include "relflow/errors.hpp"
#include "relflow/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace relflow {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

struct GaussianCore {
    Vec mean;
    Eigen::LLT<Mat> llt;
    double log_norm; // -d/2 log(2pi) - 1/2 log det Sigma

    double log_pdf(const Vec& x) const {
        const Vec z = llt.matrixL().solve(x - mean);
        return log_norm - 0.5 * z.squaredNorm();
    }
};

GaussianCore make_core(const Vec& mean, const Mat& cov) {
    GaussianCore core;
    core.mean = mean;
    core.llt.compute(0.5 * (cov + cov.transpose()));
    if (core.llt.info() != Eigen::Success)
        throw SpectralError("covariance matrix is not positive definite");
    double logdet = 0.0;
    const auto& L = core.llt.matrixL();
    for (int i = 0; i < mean.size(); ++i)
        logdet += 2.0 * std::log(L(i, i));
    core.log_norm = -0.5 * (mean.size() * kLog2Pi + logdet);
    return core;
}
} // namespace

double Density::log_at(const Vec& x) const {
    if (log_pdf)
        return log_pdf(x);
    const double v = pdf(x);
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

Density gaussian_density(const Vec& mean, const Mat& cov) {
    auto core = std::make_shared<GaussianCore>(make_core(mean, cov));
    Density d;
    d.dim = static_cast<int>(mean.size());
    d.pdf = [core](const Vec& x) { return std::exp(core->log_pdf(x)); };
    d.log_pdf = [core](const Vec& x) { return core->log_pdf(x); };
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cov + cov.transpose()));
    d.radius_hint = mean.lpNorm<Eigen::Infinity>() + 6.0 * std::sqrt(es.eigenvalues().maxCoeff());
    return d;
}

Density gaussian_mixture_density(const std::vector<double>& weights,
                                 const std::vector<Vec>& means,
                                 const std::vector<Mat>& covs) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size())
        throw ValidationError("mixture spec needs matching nonempty weights/means/covs");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0))
            throw ValidationError("mixture weights must be positive");
        wsum += w;
    }
    auto cores = std::make_shared<std::vector<std::pair<double, GaussianCore>>>();
    double hint = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cores->emplace_back(std::log(weights[i] / wsum), make_core(means[i], covs[i]));
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (covs[i] + covs[i].transpose()));
        hint = std::max(hint, means[i].lpNorm<Eigen::Infinity>() +
                                  6.0 * std::sqrt(es.eigenvalues().maxCoeff()));
    }
    Density d;
    d.dim = static_cast<int>(means.front().size());
    d.radius_hint = hint;
    auto log_eval = [cores](const Vec& x) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& [lw, core] : *cores)
            m = std::max(m, lw + core.log_pdf(x));
        if (!std::isfinite(m))
            return m;
        double s = 0.0;
        for (const auto& [lw, core] : *cores)
            s += std::exp(lw + core.log_pdf(x) - m);
        return m + std::log(s);
    };
    d.log_pdf = log_eval;
    d.pdf = [log_eval](const Vec& x) { return std::exp(log_eval(x)); };
    return d;
}

Density uniform_density(const Vec& lo, const Vec& hi) {
    double vol = 1.0;
    for (int k = 0; k < lo.size(); ++k) {
        if (!(hi[k] > lo[k]))
            throw ValidationError("uniform density needs hi > lo per axis");
        vol *= hi[k] - lo[k];
    }
    Density d;
    d.dim = static_cast<int>(lo.size());
    d.radius_hint = std::max(lo.lpNorm<Eigen::Infinity>(), hi.lpNorm<Eigen::Infinity>());
    const double value = 1.0 / vol;
    d.pdf = [lo, hi, value](const Vec& x) {
        for (int k = 0; k < lo.size(); ++k)
            if (x[k] < lo[k] || x[k] > hi[k])
                return 0.0;
        return value;
    };
    return d;
}

double gaussian_envelope_log_pdf(double sigma, const Vec& x) {
    const int d = static_cast<int>(x.size());
    return -0.5 * d * (kLog2Pi + 2.0 * std::log(sigma)) - 0.5 * x.squaredNorm() / (sigma * sigma);
}

double gaussian_envelope_pdf(double sigma, const Vec& x) {
    return std::exp(gaussian_envelope_log_pdf(sigma, x));
}

void TargetSpec::validate(std::uint64_t scan_seed) const {
    if (!(sigma_bullet > 0.0) || !(tail_radius > 0.0))
        throw ValidationError("target spec needs positive sigma_bullet and tail radius");
    const int d = density.dim;
    const int n_dirs = d == 1 ? 2 : 64;
    const double r_max = std::max(8.0 * tail_radius, 4.0 * density.radius_hint);
    for (int i = 0; i < n_dirs; ++i) {
        Vec u(d);
        if (d == 1)
            u[0] = i == 0 ? 1.0 : -1.0;
        else {
            for (int k = 0; k < d; ++k)
                u[k] = counter_normal(scan_seed, static_cast<std::uint64_t>(i) * d + k);
            if (u.norm() < 1e-12)
                u.setConstant(1.0);
            u.normalize();
        }
        for (double r = tail_radius; r <= r_max; r *= 1.18) {
            const Vec x = r * u;
            const double lt = density.log_at(x);
            const double le = gaussian_envelope_log_pdf(sigma_bullet, x);
            const bool ok = mode == TailMode::upper_bounded ? (lt <= le + 1e-9) : (lt >= le - 1e-9);
            if (!ok)
                throw CertificationError("declared tail bound violated", std::exp(lt - le));
        }
    }
}

double find_tail_radius(const Density& rho, double sigma, TailMode mode,
                        double start, double cap) {
    const int d = rho.dim;
    for (double M = start; M <= cap; M *= 1.25) {
        bool ok = true;
        const int n_dirs = d == 1 ? 2 : 48;
        for (int i = 0; i < n_dirs && ok; ++i) {
            Vec u(d);
            if (d == 1)
                u[0] = i == 0 ? 1.0 : -1.0;
            else {
                for (int k = 0; k < d; ++k)
                    u[k] = counter_normal(7, static_cast<std::uint64_t>(i) * d + k);
                u.normalize();
            }
            for (double r = M; r <= 6.0 * M + 40.0 && ok; r *= 1.15) {
                const double lt = rho.log_at(r * u);
                const double le = gaussian_envelope_log_pdf(sigma, r * u);
                ok = mode == TailMode::upper_bounded ? (lt <= le) : (lt >= le);
            }
        }
        if (ok)
            return M;
    }
    throw CertificationError("no tail radius found below the cap");
}

} // namespace relflow
