#ifndef RELFLOW_DENSITY_HPP
#define RELFLOW_DENSITY_HPP

#include "relflow/types.hpp"

#include <functional>
#include <vector>

namespace relflow {

/// A probability density presented as an evaluator. `log_pdf` is optional but
/// strongly recommended for anything with Gaussian-type tails; estimators use
/// it to reason about ratios far beyond the double underflow range.
struct Density {
    std::function<double(const Vec&)> pdf;
    std::function<double(const Vec&)> log_pdf; // may be empty
    int dim = 1;
    double radius_hint = 1.0; // starting half-width for coverage scans

    double operator()(const Vec& x) const { return pdf(x); }
    double log_at(const Vec& x) const;
};

Density gaussian_density(const Vec& mean, const Mat& cov);
Density gaussian_mixture_density(const std::vector<double>& weights,
                                 const std::vector<Vec>& means,
                                 const std::vector<Mat>& covs);
/// Uniform on the box [lo, hi]^d (componentwise bounds).
Density uniform_density(const Vec& lo, const Vec& hi);

/// The centered isotropic Gaussian envelope (2 pi s^2)^{-d/2} exp(-|x|^2/2s^2).
double gaussian_envelope_pdf(double sigma, const Vec& x);
double gaussian_envelope_log_pdf(double sigma, const Vec& x);

enum class TailMode {
    upper_bounded, ///< target <= envelope outside the tail radius
    lower_bounded  ///< target >= envelope outside the tail radius
};

/// Target density together with its declared Gaussian tail certificate: the
/// claim is rho(x) <= (or >=) the sigma_bullet envelope whenever |x| >= tail_radius.
struct TargetSpec {
    Density density;
    double sigma_bullet = 1.0;
    double tail_radius = 1.0; // M
    TailMode mode = TailMode::upper_bounded;

    /// Scans rays/grids beyond tail_radius and throws CertificationError if
    /// the declared bound is violated.
    void validate(std::uint64_t scan_seed = 0) const;
};

/// Smallest radius (scanned outward on a fixed grid) beyond which the density
/// is bounded by the sigma envelope in the requested direction. Throws
/// CertificationError if none is found below the cap.
double find_tail_radius(const Density& rho, double sigma, TailMode mode,
                        double start = 0.5, double cap = 1e6);

} // namespace relflow

#endif
