#ifndef RELFLOW_GAUSSIAN_HPP
#define RELFLOW_GAUSSIAN_HPP

#include "relflow/density.hpp"
#include "relflow/types.hpp"

#include <cstdint>
#include <vector>

namespace relflow {

/// One linear constraint: either the open side {a'x + b > 0} or the closed
/// side {a'x + b <= 0}. Points exactly on the hyperplane belong to the
/// closed side.
struct Halfspace {
    Vec a;
    double b = 0.0;
    bool positive_open = true;

    bool contains(const Vec& x) const {
        const double s = a.dot(x) + b;
        return positive_open ? (s > 0.0) : (s <= 0.0);
    }
};

struct Polyhedron {
    std::vector<Halfspace> faces;

    bool contains(const Vec& x) const {
        for (const Halfspace& h : faces)
            if (!h.contains(x))
                return false;
        return true;
    }
};

/// Feasibility of the interior of a half-space list: true iff some point
/// satisfies every open face with strictly positive margin and every closed
/// face nonstrictly. Small dense LP, exact enough for split pruning.
bool polyhedron_nonempty(const Polyhedron& poly, int dim);

/// A scaled Gaussian function on a polyhedron: x -> amplitude * rho_B(lin x + shift)
/// for x in region, where rho_B is the owning density's base Gaussian.
struct GaussianPiece {
    double amplitude = 1.0;
    Mat lin;   // invertible
    Vec shift;
    Polyhedron region;
};

/// An exact solution of the transport equation: a finite union of Gaussian
/// pieces whose regions partition space. Immutable after construction.
class PiecewiseGaussianDensity {
public:
    PiecewiseGaussianDensity(Vec mean_base, Mat cov_base, std::vector<GaussianPiece> pieces);

    /// The base Gaussian itself as a single whole-space piece.
    static PiecewiseGaussianDensity gaussian(const Vec& mean, const Mat& cov);

    int dim() const { return static_cast<int>(mean_base_.size()); }
    const Vec& mean_base() const { return mean_base_; }
    const Mat& cov_base() const { return cov_base_; }
    const std::vector<GaussianPiece>& pieces() const { return pieces_; }

    double eval(const Vec& x) const;
    double log_eval(const Vec& x) const;

    /// Index of the piece containing x, or -1 (possible only for far points
    /// whose sliver piece was pruned as numerically empty).
    int piece_index(const Vec& x) const;

    /// Mean / covariance of the normalized Gaussian extending piece i.
    Vec piece_mean(std::size_t i) const;
    Mat piece_covariance(std::size_t i) const;

    /// Quadrature mass over a box covering the bulk of the density.
    double mass(int cells_per_axis = 96) const;

    /// Half-width of a box carrying at least `coverage` of the mass.
    double coverage_halfwidth(double coverage = 1.0 - 1e-6) const;

    /// Checks that quasi-random sample points each lie in exactly one piece.
    /// Returns the number of violations (0 on a valid partition).
    int partition_violations(int n_points = 10000, std::uint64_t seed = 11) const;

    Density as_density() const;

    /// Interior breakpoints of the 1D piece intervals (for quadrature).
    std::vector<double> breakpoints_1d() const;

private:
    Vec mean_base_;
    Mat cov_base_;
    std::vector<GaussianPiece> pieces_;
    Mat cov_chol_lower_;  // L with Sigma_B = L L'
    double log_norm_ = 0; // base Gaussian log normalization
    std::vector<std::pair<double, int>> interval_index_; // 1D fast path (lo, piece)

    friend class PushforwardBuilder;
    double piece_log_value(std::size_t i, const Vec& x) const;
    void build_interval_index();
};

} // namespace relflow

#endif
