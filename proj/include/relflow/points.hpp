#ifndef RELFLOW_POINTS_HPP
#define RELFLOW_POINTS_HPP

#include "relflow/types.hpp"

#include <cstdint>
#include <vector>

namespace relflow {

// Control model linear in the parameters: x' = w sigma(x) + b with sigma
// applied componentwise.

enum class Activation { relu, softplus };

double activation_apply(Activation act, double x);
Vec activation_apply(Activation act, const Vec& x);
Mat activation_apply(Activation act, const Mat& x);

struct LinearSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    Mat w;
    Vec b;
};

/// Constants chosen during plan construction, kept for inspection and for the
/// ordering assertions of the verification suite.
struct MatchingConstants {
    double beta1 = 0.0;  // initial positivity push (displacement)
    double beta2 = 0.0;  // backward-time positivity push (displacement)
    double alpha1 = 0.0; // forward separation shear scale
    double alpha2 = 0.0; // backward separation shear scale
    double alpha3 = 0.0; // largest gating translation, second-coordinate sweep
    double alpha4 = 0.0; // largest gating translation, first-coordinate sweep
    Vec offset;          // accumulated target offset c removed at the end
    Vec sep_v;           // separating vector of the forward preprocessing
    Vec sep_u;           // separating vector of the backward preprocessing
    std::vector<int> order_second; // processing order by second coordinate
    std::vector<int> order_first;  // processing order by first coordinate
    // ordering witnesses: per sweep step, the gated coordinate values right
    // after the gating translation (chain ... < 0 < pivot)
    std::vector<std::vector<double>> second_chain;
    std::vector<std::vector<double>> first_chain;
};

struct MatchingPlan {
    std::vector<LinearSegment> segments;
    double horizon = 0.0;
    std::vector<int> relabeling;
    MatchingConstants constants;

    int switch_count() const { return segments.empty() ? 0 : static_cast<int>(segments.size()) - 1; }
};

/// Deterministic rejection sampling of a strictly positive unit vector v with
/// |<v, x_i - x_j>| bounded away from zero for all pairs.
Vec pick_separating_vector(const Mat& points, std::uint64_t seed);

/// Exact interpolation: a piecewise-constant (w, b) schedule whose ReLU flow
/// carries column i of X onto column i of Y, with at most 4n+2 switches.
MatchingPlan exact_match(const Mat& X, const Mat& Y, double T, std::uint64_t seed = 0);

/// Exact flow of the piecewise-constant linear model (ReLU activation),
/// advanced through closed-form affine-exponential steps between activation
/// sign changes.
Vec linear_flow(const std::vector<LinearSegment>& segments, const Vec& x0,
                double t_from, double t_to);

/// Positions of all columns of X at the sample times (for trajectory plots).
std::vector<Mat> linear_flow_trajectory(const std::vector<LinearSegment>& segments,
                                        const Mat& X, const std::vector<double>& times);

struct MinimumNormPath {
    std::vector<double> times;
    std::vector<Mat> w;
    std::vector<Vec> b; // zero when bias augmentation is off
    bool augmented = true;
    Activation act = Activation::relu;
    double max_control_norm = 0.0;
    double empirical_constant = 0.0; // max||w|| * T / max_i ||x_i - y_i||_1
};

/// Continuous minimum-norm control through the linear interpolation path:
/// at each grid time the control is the least-Frobenius-norm solution of
/// w sigma(gamma(s)) = (Y - X)/T. Requires the rank condition along the path.
/// With augment_bias the state is extended by a constant 1 and the last matrix
/// column acts as a translation (then d >= n-1 suffices, otherwise d >= n).
MinimumNormPath minimum_norm_path(const Mat& X, const Mat& Y, double T, Activation act,
                                  int nodes = 256, bool augment_bias = true);

/// Integrates x' = w(t) sigma(x) + b(t) (controls interpolated linearly in t)
/// from each column of X; returns the end positions.
Mat integrate_minimum_norm(const MinimumNormPath& path, const Mat& X, int substeps = 8);

enum class PointDistribution { standard_normal, positive_uniform, degenerate_line };

/// Fraction of trials in which sigma(Y) has full column rank for Y sampled
/// from the distribution (n columns in dimension d).
double genericity_probe(int n, int d, Activation act, PointDistribution dist,
                        int trials, std::uint64_t seed);

} // namespace relflow

#endif
