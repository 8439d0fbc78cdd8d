#include "relflow/points.hpp"
#include "relflow/errors.hpp"
#include "relflow/flow.hpp"
#include "relflow/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace relflow {

double activation_apply(Activation act, double x) {
    switch (act) {
    case Activation::relu:
        return x > 0.0 ? x : 0.0;
    case Activation::softplus:
        return x > 30.0 ? x : std::log1p(std::exp(x));
    }
    return x;
}

Vec activation_apply(Activation act, const Vec& x) {
    Vec out(x.size());
    for (int i = 0; i < x.size(); ++i)
        out[i] = activation_apply(act, x[i]);
    return out;
}

Mat activation_apply(Activation act, const Mat& x) {
    Mat out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            out(i, j) = activation_apply(act, x(i, j));
    return out;
}

// ---------------------------------------------------------------------------
// Exact flow of the piecewise-constant linear model
// ---------------------------------------------------------------------------

namespace {

// z = [x; 1], advanced by exp(h [[w diag(s), b], [0, 0]]).
Mat augmented_exp(const Mat& A, const Vec& b, double h) {
    const int d = static_cast<int>(b.size());
    Mat aug = Mat::Zero(d + 1, d + 1);
    aug.topLeftCorner(d, d) = A;
    aug.topRightCorner(d, 1) = b;
    return (h * aug).exp();
}

Vec apply_aug(const Mat& E, const Vec& x) {
    const int d = static_cast<int>(x.size());
    return E.topLeftCorner(d, d) * x + E.topRightCorner(d, 1);
}

// Sign pattern with a derivative tie-break for coordinates sitting at zero.
std::vector<bool> sign_pattern(const Mat& w, const Vec& b, const Vec& x, double tol) {
    const Vec v = w * activation_apply(Activation::relu, x) + b;
    std::vector<bool> s(x.size());
    for (int j = 0; j < x.size(); ++j)
        s[j] = x[j] > tol || (std::abs(x[j]) <= tol && v[j] > 0.0);
    return s;
}

Mat gated(const Mat& w, const std::vector<bool>& s) {
    Mat A = w;
    for (int j = 0; j < w.cols(); ++j)
        if (!s[j])
            A.col(j).setZero();
    return A;
}

// Advances one constant-(w, b) segment, splitting at activation sign changes
// of the coordinates that actually enter the dynamics.
Vec advance_linear_segment(const Mat& w, const Vec& b, Vec x, double tau) {
    std::vector<int> watch;
    for (int j = 0; j < w.cols(); ++j)
        if (w.col(j).norm() > 0.0)
            watch.push_back(j);
    double remaining = tau;
    for (int guard = 0; remaining > 1e-15 * tau && guard < 256; ++guard) {
        const double tol = 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>());
        const std::vector<bool> s = sign_pattern(w, b, x, tol);
        const Mat A = gated(w, s);
        if (watch.empty()) {
            x = apply_aug(augmented_exp(A, b, remaining), x);
            break;
        }
        const int K = 16;
        const double h = remaining / K;
        const Mat E1 = augmented_exp(A, b, h);
        Vec cur = x;
        double t_ok = 0.0;
        bool crossed = false;
        double t_lo = 0.0, t_hi = remaining;
        for (int k = 1; k <= K; ++k) {
            const Vec nxt = apply_aug(E1, cur);
            bool change = false;
            for (int j : watch)
                if ((nxt[j] > tol) != s[j] && std::abs(nxt[j]) > tol)
                    change = true;
            if (change) {
                crossed = true;
                t_lo = t_ok;
                t_hi = k * h;
                break;
            }
            cur = nxt;
            t_ok = k * h;
        }
        if (!crossed) {
            x = apply_aug(augmented_exp(A, b, remaining), x);
            break;
        }
        for (int it = 0; it < 60 && t_hi - t_lo > 1e-15 * tau; ++it) {
            const double mid = 0.5 * (t_lo + t_hi);
            const Vec xm = apply_aug(augmented_exp(A, b, mid), x);
            bool change = false;
            for (int j : watch)
                if ((xm[j] > tol) != s[j] && std::abs(xm[j]) > tol)
                    change = true;
            (change ? t_hi : t_lo) = mid;
        }
        x = apply_aug(augmented_exp(A, b, t_hi), x);
        remaining -= t_hi;
    }
    return x;
}

} // namespace

Vec linear_flow(const std::vector<LinearSegment>& segments, const Vec& x0,
                double t_from, double t_to) {
    Vec x = x0;
    for (const LinearSegment& s : segments) {
        const double lo = std::max(s.t_start, t_from);
        const double hi = std::min(s.t_end, t_to);
        if (hi > lo)
            x = advance_linear_segment(s.w, s.b, x, hi - lo);
    }
    return x;
}

std::vector<Mat> linear_flow_trajectory(const std::vector<LinearSegment>& segments,
                                        const Mat& X, const std::vector<double>& times) {
    std::vector<Mat> out;
    out.reserve(times.size());
    for (double t : times) {
        Mat P(X.rows(), X.cols());
        for (int i = 0; i < X.cols(); ++i)
            P.col(i) = linear_flow(segments, X.col(i), 0.0, t);
        out.push_back(std::move(P));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact matching (piecewise-constant controls, ReLU)
// ---------------------------------------------------------------------------

Vec pick_separating_vector(const Mat& points, std::uint64_t seed) {
    const int d = static_cast<int>(points.rows());
    const int n = static_cast<int>(points.cols());
    for (std::uint64_t draw = 0; draw < 1000; ++draw) {
        Vec v(d);
        for (int k = 0; k < d; ++k)
            v[k] = std::abs(counter_normal(seed, draw * d + k)) + 0.05;
        v.normalize();
        bool ok = v.minCoeff() > 1e-3;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) {
                const Vec diff = points.col(i) - points.col(j);
                ok = std::abs(v.dot(diff)) > 1e-10 * diff.norm();
            }
        if (ok)
            return v;
    }
    throw DistinctnessError("no separating vector found after 1000 draws "
                            "(near-degenerate cloud)");
}

namespace {

void check_distinct(const Mat& P, const char* label) {
    for (int i = 0; i < P.cols(); ++i)
        for (int j = i + 1; j < P.cols(); ++j) {
            const double scale = std::max(1.0, std::max(P.col(i).norm(), P.col(j).norm()));
            if ((P.col(i) - P.col(j)).norm() < 1e-12 * scale) {
                std::ostringstream os;
                os << "numerically coincident " << label << " points " << i << " and " << j;
                throw DistinctnessError(os.str());
            }
        }
}

struct PlanBuilder {
    double dt;
    double t = 0.0;
    std::vector<LinearSegment> segments;

    void push(const Mat& w, const Vec& b) {
        segments.push_back(LinearSegment{t, t + dt, w, b});
        t += dt;
    }
    void push_zero(int d) { push(Mat::Zero(d, d), Vec::Zero(d)); }
    void push_translation(int d, const Vec& displacement) {
        push(Mat::Zero(d, d), displacement / dt);
    }
};

// Sorting order of a coordinate row, ties broken by original index (exact
// ties have been excluded by the distinctness checks upstream).
std::vector<int> row_order(const Mat& P, int row) {
    std::vector<int> idx(P.cols());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return P(row, a) < P(row, b); });
    return idx;
}

// Bisection from 1 on the shear scale until the coordinate `row` of
// exp(dt alpha e_row v') P has pairwise gaps above the margin.
double separate_by_shear(Mat& P, int row, const Vec& v, double dt, double margin) {
    const int d = static_cast<int>(P.rows());
    double alpha = 1.0;
    for (int it = 0; it < 80; ++it, alpha *= 0.5) {
        Vec w = Vec::Zero(d);
        w[row] = alpha;
        const Mat E = rank_one_exponential(w, v, dt);
        const Mat Q = E * P;
        double gap = std::numeric_limits<double>::infinity();
        for (int i = 0; i < Q.cols(); ++i)
            for (int j = i + 1; j < Q.cols(); ++j)
                gap = std::min(gap, std::abs(Q(row, i) - Q(row, j)));
        if (gap > margin) {
            P = Q;
            return alpha;
        }
    }
    throw DistinctnessError("separating shear failed to produce distinct coordinates");
}

// 1D model: flows are order preserving, so only order-isomorphic pairings are
// reachable; they are realized as a piecewise-linear increasing map built from
// (translate, one-sided dilation, translate) triples.
MatchingPlan exact_match_1d(const Mat& X, const Mat& Y, double T) {
    const int n = static_cast<int>(X.cols());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return X(0, a) < X(0, b); });
    for (int k = 0; k + 1 < n; ++k)
        if (!(Y(0, idx[k]) < Y(0, idx[k + 1])))
            throw ValidationError("1D flows are order preserving: the pairing must be "
                                  "strictly monotone");
    std::vector<double> xs(n), ys(n);
    for (int k = 0; k < n; ++k) {
        xs[k] = X(0, idx[k]);
        ys[k] = Y(0, idx[k]);
    }
    const int n_segments = 3 + 3 * std::max(0, n - 2);
    MatchingPlan plan;
    plan.horizon = T;
    plan.relabeling = idx;
    PlanBuilder pb{T / n_segments};
    const auto one = [](double v) { Vec b(1); b[0] = v; return b; };
    const auto scal = [](double v) { Mat w(1, 1); w(0, 0) = v; return w; };
    // affine prefix anchored at the leftmost point: translate it to 0, apply
    // the one-sided dilation (all other points are positive), translate back
    const double s0 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    pb.push_translation(1, one(-xs[0]));
    pb.push(scal(std::log(s0) / pb.dt), Vec::Zero(1));
    pb.push_translation(1, one(ys[0]));
    for (int j = 1; j + 1 < n; ++j) {
        const double prev_slope = (ys[j] - ys[j - 1]) / (xs[j] - xs[j - 1]);
        const double next_slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
        pb.push_translation(1, one(-ys[j]));
        pb.push(scal(std::log(next_slope / prev_slope) / pb.dt), Vec::Zero(1));
        pb.push_translation(1, one(ys[j]));
    }
    plan.segments = std::move(pb.segments);
    plan.constants.offset = Vec::Zero(1);
    return plan;
}

} // namespace

MatchingPlan exact_match(const Mat& X, const Mat& Y, double T, std::uint64_t seed) {
    const int d = static_cast<int>(X.rows());
    const int n = static_cast<int>(X.cols());
    if (Y.rows() != d || Y.cols() != n)
        throw ValidationError("point clouds must have matching shapes");
    if (!(T > 0.0))
        throw ValidationError("horizon must be positive");
    check_distinct(X, "source");
    check_distinct(Y, "target");

    if (n == 1) {
        MatchingPlan plan;
        plan.horizon = T;
        plan.relabeling = {0};
        plan.segments.push_back(LinearSegment{0.0, T, Mat::Zero(d, d), (Y.col(0) - X.col(0)) / T});
        plan.constants.offset = Vec::Zero(d);
        return plan;
    }
    if (d == 1)
        return exact_match_1d(X, Y, T);

    MatchingPlan plan;
    plan.horizon = T;
    MatchingConstants& C = plan.constants;
    const int n_segments = 4 * n + 3;
    PlanBuilder pb{T / n_segments};
    Mat P = X;

    // positivity push, then shear so the second coordinates become distinct
    C.beta1 = 2.0 * (1.0 + P.cwiseAbs().maxCoeff());
    pb.push_translation(d, Vec::Constant(d, C.beta1));
    P.array() += C.beta1;
    C.sep_v = pick_separating_vector(P, seed);
    double pair_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pair_min = std::min(pair_min, (P.col(i) - P.col(j)).norm());
    const double margin = 1e-6 * pair_min;
    {
        Mat Q = P;
        C.alpha1 = separate_by_shear(Q, 1, C.sep_v, pb.dt, margin);
        Mat w = Mat::Zero(d, d);
        w.row(1) = C.alpha1 * C.sep_v.transpose();
        pb.push(w, Vec::Zero(d));
        P = Q;
    }

    // backward-time preprocessing of the targets: the last two forward
    // segments are fixed now, and the sweeps aim at their preimages
    C.beta2 = 2.0 * (1.0 + Y.cwiseAbs().maxCoeff());
    Mat Ybar = Y;
    Ybar.array() += C.beta2;
    C.sep_u = pick_separating_vector(Ybar, seed + 1);
    double pair_min_y = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pair_min_y = std::min(pair_min_y, (Ybar.col(i) - Ybar.col(j)).norm());
    C.alpha2 = separate_by_shear(Ybar, 0, C.sep_u, pb.dt, 1e-6 * pair_min_y);
    Mat w_back = Mat::Zero(d, d);
    w_back.row(0) = -C.alpha2 * C.sep_u.transpose();

    // sweep in the second coordinate: gates open one point at a time and a
    // single-entry shear moves its first coordinate onto the offset target
    C.order_second = row_order(P, 1);
    plan.relabeling = C.order_second;
    pb.push_zero(d);
    double c1 = P(0, C.order_second[0]) - Ybar(0, C.order_second[0]);
    for (int step = 1; step < n; ++step) {
        const int i = C.order_second[step];
        const int prev = C.order_second[step - 1];
        const double mid = 0.5 * (P(1, prev) + P(1, i));
        pb.push_translation(d, -mid * Vec::Unit(d, 1));
        P.row(1).array() -= mid;
        C.alpha3 = std::max(C.alpha3, std::abs(mid));
        std::vector<double> chain;
        for (int k = 0; k <= step; ++k)
            chain.push_back(P(1, C.order_second[k]));
        C.second_chain.push_back(std::move(chain));
        const double omega = Ybar(0, i) + c1 - P(0, i);
        const double kappa = omega / (pb.dt * P(1, i));
        Mat w = Mat::Zero(d, d);
        w(0, 1) = kappa;
        pb.push(w, Vec::Zero(d));
        for (int j = 0; j < n; ++j)
            if (P(1, j) > 0.0)
                P(0, j) += pb.dt * kappa * P(1, j);
    }

    // sweep in the first coordinate: same induction, now matching all the
    // remaining coordinates of each point at once
    C.order_first = row_order(P, 0);
    pb.push_zero(d);
    Vec c = P.col(C.order_first[0]) - Ybar.col(C.order_first[0]);
    for (int step = 1; step < n; ++step) {
        const int i = C.order_first[step];
        const int prev = C.order_first[step - 1];
        const double mid = 0.5 * (P(0, prev) + P(0, i));
        pb.push_translation(d, -mid * Vec::Unit(d, 0));
        P.row(0).array() -= mid;
        c[0] -= mid;
        C.alpha4 = std::max(C.alpha4, std::abs(mid));
        std::vector<double> chain;
        for (int k = 0; k <= step; ++k)
            chain.push_back(P(0, C.order_first[k]));
        C.first_chain.push_back(std::move(chain));
        const Vec omega = Ybar.col(i) + c - P.col(i);
        Mat w = Mat::Zero(d, d);
        for (int r = 1; r < d; ++r)
            w(r, 0) = omega[r] / (pb.dt * P(0, i));
        pb.push(w, Vec::Zero(d));
        for (int j = 0; j < n; ++j)
            if (P(0, j) > 0.0)
                for (int r = 1; r < d; ++r)
                    P(r, j) += pb.dt * w(r, 0) * P(0, j);
    }

    // remove the offset, then replay the fixed closing segments
    pb.push_translation(d, -c);
    P.colwise() -= c;
    C.offset = c;
    pb.push(w_back, Vec::Zero(d));
    P = rank_one_exponential(-C.alpha2 * Vec::Unit(d, 0), C.sep_u, pb.dt) * P;
    pb.push_translation(d, Vec::Constant(d, -C.beta2));
    P.array() -= C.beta2;

    plan.segments = std::move(pb.segments);
    return plan;
}

// ---------------------------------------------------------------------------
// Minimum-norm continuous controls (Proposition-2 style)
// ---------------------------------------------------------------------------

MinimumNormPath minimum_norm_path(const Mat& X, const Mat& Y, double T, Activation act,
                                  int nodes, bool augment_bias) {
    const int d = static_cast<int>(X.rows());
    const int n = static_cast<int>(X.cols());
    if (Y.rows() != d || Y.cols() != n)
        throw ValidationError("point clouds must have matching shapes");
    const int d_eff = augment_bias ? d + 1 : d;
    if (d_eff < n)
        throw ValidationError(augment_bias ? "rank precondition requires d >= n - 1"
                                           : "rank precondition requires d >= n");
    if (nodes < 2)
        throw ValidationError("need at least two grid nodes");

    MinimumNormPath path;
    path.augmented = augment_bias;
    path.act = act;
    const Mat V = (Y - X) / T;
    Mat V_eff = Mat::Zero(d_eff, n);
    V_eff.topRows(d) = V;

    for (int i = 0; i < nodes; ++i) {
        const double s = static_cast<double>(i) / (nodes - 1);
        Mat gamma = X + s * (Y - X);
        Mat state(d_eff, n);
        state.topRows(d) = gamma;
        if (augment_bias)
            state.row(d).setOnes();
        const Mat S = activation_apply(act, state);
        Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(n - 1);
        if (!(smin > 1e-10 * std::max(smax, 1e-30))) {
            std::ostringstream os;
            os << "rank condition fails at s = " << s
               << " (singular values: " << svd.singularValues().transpose() << ")";
            throw RankError(os.str(), s);
        }
        // least-Frobenius-norm solution of w_row S = v_row per row
        const Mat pinv = svd.matrixV() * svd.singularValues().cwiseInverse().asDiagonal() *
                         svd.matrixU().transpose();
        const Mat w_full = V_eff * pinv;
        path.times.push_back(s * T);
        path.w.push_back(w_full.topLeftCorner(d, d));
        path.b.push_back(augment_bias ? Vec(w_full.topRightCorner(d, 1)) : Vec(Vec::Zero(d)));
        path.max_control_norm = std::max(path.max_control_norm, w_full.norm());
    }
    double max_l1 = 0.0;
    for (int i = 0; i < n; ++i)
        max_l1 = std::max(max_l1, (X.col(i) - Y.col(i)).lpNorm<1>());
    path.empirical_constant = max_l1 > 0.0 ? path.max_control_norm * T / max_l1 : 0.0;
    return path;
}

Mat integrate_minimum_norm(const MinimumNormPath& path, const Mat& X, int substeps) {
    const int d = static_cast<int>(X.rows());
    const std::size_t m = path.times.size();
    const auto control = [&](double t, Mat& w, Vec& b) {
        const double T = path.times.back();
        const double s = std::clamp(t, 0.0, T);
        const double pos = s / T * (m - 1);
        const std::size_t i0 = std::min(static_cast<std::size_t>(pos), m - 2);
        const double frac = pos - i0;
        w = (1.0 - frac) * path.w[i0] + frac * path.w[i0 + 1];
        b = (1.0 - frac) * path.b[i0] + frac * path.b[i0 + 1];
    };
    Mat P = X;
    Mat w(d, d);
    Vec b(d);
    const auto rhs = [&](double t, const Vec& x) {
        control(t, w, b);
        return Vec(w * activation_apply(path.act, x) + b);
    };
    const double h = path.times.back() / ((m - 1) * substeps);
    for (int i = 0; i < P.cols(); ++i) {
        Vec x = P.col(i);
        double t = 0.0;
        for (std::size_t k = 0; k < (m - 1) * substeps; ++k) {
            const Vec k1 = rhs(t, x);
            const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
            const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
            const Vec k4 = rhs(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        P.col(i) = x;
    }
    return P;
}

double genericity_probe(int n, int d, Activation act, PointDistribution dist,
                        int trials, std::uint64_t seed) {
    if (d < n)
        throw ValidationError("genericity probe requires d >= n");
    int full = 0;
    for (int trial = 0; trial < trials; ++trial) {
        Mat Y(d, n);
        const std::uint64_t base = static_cast<std::uint64_t>(trial) * (d * n + 4);
        switch (dist) {
        case PointDistribution::standard_normal:
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < n; ++j)
                    Y(i, j) = counter_normal(seed, base + i * n + j);
            break;
        case PointDistribution::positive_uniform:
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < n; ++j)
                    Y(i, j) = counter_uniform(seed, base + i * n + j);
            break;
        case PointDistribution::degenerate_line: {
            // columns on the line t -> t e_1 - sum_{k>1} e_k
            for (int j = 0; j < n; ++j) {
                Y.col(j) = -Vec::Ones(d);
                Y(0, j) = 2.0 * counter_normal(seed, base + j);
            }
            break;
        }
        }
        const Mat S = activation_apply(act, Y);
        Eigen::JacobiSVD<Mat> svd(S);
        const double smax = svd.singularValues()(0);
        const double smin = svd.singularValues()(n - 1);
        if (smin > 1e-10 * std::max(smax, 1e-30))
            ++full;
    }
    return static_cast<double>(full) / trials;
}

} // namespace relflow
