#include "relflow/flow.hpp"
#include "relflow/errors.hpp"

#include <cmath>
#include <string>

namespace relflow {

namespace {

// Inner product w'a treated as zero below this relative threshold; the
// affine-exponential and nilpotent formulas agree in the limit and the
// threshold avoids cancellation in (e^{tc}-1)/c.
bool coupling(const Vec& w, const Vec& a, double* c) {
    *c = w.dot(a);
    return std::abs(*c) >= 1e-12 * w.norm() * a.norm();
}

struct SegmentMaps {
    // forward: x -> F x + f on the active side
    Mat F;
    Vec f;
    // inverse: x -> G x + g
    Mat G;
    Vec g;
    double log_det_forward = 0.0; // log det F = tau * w'a (0 in nilpotent case)
};

SegmentMaps segment_maps(const ControlSegment& s, double tau) {
    const int d = static_cast<int>(s.w.size());
    SegmentMaps m;
    double c = 0.0;
    if (coupling(s.w, s.a, &c)) {
        const double ef = std::expm1(tau * c) / c;   // (e^{tau c}-1)/c
        const double eb = std::expm1(-tau * c) / c;  // (e^{-tau c}-1)/c
        m.F = Mat::Identity(d, d) + ef * s.w * s.a.transpose();
        m.f = s.b * ef * s.w;
        m.G = Mat::Identity(d, d) + eb * s.w * s.a.transpose();
        m.g = s.b * eb * s.w;
        m.log_det_forward = tau * c;
    } else {
        m.F = Mat::Identity(d, d) + tau * s.w * s.a.transpose();
        m.f = tau * s.b * s.w;
        m.G = Mat::Identity(d, d) - tau * s.w * s.a.transpose();
        m.g = -(m.G * m.f);
        m.log_det_forward = 0.0;
    }
    return m;
}

bool segment_active(const ControlSegment& s, const Vec& x) {
    return s.a.dot(x) + s.b > 0.0;
}

} // namespace

Mat rank_one_exponential(const Vec& w, const Vec& a, double t) {
    const int d = static_cast<int>(w.size());
    double c = 0.0;
    if (coupling(w, a, &c))
        return Mat::Identity(d, d) + (std::expm1(t * c) / c) * w * a.transpose();
    return Mat::Identity(d, d) + t * w * a.transpose();
}

FlowResult flow_forward_between(const ControlSchedule& schedule, const Vec& x0,
                                double t_from, double t_to) {
    if (t_from > t_to || t_from < -1e-12 || t_to > schedule.horizon * (1.0 + 1e-12))
        throw ValidationError("flow times must satisfy 0 <= t_from <= t_to <= horizon");
    FlowResult r{x0, 0.0};
    for (const ControlSegment& s : schedule.segments) {
        const double lo = std::max(s.t_start, t_from);
        const double hi = std::min(s.t_end, t_to);
        if (hi <= lo)
            continue;
        if (!segment_active(s, r.point))
            continue; // the inactive side of the hyperplane is frozen
        const SegmentMaps m = segment_maps(s, hi - lo);
        r.point = m.F * r.point + m.f;
        r.log_jacobian += m.log_det_forward;
    }
    return r;
}

FlowResult flow_forward(const ControlSchedule& schedule, const Vec& x0, double t) {
    return flow_forward_between(schedule, x0, 0.0, t);
}

FlowResult flow_inverse(const ControlSchedule& schedule, const Vec& y, double t) {
    if (t < -1e-12 || t > schedule.horizon * (1.0 + 1e-12))
        throw ValidationError("flow time must lie in [0, horizon]");
    FlowResult r{y, 0.0};
    for (auto it = schedule.segments.rbegin(); it != schedule.segments.rend(); ++it) {
        const ControlSegment& s = *it;
        const double lo = s.t_start;
        const double hi = std::min(s.t_end, t);
        if (hi <= lo)
            continue;
        // the active half-space is invariant under the segment flow, so the
        // side can be read off the end point
        if (!segment_active(s, r.point))
            continue;
        const SegmentMaps m = segment_maps(s, hi - lo);
        r.point = m.G * r.point + m.g;
        r.log_jacobian -= m.log_det_forward;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Exact density pushforward
// ---------------------------------------------------------------------------

namespace {

Halfspace pulled_back(const Halfspace& h, const Mat& G, const Vec& g) {
    Halfspace out;
    out.a = G.transpose() * h.a;
    out.b = h.b + h.a.dot(g);
    out.positive_open = h.positive_open;
    return out;
}

// Applies the active-side update to a piece: value picks up the amplitude
// factor and the argument is composed with the segment's inverse map.
GaussianPiece mapped_piece(const GaussianPiece& p, const SegmentMaps& m) {
    GaussianPiece out;
    out.amplitude = p.amplitude * std::exp(-m.log_det_forward);
    out.lin = p.lin * m.G;
    out.shift = p.lin * m.g + p.shift;
    out.region.faces.reserve(p.region.faces.size());
    for (const Halfspace& h : p.region.faces)
        out.region.faces.push_back(pulled_back(h, m.G, m.g));
    return out;
}

} // namespace

PiecewiseGaussianDensity pushforward_density(const PiecewiseGaussianDensity& initial,
                                             const ControlSchedule& schedule,
                                             std::size_t piece_cap) {
    schedule.validate();
    const int d = initial.dim();
    std::vector<GaussianPiece> pieces = initial.pieces();
    for (const ControlSegment& s : schedule.segments) {
        const double tau = s.duration();
        const SegmentMaps m = segment_maps(s, tau);
        if (s.a.norm() < 1e-300) {
            // degenerate hyperplane: the whole space is active iff b > 0
            if (s.b > 0.0)
                for (GaussianPiece& p : pieces)
                    p = mapped_piece(p, m);
            continue;
        }
        std::vector<GaussianPiece> next;
        next.reserve(pieces.size() + 8);
        Halfspace active{s.a, s.b, true};
        Halfspace inactive{s.a, s.b, false};
        for (GaussianPiece& p : pieces) {
            Polyhedron on_active = p.region;
            on_active.faces.push_back(active);
            Polyhedron on_inactive = p.region;
            on_inactive.faces.push_back(inactive);
            const bool has_active = polyhedron_nonempty(on_active, d);
            const bool has_inactive = polyhedron_nonempty(on_inactive, d);
            if (has_inactive) {
                GaussianPiece q = p;
                if (has_active)
                    q.region = std::move(on_inactive);
                next.push_back(std::move(q));
            }
            if (has_active) {
                GaussianPiece q = std::move(p);
                if (has_inactive)
                    q.region = std::move(on_active);
                next.push_back(mapped_piece(q, m));
            }
        }
        pieces = std::move(next);
        if (pieces.size() > piece_cap)
            throw ComplexityError("pushforward piece count exceeded cap (" +
                                      std::to_string(pieces.size()) + " pieces)",
                                  pieces.size());
    }
    return PiecewiseGaussianDensity(initial.mean_base(), initial.cov_base(), std::move(pieces));
}

double log_density_at(const PiecewiseGaussianDensity& initial, const ControlSchedule& schedule,
                      double t, const Vec& x) {
    const FlowResult back = flow_inverse(schedule, x, t);
    return initial.log_eval(back.point) + back.log_jacobian;
}

double density_at(const PiecewiseGaussianDensity& initial, const ControlSchedule& schedule,
                  double t, const Vec& x) {
    return std::exp(log_density_at(initial, schedule, t, x));
}

} // namespace relflow
