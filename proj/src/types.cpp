#include "relflow/types.hpp"
#include "relflow/errors.hpp"

#include <cmath>
#include <string>

namespace relflow {

namespace {
bool all_finite(const Vec& v) {
    return v.allFinite();
}
} // namespace

void ControlSchedule::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ValidationError("schedule horizon must be positive and finite");
    if (segments.empty())
        throw ValidationError("schedule has no segments");
    const int d = dimension();
    const double tol = 1e-12 * std::max(1.0, horizon);
    if (std::abs(segments.front().t_start) > tol)
        throw ValidationError("first segment must start at t = 0");
    if (std::abs(segments.back().t_end - horizon) > tol)
        throw ValidationError("last segment must end at t = horizon");
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const ControlSegment& s = segments[k];
        if (!(s.t_start < s.t_end))
            throw ValidationError("segment " + std::to_string(k) + " has t_start >= t_end");
        if (s.w.size() != d || s.a.size() != d)
            throw ValidationError("segment " + std::to_string(k) + " has inconsistent dimension");
        if (!all_finite(s.w) || !all_finite(s.a) || !std::isfinite(s.b))
            throw ValidationError("segment " + std::to_string(k) + " has non-finite parameters");
        if (k > 0 && std::abs(segments[k - 1].t_end - s.t_start) > tol)
            throw ValidationError("segments " + std::to_string(k - 1) + "," + std::to_string(k) +
                                  " are not contiguous");
    }
}

ControlSchedule ControlSchedule::identity(int dim, double T) {
    ControlSchedule s;
    s.horizon = T;
    ControlSegment seg;
    seg.t_start = 0.0;
    seg.t_end = T;
    seg.w = Vec::Zero(dim);
    seg.a = Vec::Zero(dim);
    seg.b = 0.0;
    s.segments.push_back(seg);
    return s;
}

ControlSchedule ControlSchedule::followed_by(const ControlSchedule& other) const {
    if (segments.empty())
        return other;
    if (other.segments.empty())
        return *this;
    const double tol = 1e-12 * std::max(1.0, std::max(horizon, other.horizon));
    if (std::abs(other.segments.front().t_start - segments.back().t_end) > tol)
        throw ValidationError("cannot concatenate schedules with a time gap");
    ControlSchedule out = *this;
    out.segments.insert(out.segments.end(), other.segments.begin(), other.segments.end());
    out.horizon = other.horizon;
    return out;
}

} // namespace relflow
