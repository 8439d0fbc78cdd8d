#ifndef RELFLOW_TYPES_HPP
#define RELFLOW_TYPES_HPP

#include <Eigen/Dense>
#include <vector>

namespace relflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One constant piece of the control path: on [t_start, t_end) the vector
/// field is v(x) = w (a'x + b)_+ .
struct ControlSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    Vec w;
    Vec a;
    double b = 0.0;

    double duration() const { return t_end - t_start; }
};

/// Piecewise-constant control on [0, horizon]. Segments are contiguous and
/// ordered; the switch count is the number of interior segment boundaries.
struct ControlSchedule {
    std::vector<ControlSegment> segments;
    double horizon = 0.0;

    int dimension() const { return segments.empty() ? 0 : static_cast<int>(segments.front().w.size()); }
    int switch_count() const { return segments.empty() ? 0 : static_cast<int>(segments.size()) - 1; }

    /// Throws ValidationError unless segments tile [0, horizon] exactly and
    /// all parameters are finite with consistent dimensions.
    void validate() const;

    /// Single zero-field segment spanning [0, T].
    static ControlSchedule identity(int dim, double T);

    /// Concatenation; `other` must start where this schedule ends.
    ControlSchedule followed_by(const ControlSchedule& other) const;
};

} // namespace relflow

#endif
