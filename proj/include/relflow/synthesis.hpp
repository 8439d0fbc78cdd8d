#ifndef RELFLOW_SYNTHESIS_HPP
#define RELFLOW_SYNTHESIS_HPP

#include "relflow/density.hpp"
#include "relflow/flow.hpp"
#include "relflow/gaussian.hpp"
#include "relflow/types.hpp"

#include <cstdint>
#include <vector>

namespace relflow {

enum class EnvelopeMode { lower, upper };
enum class TailDirection {
    dominate_target,    ///< push the solution's tails above the target envelope
    dominated_by_target ///< push the solution's tails below the target envelope
};
enum class Objective { kl, reverse_kl };

/// Certificate constants of the tail-taming stage.
struct TailPlan {
    double sigma_env = 1.0; ///< envelope scale (below / above all piece spectra)
    double alpha = 1.0;     ///< envelope amplitude
    double omega = 1.0;     ///< taming rate, strictly above its threshold
    double M_bar = 1.0;     ///< interior box half-width left untouched
    double M_bar_bar = 1.0; ///< certified domination radius
    TailDirection direction = TailDirection::dominate_target;
};

struct SynthesisReport {
    ControlSchedule schedule;
    Objective objective = Objective::kl;
    double horizon = 1.0;
    double epsilon_request = 0.0;
    double eps_tv_used = 0.0;
    double tv_achieved = 0.0;
    double kl_achieved = 0.0;
    double sup_ratio = 1.0;
    double reverse_pinsker_bound = 0.0; ///< (S log S / (S-1)) TV / 2
    double interior_gap = 0.0;
    double outer_mass_solution = 0.0;
    double outer_mass_target = 0.0;
    int switch_count = 0;
    bool within_tolerance = false;
    TailPlan tail_plan;
};

/// Envelope scale from the exact piece decomposition: lower mode returns
/// sigma with sigma^2 = min spec of all piece covariances / 2, upper mode
/// 2 * max spec. Throws SpectralError on a non-positive-definite covariance.
double envelope_sigma(const PiecewiseGaussianDensity& solution, EnvelopeMode mode);

/// 1.05 * (2d / T_stage) log(sigma_target^2 / sigma_env^2), floored at 1.0
/// when the log is nonpositive (threshold vacuous).
double omega_threshold(int d, double T_stage, double sigma_target, double sigma_env);

/// The 2d tail-taming segments on [t0, t1]: per axis k a pair gated at
/// x_k = M_bar and x_k = -M_bar, with signs per the requested direction.
/// They leave the density on [-M_bar, M_bar]^d unchanged.
std::vector<ControlSegment> tail_taming_segments(int d, double M_bar, double omega,
                                                 double t0, double t1,
                                                 TailDirection direction);

struct TailCertificate {
    double M_bar_bar = 0.0;
    double worst_ratio = 0.0; ///< max of the dominated/dominating ratio outside
};

/// Scans rays beyond a doubling sequence of box radii for the strict
/// domination between the target envelope and the result density.
/// Returns the smallest certified radius; throws CertificationError with the
/// worst ratio when the cap is reached.
TailCertificate certify_tail_domination_detail(const PiecewiseGaussianDensity& result,
                                               const TargetSpec& target,
                                               const TailPlan& plan);
double certify_tail_domination(const PiecewiseGaussianDensity& result,
                               const TargetSpec& target, const TailPlan& plan);

/// Transport stage in one dimension: realizes the monotone rearrangement map
/// (piecewise-linear interpolation at grid knots) by translation and one-sided
/// dilation segments on [t0, t1]; the realized L1 gap is verified and the
/// grid is refined until it is <= eps_tv. Throws BudgetError if unreachable.
ControlSchedule tv_stage_1d(const Density& rho_base, const TargetSpec& target,
                            double eps_tv, double t0, double t1);

/// Best-effort transport stage in dimension >= 2: deterministic pattern
/// search over schedules with at most `budget` switches, minimizing the
/// grid L1 distance. The achieved value may exceed eps_tv; it is reported
/// honestly by synthesize.
ControlSchedule tv_stage_nd(const PiecewiseGaussianDensity& base, const TargetSpec& target,
                            double eps_tv, double t0, double t1, int budget,
                            std::uint64_t seed);

/// Full pipeline: transport on [0, T/2], tail taming on [T/2, T], certified
/// constants and measured divergences in the report.
SynthesisReport synthesize(const Vec& mean_base, const Mat& cov_base, const TargetSpec& target,
                           double eps, double T, Objective objective, std::uint64_t seed = 0);

} // namespace relflow

#endif
