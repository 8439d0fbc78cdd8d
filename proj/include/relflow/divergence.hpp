#ifndef RELFLOW_DIVERGENCE_HPP
#define RELFLOW_DIVERGENCE_HPP

#include "relflow/density.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace relflow {

enum class EstimatorMethod { quadrature, monte_carlo };

/// One divergence estimate. Quadrature error bars are the Richardson gap
/// between two refinement levels; Monte Carlo error bars are standard errors.
struct DivergenceEstimate {
    double value = 0.0;
    EstimatorMethod method = EstimatorMethod::quadrature;
    double error_bar = 0.0;
    std::optional<std::uint64_t> seed;
};

/// Integration domain control. By default the domain is the box covering
/// 1 - 1e-8 of the reference (denominator / second) density's mass.
struct DomainSpec {
    std::optional<double> halfwidth; // override box half-width
    double coverage = 1.0 - 1e-8;
    int cells_per_axis = 0;  // 0 -> per-dimension default
    int mc_samples = 1 << 16;
};

// Conventions: TV is the unnormalized L1 distance, integral of |rho1 - rho2|,
// with range [0, 2]. (The halved convention is also common; this library
// consistently uses the L1 one.)

DivergenceEstimate kl(const Density& rho_num, const Density& rho_den,
                      EstimatorMethod method = EstimatorMethod::quadrature,
                      std::optional<std::uint64_t> seed = {}, const DomainSpec& dom = {});

DivergenceEstimate tv(const Density& rho1, const Density& rho2,
                      EstimatorMethod method = EstimatorMethod::quadrature,
                      std::optional<std::uint64_t> seed = {}, const DomainSpec& dom = {});

DivergenceEstimate hellinger_sq(const Density& rho1, const Density& rho2,
                                EstimatorMethod method = EstimatorMethod::quadrature,
                                std::optional<std::uint64_t> seed = {}, const DomainSpec& dom = {});

/// Generic f-divergence D_f(mu1, mu2) = integral of f(rho1/rho2) rho2,
/// for convex f with f(1) = 0 (supplied by the caller).
DivergenceEstimate f_divergence(const std::function<double(double)>& f,
                                const Density& rho1, const Density& rho2,
                                EstimatorMethod method = EstimatorMethod::quadrature,
                                std::optional<std::uint64_t> seed = {}, const DomainSpec& dom = {});

/// Renyi divergence of order lambda (> 0, != 1). A divergent integral is
/// reported as value = +infinity, not an exception.
DivergenceEstimate renyi(double lambda, const Density& rho1, const Density& rho2,
                         EstimatorMethod method = EstimatorMethod::quadrature,
                         std::optional<std::uint64_t> seed = {}, const DomainSpec& dom = {});

/// sup rho_num / rho_den over a dense grid plus an outward ray scan.
/// Returns +infinity when the ratio keeps growing along some ray.
double sup_ratio(const Density& rho_num, const Density& rho_den, const DomainSpec& dom = {});

struct PinskerCertificates {
    double kl_value = 0.0;
    double tv_value = 0.0;
    double sup_ratio_value = 1.0;
    bool pinsker_ok = false;
    double pinsker_slack = 0.0;
    bool reverse_applicable = false;
    bool reverse_pinsker_ok = false;
    double reverse_slack = 0.0;
};

/// Evaluates TV <= sqrt(2 KL(mu2 || mu1)) and, when the density ratio is
/// bounded, KL <= (log S / (1 - 1/S)) TV / 2 with S = sup rho2/rho1.
PinskerCertificates pinsker_certificates(const Density& rho2, const Density& rho1,
                                         const DomainSpec& dom = {});

/// CSV row "name,value,error_bar,method,seed" for an estimate.
std::string divergence_csv_row(const std::string& name, const DivergenceEstimate& e);

} // namespace relflow

#endif
