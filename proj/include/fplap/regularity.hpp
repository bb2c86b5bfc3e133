#pragma once

#include "fplap/fem.hpp"

#include <utility>
#include <vector>

namespace fplap {

/// Least-squares line through (log x, log y).
struct ExponentFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::pair<double, double> window{0.0, 0.0}; ///< range of x actually fitted
    int samples = 0;
    int excluded = 0;     ///< pairs dropped because y <= 0
    bool defined = true;  ///< false when too few positive samples remain
};

/// OLS fit of log y against log x over pairs with x > 0 and y > 0.
ExponentFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, int min_samples);

/// Slope of log u(x_i) against log delta(x_i) over nodes with delta <= window_frac |Omega|.
/// Requires at least 8 usable nodes.
ExponentFit boundary_exponent(const DiscreteFunction& u, double window_frac = 0.1);

struct OscillationProfile {
    double center = 0.0;
    std::vector<double> radii; ///< R_j = R0 / 4^j
    std::vector<double> osc;   ///< max - min of nodal values in the closed ball B_{R_j}
};

OscillationProfile oscillation_profile(const DiscreteFunction& u, double center, double R0, int levels = 5);

/// Slope of log osc against log R. Needs 3 positive levels, otherwise defined = false.
ExponentFit holder_fit(const OscillationProfile& profile);

/// max |u_i - u_j| / |x_i - x_j|^alpha over nodes (boundary nodes included) in [lo, hi].
double holder_seminorm(const DiscreteFunction& u, std::pair<double, double> region, double alpha);

struct HarnackReport {
    double inf_quarter = 0.0;   ///< min of u over B_{R/4}
    double annulus_mean = 0.0;  ///< (mean of u^{p-1} over B_R \ B_{R/2})^{1/(p-1)}
    double tail_neg = 0.0;      ///< Tail(u_-; center, R)
    double sup_ball = 0.0;      ///< max of u over B_R
    double K_term = 0.0;        ///< (K R^{ps})^{1/(p-1)}
    double sigma_emp = 0.0;     ///< (inf_quarter + K_term) / annulus_mean; NaN if annulus_mean <= 0
    bool supersolution = false; ///< weak pairing against nonnegative hats in B_R is >= -K
    double supersolution_defect = 0.0; ///< most negative normalized pairing (0 if none)
};

/// Ball statistics of the weak Harnack inequality. sq may be null, in which case
/// the energy quadrature is assembled with defaults.
HarnackReport harnack_report(const DiscreteFunction& u, double center, double R, double K, const FracParams& params,
                             const PVConfig& cfg = {}, const StiffnessQuadrature* sq = nullptr);

/// sup_{B_R(x0)} |u| + Tail(u; x0, R).
double q_stat(const DiscreteFunction& u, double x0, double R, const FracParams& params, const PVConfig& cfg = {});

/// Principal value of min(x-a, b-x)_+^s at each probe; b may be +infinity.
std::vector<double> delta_s_pv_probe(std::pair<double, double> domain, const FracParams& params,
                                     const PVConfig& cfg, const std::vector<double>& probes);

} // namespace fplap
