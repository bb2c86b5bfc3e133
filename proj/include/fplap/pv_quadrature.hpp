#pragma once

#include "fplap/core_math.hpp"
#include "fplap/scalar_field.hpp"

#include <stdexcept>

namespace fplap {

/// Raised when an estimate fails its own convergence check.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quadrature settings for principal-value evaluation.
struct PVConfig {
    double inner_cutoff = 1e-3; ///< radius of the excluded ball
    double outer_cutoff = 8.0;  ///< start of the far-field treatment
    int grading_depth = 24;     ///< halvings toward cutoffs and kinks
    int gauss_order = 8;        ///< points per panel
    int angular_panels = 16;    ///< uniform panels on (0, pi) for N = 2
    /// If positive, the estimate is recomputed at inner_cutoff / 2 and a
    /// ConvergenceError is thrown when the two differ by more than this.
    double max_halving_change = 0.0;

    void validate() const;
};

/// (-Delta)_p^s u(x) with the ball |z| <= inner_cutoff dropped.
/// N = 1 and N = 2 are supported.
double pv_fplap_point(const Field1& u, double x, const FracParams& params, const PVConfig& cfg);
double pv_fplap_point(const Field2& u, const Point<2>& x, const FracParams& params, const PVConfig& cfg);

/// Exterior piece of the half-line integral: x^{-s}/(ps).
double halfline_I1(double x, const FracParams& params);

/// Middle piece, Gauss quadrature over (x+eps, x^2/(x-eps)).
double halfline_I2(double x, double eps, const FracParams& params);

/// Closed-form remainder x^{-s}/(ps) (psi^p - 1); never positive.
double halfline_I3(double x, double eps, const FracParams& params);

/// One-sided truncated integral of x_+^s: I1 + I2 + I3.
double halfline_g1(double x, double eps, const FracParams& params);

/// Truncated operator of (x_2)_+^s on R^2 at cutoff eps.
double halfspace_pv_2d(const Point<2>& x, double eps, const FracParams& params, const PVConfig& cfg);

/// (R^{ps} int_{|y-x|>R} |u|^{p-1} |x-y|^{-N-ps} dy)^{1/(p-1)}.
double tail(const Field1& u, double x, double R, const FracParams& params, const PVConfig& cfg);
double tail(const Field2& u, const Point<2>& x, double R, const FracParams& params, const PVConfig& cfg);

/// 2 int_{supp v} [(u(x)-u(y)-v(y))^{p-1} - (u(x)-u(y))^{p-1}] |x-y|^{-1-ps} dy.
/// v must be compactly supported at distance > inner_cutoff from x.
double perturbation_h(const Field1& u, const Field1& v, double x, const FracParams& params,
                      const PVConfig& cfg);

} // namespace fplap
