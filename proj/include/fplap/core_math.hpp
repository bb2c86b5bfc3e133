#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fplap {

/// Raised when an argument violates the hypotheses of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The triple (N, s, p) fixing the kernel |x-y|^{-N-ps}.
struct FracParams {
    int dim = 1;
    double s = 0.5;
    double p = 2.0;

    /// Validating constructor; throws DomainError on 0<s<1, p>1, dim>=1 violations.
    static FracParams make(int dim, double s, double p);

    double q() const { return p - 1.0; }
    double ps() const { return p * s; }
    double kernel_exponent() const { return dim + p * s; }

    void validate() const;
};

/// |a|^{q-1} a, the odd extension of t -> t^q.
template <typename Scalar>
Scalar signed_power(Scalar a, Scalar q)
{
    if (!(q > Scalar(0)))
        throw DomainError("signed_power: exponent must be positive");
    if (a == Scalar(0))
        return Scalar(0);
    using std::abs;
    using std::pow;
    const Scalar m = pow(abs(a), q);
    return a < Scalar(0) ? -m : m;
}

/// Identifiers of the elementary inequalities for t -> t^q.
enum class InequalityId { in3, in2, in4, in6, in7, in1 };

InequalityId parse_inequality_id(std::string_view name);
std::string_view to_string(InequalityId id);

/// Explicit C_theta of (a+b)^q - a^q <= theta a^q + C_theta b^q, q >= 1.
double c_theta(double q, double theta);

/// Explicit C_M of a^q - (a-b)^q <= C_M max{b, b^q}, |a| <= M, b >= 0.
double c_m(double q, double M);

/// Slack of an elementary inequality: larger side minus smaller side.
/// Non-negative whenever the inequality holds. theta is required for in7,
/// M for in6. Throws DomainError outside the hypotheses.
double inequality_gap(InequalityId id, double a, double b, double q,
                      std::optional<double> theta = std::nullopt,
                      std::optional<double> M = std::nullopt);

/// (x^s - (x-eps)^s) / eps^s for 0 < eps <= x. Lies in (0, 1].
double psi(double x, double eps, double s);

/// Partial sum of S(alpha) = sum_{h>=1} (4^{alpha h}-1)^{p-1} / 4^{p s h},
/// truncated once the geometric majorant of the remainder drops below tol.
double s_alpha_sum(double alpha, const FracParams& params, double tol = 1e-14);

/// mean((u^r - lambda^r)^{1/r}) - (1 - 2^{(r-1)/r} lambda) with signed powers.
/// The samples must average to 1 (within 1e-12).
double jensen_gap(const Eigen::Ref<const Eigen::VectorXd>& samples, double r, double lambda);

} // namespace fplap
