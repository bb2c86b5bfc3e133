#include "fplap/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fplap {

FracParams FracParams::make(int dim, double s, double p)
{
    FracParams fp{dim, s, p};
    fp.validate();
    return fp;
}

void FracParams::validate() const
{
    if (dim < 1)
        throw DomainError("FracParams: dim must be >= 1");
    if (!(s > 0.0 && s < 1.0))
        throw DomainError("FracParams: s must lie in (0,1)");
    if (!(p > 1.0) || !std::isfinite(p))
        throw DomainError("FracParams: p must lie in (1,inf)");
}

InequalityId parse_inequality_id(std::string_view name)
{
    if (name == "in3") return InequalityId::in3;
    if (name == "in2") return InequalityId::in2;
    if (name == "in4") return InequalityId::in4;
    if (name == "in6") return InequalityId::in6;
    if (name == "in7") return InequalityId::in7;
    if (name == "in1") return InequalityId::in1;
    throw DomainError("unknown inequality id: " + std::string(name));
}

std::string_view to_string(InequalityId id)
{
    switch (id) {
    case InequalityId::in3: return "in3";
    case InequalityId::in2: return "in2";
    case InequalityId::in4: return "in4";
    case InequalityId::in6: return "in6";
    case InequalityId::in7: return "in7";
    case InequalityId::in1: return "in1";
    }
    return "?";
}

double c_theta(double q, double theta)
{
    if (q < 1.0 || !(theta > 0.0))
        throw DomainError("c_theta: requires q >= 1 and theta > 0");
    // Taylor: (a+b)^q - a^q <= q (a+b)^{q-1} b <= K (a^{q-1} + b^{q-1}) b, then Young.
    const double K = q * std::max(1.0, std::pow(2.0, q - 2.0));
    if (q == 1.0)
        return 2.0 * K;
    const double q_conj = q / (q - 1.0);
    return std::pow(K, q) / (q * std::pow(theta * q_conj, q - 1.0)) + K;
}

double c_m(double q, double M)
{
    if (!(q > 0.0) || !(M > 0.0))
        throw DomainError("c_m: requires q > 0 and M > 0");
    if (q <= 1.0)
        return std::pow(2.0, 1.0 - q);
    return std::max(q * (std::pow(M, q - 1.0) + std::pow(2.0 * M, q - 1.0)),
                    1.0 + std::pow(2.0, q));
}

double inequality_gap(InequalityId id, double a, double b, double q,
                      std::optional<double> theta, std::optional<double> M)
{
    auto sp = [q](double t) { return signed_power(t, q); };
    switch (id) {
    case InequalityId::in3:
        if (a < 0.0 || b < 0.0 || q < 1.0)
            throw DomainError("in3: requires a,b >= 0 and q >= 1");
        return std::pow(2.0, q - 1.0) * (sp(a) + sp(b)) - sp(a + b);
    case InequalityId::in2:
        if (a < 0.0 || b < 0.0 || !(q > 0.0) || q > 1.0)
            throw DomainError("in2: requires a,b >= 0 and q in (0,1]");
        return sp(a) + sp(b) - sp(a + b);
    case InequalityId::in4:
        if (q < 1.0)
            throw DomainError("in4: requires q >= 1");
        return q * (std::pow(std::abs(a), q - 1.0) + std::pow(std::abs(b), q - 1.0)) * std::abs(a - b)
            - std::abs(sp(a) - sp(b));
    case InequalityId::in6: {
        if (!M || !(*M > 0.0) || std::abs(a) > *M || b < 0.0 || !(q > 0.0))
            throw DomainError("in6: requires |a| <= M, b >= 0, q > 0");
        return c_m(q, *M) * std::max(b, std::pow(b, q)) - (sp(a) - sp(a - b));
    }
    case InequalityId::in7: {
        if (!theta || !(*theta > 0.0) || a < 0.0 || b < 0.0 || q < 1.0)
            throw DomainError("in7: requires a,b >= 0, q >= 1, theta > 0");
        return *theta * sp(a) + c_theta(q, *theta) * sp(b) - (sp(a + b) - sp(a));
    }
    case InequalityId::in1:
        if (b < 0.0 || q < 1.0)
            throw DomainError("in1: requires b >= 0 and q >= 1");
        return sp(a) - sp(a - b) - std::pow(2.0, 1.0 - q) * sp(b);
    }
    throw DomainError("inequality_gap: unknown id");
}

double psi(double x, double eps, double s)
{
    if (!(eps > 0.0) || eps > x)
        throw DomainError("psi: requires 0 < eps <= x");
    if (!(s > 0.0 && s < 1.0))
        throw DomainError("psi: requires s in (0,1)");
    // x^s - (x-eps)^s = -x^s expm1(s log1p(-eps/x)) avoids cancellation for small eps.
    const double diff = eps == x ? std::pow(x, s) : -std::pow(x, s) * std::expm1(s * std::log1p(-eps / x));
    return diff / std::pow(eps, s);
}

double s_alpha_sum(double alpha, const FracParams& params, double tol)
{
    params.validate();
    if (!(tol > 0.0))
        throw DomainError("s_alpha_sum: tol must be positive");
    const double q = params.q();
    if (!(alpha > 0.0) || alpha * q >= params.ps())
        throw DomainError("s_alpha_sum: alpha must lie in (0, ps/(p-1))");

    // Each term is bounded by ratio^h.
    const double ratio = std::pow(4.0, alpha * q - params.ps());
    const double log4 = std::log(4.0);
    double sum = 0.0;
    double majorant = ratio;
    for (int h = 1; h < 100000; ++h, majorant *= ratio) {
        const double grow = std::expm1(alpha * h * log4);
        sum += std::pow(grow, q) * std::exp(-params.ps() * h * log4);
        if (majorant * ratio / (1.0 - ratio) < tol)
            break;
    }
    return sum;
}

double jensen_gap(const Eigen::Ref<const Eigen::VectorXd>& samples, double r, double lambda)
{
    if (samples.size() == 0)
        throw DomainError("jensen_gap: empty sample");
    if (r < 1.0 || lambda < 0.0)
        throw DomainError("jensen_gap: requires r >= 1 and lambda >= 0");
    if (std::abs(samples.mean() - 1.0) > 1e-12)
        throw DomainError("jensen_gap: samples must average to 1");

    const double lam_r = std::pow(lambda, r);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const double inner = signed_power(samples[i], r) - lam_r;
        acc += inner == 0.0 ? 0.0 : signed_power(inner, 1.0 / r);
    }
    return acc / static_cast<double>(samples.size()) - (1.0 - std::pow(2.0, (r - 1.0) / r) * lambda);
}

} // namespace fplap
