#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

namespace fplap {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

/// Admissibility of the global integral against |x-y|^{-N-ps}.
enum class DecayClass { compact, bounded, holder_s };

/// Local behaviour near evaluation points. Only `smooth` fields with vanishing
/// gradient can make the principal value diverge for p < 2.
enum class LocalProfile { smooth, half_line, piecewise_affine };

/// Non-smooth points of a field restricted to the line origin + t * dir.
struct LineBreaks {
    std::vector<double> plain;    ///< derivative jumps; become panel boundaries
    std::vector<double> singular; ///< unbounded derivative (t^s type); graded
};

/// A function on R^Dim with the metadata quadrature needs.
template <int Dim>
struct ScalarField {
    using PointType = Point<Dim>;

    std::function<double(const PointType&)> evaluator;
    DecayClass decay = DecayClass::bounded;
    std::optional<double> support_radius; ///< support inside the ball about support_center
    PointType support_center = PointType::Zero();
    LocalProfile profile = LocalProfile::smooth;
    std::function<LineBreaks(const PointType&, const PointType&)> line_breaks;

    double operator()(const PointType& x) const { return evaluator(x); }

    LineBreaks breaks_along(const PointType& origin, const PointType& dir) const
    {
        return line_breaks ? line_breaks(origin, dir) : LineBreaks{};
    }
};

using Field1 = ScalarField<1>;
using Field2 = ScalarField<2>;

/// One-dimensional field from a scalar function and its break points.
Field1 make_field_1d(std::function<double(double)> f, DecayClass decay, LocalProfile profile,
                     std::vector<double> plain_breaks = {}, std::vector<double> singular_breaks = {});

/// Restrict a 1-D field to compact support [lo, hi].
Field1 with_support(Field1 u, double lo, double hi);

/// x -> x_+^s.
Field1 halfline_field(double s);

/// x -> min(x-a, b-x)_+^s; b may be +infinity.
Field1 distance_power_field(double a, double b, double s);

/// x -> c.
Field1 constant_field(double c);

/// x -> (x_2)_+^s on R^2.
Field2 halfspace_field(double s);

/// x -> h * u(x).
template <int Dim>
ScalarField<Dim> scaled(const ScalarField<Dim>& u, double h)
{
    ScalarField<Dim> out = u;
    out.evaluator = [f = u.evaluator, h](const Point<Dim>& x) { return h * f(x); };
    return out;
}

/// x -> u(rho * x).
template <int Dim>
ScalarField<Dim> dilated(const ScalarField<Dim>& u, double rho)
{
    ScalarField<Dim> out = u;
    out.evaluator = [f = u.evaluator, rho](const Point<Dim>& x) { return f(rho * x); };
    if (u.support_radius) {
        out.support_radius = *u.support_radius / rho;
        out.support_center = u.support_center / rho;
    }
    if (u.line_breaks)
        out.line_breaks = [lb = u.line_breaks, rho](const Point<Dim>& o, const Point<Dim>& d) {
            return lb(rho * o, rho * d);
        };
    return out;
}

/// x -> u(M x) for an orthogonal M.
ScalarField<2> rotated(const ScalarField<2>& u, const Eigen::Matrix2d& M);

/// x -> u(x) + v(x); metadata merged conservatively.
template <int Dim>
ScalarField<Dim> sum(const ScalarField<Dim>& u, const ScalarField<Dim>& v)
{
    ScalarField<Dim> out;
    out.evaluator = [f = u.evaluator, g = v.evaluator](const Point<Dim>& x) { return f(x) + g(x); };
    out.decay = static_cast<int>(u.decay) > static_cast<int>(v.decay) ? u.decay : v.decay;
    out.profile = static_cast<int>(u.profile) < static_cast<int>(v.profile) ? u.profile : v.profile;
    if (u.support_radius && v.support_radius) {
        // Bounding ball of the two balls.
        const Point<Dim> cu = u.support_center, cv = v.support_center;
        const double ru = *u.support_radius, rv = *v.support_radius;
        const double dist = (cv - cu).norm();
        if (dist + rv <= ru) {
            out.support_center = cu;
            out.support_radius = ru;
        } else if (dist + ru <= rv) {
            out.support_center = cv;
            out.support_radius = rv;
        } else {
            const double r = 0.5 * (dist + ru + rv);
            out.support_center = cu + (r - ru) / dist * (cv - cu);
            out.support_radius = r;
        }
    }
    out.line_breaks = [a = u.line_breaks, b = v.line_breaks](const Point<Dim>& o, const Point<Dim>& d) {
        LineBreaks lb;
        for (const auto& f : {a, b}) {
            if (!f)
                continue;
            LineBreaks part = f(o, d);
            lb.plain.insert(lb.plain.end(), part.plain.begin(), part.plain.end());
            lb.singular.insert(lb.singular.end(), part.singular.begin(), part.singular.end());
        }
        return lb;
    };
    return out;
}

} // namespace fplap
