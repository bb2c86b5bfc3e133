#include "fplap/scalar_field.hpp"

#include "fplap/core_math.hpp"

#include <cmath>
#include <limits>

namespace fplap {

namespace {

std::vector<double> to_line_params(const std::vector<double>& pts, double origin, double dir)
{
    std::vector<double> t;
    if (dir == 0.0)
        return t;
    t.reserve(pts.size());
    for (double b : pts)
        if (std::isfinite(b))
            t.push_back((b - origin) / dir);
    return t;
}

} // namespace

Field1 make_field_1d(std::function<double(double)> f, DecayClass decay, LocalProfile profile,
                     std::vector<double> plain_breaks, std::vector<double> singular_breaks)
{
    Field1 u;
    u.evaluator = [f = std::move(f)](const Point<1>& x) { return f(x[0]); };
    u.decay = decay;
    u.profile = profile;
    u.line_breaks = [plain = std::move(plain_breaks), singular = std::move(singular_breaks)](
                        const Point<1>& o, const Point<1>& d) {
        return LineBreaks{to_line_params(plain, o[0], d[0]), to_line_params(singular, o[0], d[0])};
    };
    return u;
}

Field1 with_support(Field1 u, double lo, double hi)
{
    if (!(hi > lo))
        throw DomainError("with_support: empty interval");
    u.decay = DecayClass::compact;
    u.support_center = Point<1>::Constant(0.5 * (lo + hi));
    u.support_radius = 0.5 * (hi - lo);
    return u;
}

Field1 halfline_field(double s)
{
    return make_field_1d([s](double x) { return x > 0.0 ? std::pow(x, s) : 0.0; },
                         DecayClass::holder_s, LocalProfile::half_line, {}, {0.0});
}

Field1 distance_power_field(double a, double b, double s)
{
    if (!(b > a))
        throw DomainError("distance_power_field: requires a < b");
    auto f = [a, b, s](double x) {
        const double d = std::min(x - a, b - x);
        return d > 0.0 ? std::pow(d, s) : 0.0;
    };
    if (!std::isfinite(b))
        return make_field_1d(f, DecayClass::holder_s, LocalProfile::half_line, {}, {a});
    Field1 u = make_field_1d(f, DecayClass::compact, LocalProfile::half_line, {0.5 * (a + b)}, {a, b});
    return with_support(std::move(u), a, b);
}

Field1 constant_field(double c)
{
    return make_field_1d([c](double) { return c; }, DecayClass::bounded, LocalProfile::piecewise_affine);
}

Field2 halfspace_field(double s)
{
    Field2 u;
    u.evaluator = [s](const Point<2>& x) { return x[1] > 0.0 ? std::pow(x[1], s) : 0.0; };
    u.decay = DecayClass::holder_s;
    u.profile = LocalProfile::half_line;
    u.line_breaks = [](const Point<2>& o, const Point<2>& d) {
        LineBreaks lb;
        if (d[1] != 0.0)
            lb.singular.push_back(-o[1] / d[1]);
        return lb;
    };
    return u;
}

ScalarField<2> rotated(const ScalarField<2>& u, const Eigen::Matrix2d& M)
{
    ScalarField<2> out = u;
    out.evaluator = [f = u.evaluator, M](const Point<2>& x) { return f(M * x); };
    if (u.support_radius)
        out.support_center = M.transpose() * u.support_center;
    if (u.line_breaks)
        out.line_breaks = [lb = u.line_breaks, M](const Point<2>& o, const Point<2>& d) {
            return lb(M * o, M * d);
        };
    return out;
}

} // namespace fplap
