#include "fplap/pv_quadrature.hpp"

#include "fplap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>

namespace fplap {

namespace {

enum class FarMode { closure, substitution };

/// Integral of F(r) r^{-1-ps} over (r_lo, infinity), or (r_lo, r_hi) when r_hi is finite.
struct RadialProblem {
    double r_lo = 0.0;
    double r_hi = std::numeric_limits<double>::infinity();
    bool grade_start = false;
    std::vector<std::pair<double, bool>> breaks; // (r, singular)
    FarMode far = FarMode::substitution;
    double far_value = 0.0; // F beyond the far cutoff under closure
    double far_cutoff = 0.0;
};

using Breakpoints = std::vector<std::pair<double, bool>>;

constexpr double kAdaptTol = 1e-10;
constexpr int kAdaptDepth = 6;

/// Sign changes of g on (lo, hi): sampled, then bisected.
template <typename G>
void collect_roots(G&& g, double lo, double hi, bool singular, Breakpoints& out)
{
    constexpr int kSamples = 16;
    double x0 = lo, g0 = g(lo);
    for (int i = 1; i <= kSamples; ++i) {
        const double x1 = i == kSamples ? hi : lo + (hi - lo) * i / kSamples;
        const double g1 = g(x1);
        if (g1 == 0.0 && g0 != 0.0 && i < kSamples) {
            out.emplace_back(x1, singular);
        } else if ((g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0)) {
            double a = x0, b = x1, ga = g0;
            for (;;) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b)
                    break;
                const double gm = g(m);
                if (gm == 0.0) {
                    a = b = m;
                    break;
                }
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            out.emplace_back(0.5 * (a + b), singular);
        }
        x0 = x1;
        g0 = g1;
    }
}

/// Sorted points with near-coincident entries merged; the singular flag wins.
Breakpoints merge_points(Breakpoints pts)
{
    std::sort(pts.begin(), pts.end());
    Breakpoints merged;
    for (const auto& pt : pts) {
        if (!merged.empty() && pt.first - merged.back().first <= 1e-14 * std::max(1.0, std::abs(pt.first)))
            merged.back().second = merged.back().second || pt.second;
        else
            merged.push_back(pt);
    }
    return merged;
}

/// `crossings` are functions of r whose zeros are kinks of F (singular when q < 1).
template <typename F>
double radial_integral(F&& F_of_r, RadialProblem prob, const FracParams& params, const PVConfig& cfg,
                       const std::vector<std::function<double(double)>>& crossings = {})
{
    const double ps = params.ps();
    const double s = params.s;
    const bool finite_end = std::isfinite(prob.r_hi);
    double T = finite_end ? prob.r_hi : prob.far_cutoff;
    if (!finite_end) {
        double max_break = 0.0;
        for (const auto& [r, sing] : prob.breaks)
            max_break = std::max(max_break, r);
        if (prob.far == FarMode::substitution)
            T = std::max({T, 2.0 * max_break, 2.0 * prob.r_lo});
    }

    std::vector<double> partial;
    const GaussRule& rule = gauss_legendre(cfg.gauss_order);
    auto kernel = [&](double r) { return F_of_r(r) * std::pow(r, -1.0 - ps); };

    if (T > prob.r_lo) {
        std::vector<std::pair<double, bool>> pts;
        pts.emplace_back(prob.r_lo, false);
        for (const auto& b : prob.breaks)
            if (b.first > prob.r_lo && b.first < T)
                pts.push_back(b);
        pts.emplace_back(T, false);
        Breakpoints merged = merge_points(std::move(pts));
        if (!crossings.empty()) {
            Breakpoints roots = merged;
            for (std::size_t k = 0; k + 1 < merged.size(); ++k)
                for (const auto& g : crossings)
                    collect_roots(g, merged[k].first, merged[k + 1].first, params.q() < 1.0, roots);
            merged = merge_points(std::move(roots));
        }
        for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
            const double lo = merged[k].first, hi = merged[k + 1].first;
            const bool at_start = k == 0 && prob.grade_start;
            const bool g_lo = merged[k].second || at_start;
            const bool g_hi = merged[k + 1].second;
            int depth = cfg.grading_depth;
            if (at_start)
                depth = std::max(depth, static_cast<int>(std::ceil(std::log2((hi - lo) / prob.r_lo))));
            const auto panels = graded_panels(lo, hi, g_lo, g_hi, depth);
            for (std::size_t i = 0; i < panels.size(); ++i) {
                const Panel& pn = panels[i];
                // Keep hi / lo <= 2 so the power kernel stays polynomial-like on each panel.
                const int pieces = pn.hi > 2.0 * pn.lo ? static_cast<int>(std::ceil(std::log2(pn.hi / pn.lo))) : 1;
                const double ratio = std::pow(pn.hi / pn.lo, 1.0 / pieces);
                double a = pn.lo;
                for (int j = 0; j < pieces; ++j) {
                    const double b = j + 1 == pieces ? pn.hi : a * ratio;
                    // Pieces touching a graded end keep the fixed rule; the rest adapt.
                    const bool fixed = (g_lo && i == 0 && j == 0) || (g_hi && i + 1 == panels.size() && j + 1 == pieces);
                    partial.push_back(fixed ? integrate_panels(kernel, {Panel{a, b}}, rule)
                                            : integrate_adaptive(kernel, Panel{a, b}, rule, kAdaptTol, kAdaptDepth));
                    a = b;
                }
            }
        }
    }

    if (!finite_end) {
        if (prob.far == FarMode::closure) {
            partial.push_back(prob.far_value * std::pow(T, -ps) / ps);
        } else {
            // r = T w^{-1/s} maps (T, inf) onto (0, 1).
            const double pre = std::pow(T, -ps) / s;
            auto g = [&](double w) { return F_of_r(T * std::pow(w, -1.0 / s)) * std::pow(w, params.p - 1.0); };
            for (const Panel& pn : graded_panels(0.0, 1.0, true, false, cfg.grading_depth))
                partial.push_back(pre * integrate_panels(g, {pn}, rule));
        }
    }
    return pairwise_sum(partial);
}

template <int Dim>
void check_admissible(const ScalarField<Dim>& u, const FracParams& params)
{
    if (!u.evaluator)
        throw DomainError("field has no evaluator");
    if (u.decay == DecayClass::compact && !u.support_radius)
        throw DomainError("compact field without a support radius");
    if (params.dim != Dim)
        throw DomainError("params.dim does not match the field dimension");
}

template <int Dim>
void check_local_profile(const ScalarField<Dim>& u, const FracParams& params)
{
    if (u.profile == LocalProfile::smooth && params.p < 2.0 && params.s >= 2.0 * (params.p - 1.0) / params.p)
        throw DomainError("pointwise value may diverge for smooth fields when p < 2 and s >= 2(p-1)/p");
}

/// Radial problem along the line x + t dir for the symmetric sum over +-dir.
template <int Dim>
RadialProblem line_problem(const ScalarField<Dim>& u, const Point<Dim>& x, const Point<Dim>& dir, double r_lo,
                           const PVConfig& cfg)
{
    RadialProblem prob;
    prob.r_lo = r_lo;
    const LineBreaks lb = u.breaks_along(x, dir);
    for (double t : lb.plain)
        if (t != 0.0)
            prob.breaks.emplace_back(std::abs(t), false);
    for (double t : lb.singular)
        if (t != 0.0)
            prob.breaks.emplace_back(std::abs(t), true);
    if (u.decay == DecayClass::compact) {
        prob.far = FarMode::closure;
        prob.far_cutoff = std::max(cfg.outer_cutoff, (x - u.support_center).norm() + *u.support_radius);
    } else {
        prob.far = FarMode::substitution;
        prob.far_cutoff = cfg.outer_cutoff;
    }
    return prob;
}

/// Angular panels on (0, pi), graded toward both ends.
std::vector<Panel> angular_panels(const PVConfig& cfg)
{
    std::vector<Panel> out;
    const int m = cfg.angular_panels;
    const double width = std::numbers::pi / m;
    const int depth = std::max(1, cfg.grading_depth / 2);
    for (int k = 0; k < m; ++k) {
        const double lo = k * width, hi = (k + 1) * width;
        auto part = graded_panels(lo, hi, k == 0, k == m - 1, k == 0 || k == m - 1 ? depth : 0);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

template <int Dim>
double pv_raw(const ScalarField<Dim>& u, const Point<Dim>& x, const FracParams& params, const PVConfig& cfg,
              double eps)
{
    const double q = params.q();
    const double ux = u(x);
    auto line_value = [&](const Point<Dim>& dir) {
        RadialProblem prob = line_problem(u, x, dir, eps, cfg);
        prob.grade_start = true;
        prob.far_value = 2.0 * signed_power(ux, q);
        auto D = [&](double r) {
            const Point<Dim> dz = r * dir;
            return signed_power(ux - u(x + dz), q) + signed_power(ux - u(x - dz), q);
        };
        const std::vector<std::function<double(double)>> crossings{
            [&](double r) { return ux - u(x + r * dir); }, [&](double r) { return ux - u(x - r * dir); }};
        return radial_integral(D, std::move(prob), params, cfg, crossings);
    };
    if constexpr (Dim == 1) {
        return 2.0 * line_value(Point<1>::Constant(1.0));
    } else {
        const GaussRule& rule = gauss_legendre(cfg.gauss_order);
        auto f = [&](double th) { return line_value(Point<2>(std::cos(th), std::sin(th))); };
        std::vector<double> partial;
        for (const Panel& pn : angular_panels(cfg))
            partial.push_back(integrate_panels(f, {pn}, rule));
        return 2.0 * pairwise_sum(partial);
    }
}

template <int Dim>
double pv_checked(const ScalarField<Dim>& u, const Point<Dim>& x, const FracParams& params, const PVConfig& cfg)
{
    params.validate();
    cfg.validate();
    check_admissible(u, params);
    check_local_profile(u, params);
    const double v = pv_raw(u, x, params, cfg, cfg.inner_cutoff);
    if (cfg.max_halving_change > 0.0) {
        const double v_half = pv_raw(u, x, params, cfg, 0.5 * cfg.inner_cutoff);
        if (!(std::abs(v_half - v) <= cfg.max_halving_change))
            throw ConvergenceError("principal value changed by " + std::to_string(std::abs(v_half - v)) +
                                   " when halving the inner cutoff");
    }
    return v;
}

template <int Dim>
double tail_impl(const ScalarField<Dim>& u, const Point<Dim>& x, double R, const FracParams& params,
                 const PVConfig& cfg)
{
    params.validate();
    cfg.validate();
    check_admissible(u, params);
    if (!(R > 0.0))
        throw DomainError("tail: R must be positive");
    const double q = params.q();
    if (u.decay == DecayClass::compact && (x - u.support_center).norm() + *u.support_radius <= R)
        return 0.0;
    auto line_value = [&](const Point<Dim>& dir) {
        RadialProblem prob = line_problem(u, x, dir, R, cfg);
        prob.far_value = 0.0;
        auto F = [&](double r) {
            const Point<Dim> dz = r * dir;
            return std::pow(std::abs(u(x + dz)), q) + std::pow(std::abs(u(x - dz)), q);
        };
        const std::vector<std::function<double(double)>> crossings{[&](double r) { return u(x + r * dir); },
                                                                   [&](double r) { return u(x - r * dir); }};
        return radial_integral(F, std::move(prob), params, cfg, crossings);
    };
    double integral;
    if constexpr (Dim == 1) {
        integral = line_value(Point<1>::Constant(1.0));
    } else {
        const GaussRule& rule = gauss_legendre(cfg.gauss_order);
        auto f = [&](double th) { return line_value(Point<2>(std::cos(th), std::sin(th))); };
        std::vector<double> partial;
        for (const Panel& pn : angular_panels(cfg))
            partial.push_back(integrate_panels(f, {pn}, rule));
        integral = pairwise_sum(partial);
    }
    integral = std::max(integral, 0.0);
    return std::pow(std::pow(R, params.ps()) * integral, 1.0 / q);
}

void check_halfline_args(double x, double eps, const FracParams& params)
{
    params.validate();
    if (params.dim != 1)
        throw DomainError("half-line pieces require dim = 1");
    if (!(x > 0.0))
        throw DomainError("half-line pieces require x > 0");
    if (!(eps > 0.0 && eps < x))
        throw DomainError("half-line pieces require 0 < eps < x");
}

} // namespace

void PVConfig::validate() const
{
    if (!(inner_cutoff > 0.0))
        throw DomainError("PVConfig: inner_cutoff must be positive");
    if (!(outer_cutoff > inner_cutoff) || !std::isfinite(outer_cutoff))
        throw DomainError("PVConfig: outer_cutoff must exceed inner_cutoff");
    if (grading_depth < 1 || grading_depth > 60)
        throw DomainError("PVConfig: grading_depth must lie in [1, 60]");
    if (gauss_order < 2 || gauss_order > kMaxGaussOrder)
        throw DomainError("PVConfig: gauss_order must lie in [2, 64]");
    if (angular_panels < 2)
        throw DomainError("PVConfig: angular_panels must be >= 2");
    if (!(max_halving_change >= 0.0))
        throw DomainError("PVConfig: max_halving_change must be non-negative");
}

double pv_fplap_point(const Field1& u, double x, const FracParams& params, const PVConfig& cfg)
{
    return pv_checked<1>(u, Point<1>::Constant(x), params, cfg);
}

double pv_fplap_point(const Field2& u, const Point<2>& x, const FracParams& params, const PVConfig& cfg)
{
    return pv_checked(u, x, params, cfg);
}

double halfline_I1(double x, const FracParams& params)
{
    params.validate();
    if (params.dim != 1)
        throw DomainError("halfline_I1 requires dim = 1");
    if (!(x > 0.0))
        throw DomainError("halfline_I1 requires x > 0");
    return std::pow(x, -params.s) / params.ps();
}

double halfline_I2(double x, double eps, const FracParams& params)
{
    check_halfline_args(x, eps, params);
    const double s = params.s, q = params.q(), ps = params.ps();
    const double xs = std::pow(x, s);
    // z = y - x ranges over (eps, eps + eps^2/(x-eps)).
    const double z_end = eps + eps * eps / (x - eps);
    auto f = [&](double z) {
        const double diff = -xs * std::expm1(s * std::log1p(z / x));
        return signed_power(diff, q) * std::pow(z, -1.0 - ps);
    };
    std::vector<Panel> panels;
    for (double lo = eps; lo < z_end;) {
        const double hi = std::min(2.0 * lo, z_end);
        panels.push_back({lo, hi});
        lo = hi;
    }
    return integrate_panels(f, panels, gauss_legendre(24));
}

double halfline_I3(double x, double eps, const FracParams& params)
{
    check_halfline_args(x, eps, params);
    const double ps_ = psi(x, eps, params.s);
    return std::pow(x, -params.s) / params.ps() * std::expm1(params.p * std::log(ps_));
}

double halfline_g1(double x, double eps, const FracParams& params)
{
    return halfline_I1(x, params) + halfline_I2(x, eps, params) + halfline_I3(x, eps, params);
}

double halfspace_pv_2d(const Point<2>& x, double eps, const FracParams& params, const PVConfig& cfg)
{
    if (!(x[1] > 0.0))
        throw DomainError("halfspace_pv_2d requires x_2 > 0");
    PVConfig c = cfg;
    c.inner_cutoff = eps;
    c.outer_cutoff = std::max(cfg.outer_cutoff, 2.0 * eps);
    return pv_fplap_point(halfspace_field(params.s), x, params, c);
}

double tail(const Field1& u, double x, double R, const FracParams& params, const PVConfig& cfg)
{
    return tail_impl<1>(u, Point<1>::Constant(x), R, params, cfg);
}

double tail(const Field2& u, const Point<2>& x, double R, const FracParams& params, const PVConfig& cfg)
{
    return tail_impl(u, x, R, params, cfg);
}

double perturbation_h(const Field1& u, const Field1& v, double x, const FracParams& params, const PVConfig& cfg)
{
    params.validate();
    cfg.validate();
    check_admissible(u, params);
    check_admissible(v, params);
    if (!v.support_radius)
        throw DomainError("perturbation_h: v must have compact support");
    const double lo = v.support_center[0] - *v.support_radius;
    const double hi = v.support_center[0] + *v.support_radius;
    const double dist = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
    if (dist <= cfg.inner_cutoff)
        throw DomainError("perturbation_h: support of v meets the neighbourhood of x");

    const double q = params.q(), ps = params.ps();
    const double ux = u(Point<1>::Constant(x));
    auto f = [&](double y) {
        const Point<1> py = Point<1>::Constant(y);
        const double d = ux - u(py);
        return (signed_power(d - v(py), q) - signed_power(d, q)) * std::pow(std::abs(x - y), -1.0 - ps);
    };

    std::vector<std::pair<double, bool>> pts{{lo, x < lo}, {hi, x > hi}};
    const Point<1> origin = Point<1>::Zero(), dir = Point<1>::Constant(1.0);
    for (const Field1* w : {&u, &v}) {
        const LineBreaks lb = w->breaks_along(origin, dir);
        for (double t : lb.plain)
            if (t > lo && t < hi)
                pts.emplace_back(t, false);
        for (double t : lb.singular)
            if (t >= lo && t <= hi)
                pts.emplace_back(t, true);
    }
    Breakpoints merged = merge_points(std::move(pts));
    Breakpoints roots = merged;
    for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
        const double a = merged[k].first, b = merged[k + 1].first;
        const bool sing = q < 1.0;
        collect_roots([&](double y) { const Point<1> py = Point<1>::Constant(y); return ux - u(py) - v(py); }, a, b,
                      sing, roots);
        collect_roots([&](double y) { return ux - u(Point<1>::Constant(y)); }, a, b, sing, roots);
    }
    merged = merge_points(std::move(roots));
    const GaussRule& rule = gauss_legendre(cfg.gauss_order);
    std::vector<double> partial;
    for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
        const bool g_lo = merged[k].second, g_hi = merged[k + 1].second;
        const auto panels = graded_panels(merged[k].first, merged[k + 1].first, g_lo, g_hi, cfg.grading_depth);
        for (std::size_t i = 0; i < panels.size(); ++i) {
            const bool end_panel = (g_lo && i == 0) || (g_hi && i + 1 == panels.size());
            partial.push_back(end_panel ? integrate_panels(f, {panels[i]}, rule)
                                        : integrate_adaptive(f, panels[i], rule, kAdaptTol, kAdaptDepth));
        }
    }
    return 2.0 * pairwise_sum(partial);
}

} // namespace fplap
