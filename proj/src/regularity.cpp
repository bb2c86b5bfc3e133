#include "fplap/regularity.hpp"

#include "fplap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fplap {

namespace {

/// Closed-ball membership with a relative slack so nodes on the sphere count.
bool in_ball(double x, double c, double r)
{
    return std::abs(x - c) <= r * (1.0 + 1e-12);
}

/// Integral of g(u(x)) over [lo, hi] for the piecewise-linear u, split at nodes.
template <typename G>
double integrate_interpolant(const DiscreteFunction& u, double lo, double hi, G&& g)
{
    const Grid& grid = u.grid;
    std::vector<double> cuts{lo};
    for (int i = 0; i <= grid.n + 1; ++i) {
        const double x = grid.node(i);
        if (x > lo && x < hi)
            cuts.push_back(x);
    }
    cuts.push_back(hi);
    std::vector<Panel> panels;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        panels.push_back({cuts[k], cuts[k + 1]});
    return integrate_panels([&](double x) { return g(u(x)); }, panels, gauss_legendre(8));
}

} // namespace

ExponentFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, int min_samples)
{
    if (x.size() != y.size())
        throw DomainError("loglog_fit: size mismatch");
    ExponentFit fit;
    std::vector<double> lx, ly;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            ++fit.excluded;
            continue;
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        xmin = std::min(xmin, x[i]);
        xmax = std::max(xmax, x[i]);
    }
    fit.samples = static_cast<int>(lx.size());
    if (fit.samples < std::max(min_samples, 2)) {
        fit.defined = false;
        fit.exponent = fit.intercept = fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    fit.window = {xmin, xmax};
    const Eigen::Map<const Eigen::ArrayXd> X(lx.data(), fit.samples), Y(ly.data(), fit.samples);
    const double mx = X.mean(), my = Y.mean();
    const double sxx = (X - mx).square().sum(), sxy = ((X - mx) * (Y - my)).sum(), syy = (Y - my).square().sum();
    if (!(sxx > 0.0)) {
        fit.defined = false;
        fit.exponent = fit.intercept = fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

ExponentFit boundary_exponent(const DiscreteFunction& u, double window_frac)
{
    if (!(window_frac > 0.0 && window_frac < 0.5))
        throw DomainError("boundary_exponent: window_frac must lie in (0, 0.5)");
    const Grid& g = u.grid;
    const double limit = window_frac * g.length();
    std::vector<double> dist, vals;
    for (int i = 1; i <= g.n; ++i) {
        const double x = g.node(i);
        const double d = std::min(x - g.a, g.b - x);
        if (d <= limit) {
            dist.push_back(d);
            vals.push_back(u.values[i - 1]);
        }
    }
    ExponentFit fit = loglog_fit(dist, vals, 8);
    if (!fit.defined)
        throw DomainError("boundary_exponent: fewer than 8 usable nodes in the boundary window");
    return fit;
}

OscillationProfile oscillation_profile(const DiscreteFunction& u, double center, double R0, int levels)
{
    const Grid& g = u.grid;
    if (levels < 3)
        throw DomainError("oscillation_profile: levels must be >= 3");
    if (!(R0 > 0.0) || center - R0 < g.a - 1e-12 * g.length() || center + R0 > g.b + 1e-12 * g.length())
        throw DomainError("oscillation_profile: ball leaves the domain");
    const double r_min = R0 / std::pow(4.0, levels - 1);
    if (r_min < 4.0 * g.h() * (1.0 - 1e-12))
        throw DomainError("oscillation_profile: smallest radius is under-resolved (< 4h)");

    OscillationProfile prof;
    prof.center = center;
    const Eigen::VectorXd U = u.padded();
    for (int j = 0; j < levels; ++j) {
        const double r = R0 / std::pow(4.0, j);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = 0; i <= g.n + 1; ++i)
            if (in_ball(g.node(i) - center, 0.0, r)) {
                lo = std::min(lo, U[i]);
                hi = std::max(hi, U[i]);
            }
        prof.radii.push_back(r);
        prof.osc.push_back(hi >= lo ? hi - lo : 0.0);
    }
    return prof;
}

ExponentFit holder_fit(const OscillationProfile& profile)
{
    if (profile.radii.size() != profile.osc.size() || profile.radii.size() < 3)
        throw DomainError("holder_fit: profile needs at least 3 levels");
    return loglog_fit(profile.radii, profile.osc, 3);
}

double holder_seminorm(const DiscreteFunction& u, std::pair<double, double> region, double alpha)
{
    const Grid& g = u.grid;
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw DomainError("holder_seminorm: alpha must lie in (0, 1]");
    const double tol = 1e-12 * g.length();
    if (!(region.first < region.second) || region.first < g.a - tol || region.second > g.b + tol)
        throw DomainError("holder_seminorm: region must be a sub-interval of [a, b]");
    const Eigen::VectorXd U = u.padded();
    std::vector<int> idx;
    for (int i = 0; i <= g.n + 1; ++i) {
        const double x = g.node(i);
        if (x >= region.first - tol && x <= region.second + tol)
            idx.push_back(i);
    }
    if (idx.size() < 2)
        throw DomainError("holder_seminorm: region contains fewer than two nodes");
    const int k = static_cast<int>(idx.size());
    // Pairs at index offset d share the distance d h.
    double best = 0.0;
    for (int d = 1; d < k; ++d) {
        const double denom = std::pow(d * g.h(), alpha);
        double m = 0.0;
        for (int i = 0; i + d < k; ++i)
            m = std::max(m, std::abs(U[idx[i + d]] - U[idx[i]]));
        best = std::max(best, m / denom);
    }
    return best;
}

HarnackReport harnack_report(const DiscreteFunction& u, double center, double R, double K, const FracParams& params,
                             const PVConfig& cfg, const StiffnessQuadrature* sq)
{
    params.validate();
    const Grid& g = u.grid;
    if (!(R > 0.0) || !(K >= 0.0))
        throw DomainError("harnack_report: requires R > 0 and K >= 0");
    if (center - R / 3.0 < g.a || center + R / 3.0 > g.b)
        throw DomainError("harnack_report: B_{R/3}(center) leaves the domain");
    const double q = params.q();
    const Eigen::VectorXd U = u.padded();

    HarnackReport rep;
    double inf_q = std::numeric_limits<double>::infinity();
    double sup_b = -inf_q;
    for (int i = 0; i <= g.n + 1; ++i) {
        const double x = g.node(i);
        if (in_ball(x, center, R / 4.0))
            inf_q = std::min(inf_q, U[i]);
        if (in_ball(x, center, R))
            sup_b = std::max(sup_b, U[i]);
    }
    if (!std::isfinite(inf_q))
        throw DomainError("harnack_report: no node inside B_{R/4}");
    // The zero extension is part of u wherever the ball leaves the domain.
    if (center - R < g.a || center + R > g.b)
        sup_b = std::max(sup_b, 0.0);
    rep.inf_quarter = inf_q;
    rep.sup_ball = sup_b;

    auto powq = [q](double v) { return signed_power(v, q); };
    const double mass = integrate_interpolant(u, center - R, center - R / 2.0, powq) +
                        integrate_interpolant(u, center + R / 2.0, center + R, powq);
    const double mean = mass / R;
    rep.annulus_mean = mean == 0.0 ? 0.0 : signed_power(mean, 1.0 / q);

    Field1 u_neg = u.to_field();
    u_neg.evaluator = [v = u](const Point<1>& x) { return std::max(-v(x[0]), 0.0); };
    rep.tail_neg = tail(u_neg, center, R, params, cfg);
    rep.K_term = std::pow(K * std::pow(R, params.ps()), 1.0 / q);
    rep.sigma_emp = rep.annulus_mean > 0.0 ? (rep.inf_quarter + rep.K_term) / rep.annulus_mean
                                           : std::numeric_limits<double>::quiet_NaN();

    StiffnessQuadrature own;
    if (!sq) {
        own = assemble(g, params);
        sq = &own;
    } else if (!(sq->grid == g)) {
        throw DomainError("harnack_report: quadrature grid mismatch");
    }
    Eigen::VectorXd pairing(g.n);
    seminorm_energy_gradient(u.values, *sq, pairing);
    const double scale = pairing.lpNorm<Eigen::Infinity>() + K * g.h();
    double worst = 0.0;
    for (int i = 1; i <= g.n; ++i)
        if (in_ball(g.node(i), center, R))
            worst = std::min(worst, (pairing[i - 1] + K * g.h()) / (scale > 0.0 ? scale : 1.0));
    rep.supersolution_defect = worst;
    rep.supersolution = worst >= -1e-6;
    return rep;
}

double q_stat(const DiscreteFunction& u, double x0, double R, const FracParams& params, const PVConfig& cfg)
{
    if (!(R > 0.0))
        throw DomainError("q_stat: R must be positive");
    const Grid& g = u.grid;
    double sup = std::max(std::abs(u(x0 - R)), std::abs(u(x0 + R)));
    const Eigen::VectorXd U = u.padded();
    for (int i = 0; i <= g.n + 1; ++i)
        if (in_ball(g.node(i), x0, R))
            sup = std::max(sup, std::abs(U[i]));
    return sup + tail(u.to_field(), x0, R, params, cfg);
}

std::vector<double> delta_s_pv_probe(std::pair<double, double> domain, const FracParams& params,
                                     const PVConfig& cfg, const std::vector<double>& probes)
{
    const auto [a, b] = domain;
    const Field1 field = distance_power_field(a, b, params.s);
    const bool bounded = std::isfinite(b);
    std::vector<double> out;
    out.reserve(probes.size());
    for (double x : probes) {
        const double d = bounded ? std::min(x - a, b - x) : x - a;
        if (!(d > 0.0))
            throw DomainError("delta_s_pv_probe: probe outside the domain");
        if (bounded) {
            const double L = b - a;
            if (d < 0.01 * L * (1.0 - 1e-12) || d > 0.2 * L * (1.0 + 1e-12))
                throw DomainError("delta_s_pv_probe: probe distance must lie in [0.01, 0.2] |Omega|");
        }
        out.push_back(pv_fplap_point(field, x, params, cfg));
    }
    return out;
}

} // namespace fplap
