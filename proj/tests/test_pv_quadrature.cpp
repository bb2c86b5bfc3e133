#include "fplap/pv_quadrature.hpp"

#include "fields.hpp"
#include "generators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <vector>

using namespace fplap;
using doctest::Approx;

namespace {

double pv1(const Field1& u, double x, const FracParams& fp, const PVConfig& cfg = {})
{
    return pv_fplap_point(u, x, fp, cfg);
}

double at(const Field1& u, double x) { return u(Point<1>::Constant(x)); }

/// Twice the one-sided truncated integral of a field supported in [lo, hi],
/// by adaptive Gauss-Kronrod between the break points.
double one_sided_reference(const Field1& u, double x, double eps, const FracParams& fp, std::vector<double> cuts,
                           double lo, double hi)
{
    using boost::math::quadrature::gauss_kronrod;
    const double q = fp.q(), ps = fp.ps(), ux = at(u, x);
    auto f = [&](double y) { return signed_power(ux - at(u, y), q) * std::pow(std::abs(x - y), -1.0 - ps); };
    cuts.push_back(lo);
    cuts.push_back(hi);
    cuts.push_back(x - eps);
    cuts.push_back(x + eps);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b <= a || (a >= x - eps && b <= x + eps))
            continue;
        acc += gauss_kronrod<double, 61>::integrate(f, a, b, 18, 1e-14);
    }
    // Outside [lo, hi] the field vanishes.
    acc += signed_power(ux, q) * (std::pow(x - lo, -ps) + std::pow(hi - x, -ps)) / ps;
    return 2.0 * acc;
}

} // namespace

TEST_CASE("pv of a constant field vanishes")
{
    for (double x : {-3.0, 0.0, 2.5})
        CHECK(pv1(constant_field(2.0), x, FracParams::make(1, 0.4, 3.0)) == 0.0);
}

TEST_CASE("x_+^s is a solution away from the origin")
{
    for (double s : {0.3, 0.5, 0.7})
        for (double p : {1.5, 2.0, 3.0}) {
            const FracParams fp = FracParams::make(1, s, p);
            PVConfig cfg;
            const double v = pv1(halfline_field(s), 1.0, fp, cfg);
            cfg.inner_cutoff /= 2.0;
            const double v_half = pv1(halfline_field(s), 1.0, fp, cfg);
            INFO("s=" << s << " p=" << p);
            CHECK(std::abs(v) <= 0.05);
            CHECK(std::abs(v_half) < std::abs(v));
            CHECK(v == Approx(2.0 * halfline_g1(1.0, 1e-3, fp)).epsilon(1e-10));
        }
}

TEST_CASE("cupola barrier at the origin against mpmath quadrature")
{
    struct Case {
        double s, p, value;
    };
    // tests/oracles/compute_oracles.py
    for (const Case& c : {Case{0.5, 2.0, 1.0541168241144418}, Case{0.3, 3.0, 1.8096716087685527},
                          Case{0.7, 1.5, 0.44913329648774405}}) {
        const double v = pv1(testing::cupola(c.s), 0.0, FracParams::make(1, c.s, c.p));
        INFO("s=" << c.s << " p=" << c.p);
        CHECK(v > 0.0);
        CHECK(v == Approx(c.value).epsilon(1e-9));
    }
}

TEST_CASE("pv agrees with twice the one-sided truncated integral")
{
    const FracParams fp = FracParams::make(1, 0.4, 2.5);
    const Field1 u = testing::bump(0.2, 0.9, 1.3);
    for (double x : {-0.3, 0.1, 0.6}) {
        const double ref = one_sided_reference(u, x, 1e-3, fp, {0.2}, -0.7, 1.1);
        CHECK(pv1(u, x, fp) == Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("pv homogeneity and dilation")
{
    testing::Gen gen(5);
    for (int k = 0; k < 12; ++k) {
        const FracParams fp = gen.params(0.2, 0.8, 2.0, 4.0);
        const Field1 u = distance_power_field(-1.0, 1.0, fp.s);
        const double x = gen.uniform(-0.8, 0.8), h = gen.log_uniform(0.1, 10.0);
        const double base = pv1(u, x, fp);
        CHECK(pv1(scaled(u, h), x, fp) == Approx(std::pow(h, fp.q()) * base).epsilon(1e-10));

        const double rho = gen.uniform(0.5, 3.0);
        PVConfig small, large;
        large.inner_cutoff = rho * small.inner_cutoff;
        large.outer_cutoff = rho * small.outer_cutoff;
        const double xr = x / rho;
        CHECK(pv1(dilated(u, rho), xr, fp, small) ==
              Approx(std::pow(rho, fp.ps()) * pv1(u, x, fp, large)).epsilon(1e-6));
    }
}

TEST_CASE("cutoff halving on a smooth compact field follows the remainder order")
{
    for (auto [s, p] : {std::pair{0.5, 2.0}, std::pair{0.3, 3.0}, std::pair{0.6, 2.5}}) {
        const FracParams fp = FracParams::make(1, s, p);
        const Field1 u = testing::bump(0.0, 1.0, 1.0);
        std::vector<double> v;
        for (double eps : {0.02, 0.01, 0.005, 0.0025}) {
            PVConfig cfg;
            cfg.inner_cutoff = eps;
            v.push_back(pv1(u, 0.35, fp, cfg));
        }
        const double r1 = (v[2] - v[1]) / (v[1] - v[0]);
        const double r2 = (v[3] - v[2]) / (v[2] - v[1]);
        const double expected = std::pow(2.0, -p * (1.0 - s));
        INFO("s=" << s << " p=" << p << " ratios " << r1 << " " << r2);
        CHECK(r2 == Approx(expected).epsilon(0.05));
        CHECK(std::abs(v[3] - v[2]) < std::abs(v[1] - v[0]));
    }
}

TEST_CASE("pv admissibility checks")
{
    const Field1 smooth = testing::bump(0.0, 1.0, 1.0);
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(1, 0.7, 1.5)), DomainError);
    CHECK_NOTHROW(pv1(smooth, 0.2, FracParams::make(1, 0.5, 1.5)));
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(2, 0.5, 2.0)), DomainError);

    Field1 no_radius = smooth;
    no_radius.support_radius.reset();
    CHECK_THROWS_AS(pv1(no_radius, 0.2, FracParams::make(1, 0.5, 2.0)), DomainError);

    PVConfig bad;
    bad.inner_cutoff = 10.0;
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(1, 0.5, 2.0), bad), DomainError);
    bad = PVConfig{};
    bad.gauss_order = 1;
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(1, 0.5, 2.0), bad), DomainError);
    bad = PVConfig{};
    bad.grading_depth = 0;
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(1, 0.5, 2.0), bad), DomainError);

    PVConfig strict;
    strict.max_halving_change = 1e-14;
    CHECK_THROWS_AS(pv1(smooth, 0.2, FracParams::make(1, 0.5, 2.0), strict), ConvergenceError);
    strict.max_halving_change = 1e-2;
    CHECK_NOTHROW(pv1(smooth, 0.2, FracParams::make(1, 0.5, 2.0), strict));
}

TEST_CASE("halfline_I1 is exact")
{
    const FracParams fp = FracParams::make(1, 0.5, 2.0);
    CHECK(halfline_I1(1.0, fp) == Approx(1.0).epsilon(1e-15));
    // mpmath quadrature of the defining integral at x = 1.
    CHECK(halfline_I1(1.0, FracParams::make(1, 0.3, 1.5)) == Approx(2.2222222222222216).epsilon(1e-8));
    CHECK(halfline_I1(1.0, FracParams::make(1, 0.7, 3.0)) == Approx(0.47619047619047627).epsilon(1e-8));
    testing::Gen gen(17);
    for (int k = 0; k < 50; ++k) {
        const FracParams g = gen.params();
        const double x = gen.log_uniform(1e-3, 1e3);
        CHECK(halfline_I1(4.0 * x, g) == Approx(std::pow(4.0, -g.s) * halfline_I1(x, g)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(halfline_I1(0.0, fp), DomainError);
    CHECK_THROWS_AS(halfline_I1(1.0, FracParams::make(2, 0.5, 2.0)), DomainError);
}

TEST_CASE("halfline_I3 closed form")
{
    const FracParams fp = FracParams::make(1, 0.5, 2.0);
    CHECK(halfline_I3(1.0, 0.5, fp) == Approx(2.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-13));
    CHECK(std::abs(halfline_I3(1.0, 1.0 - 1e-13, fp)) < 1e-5);
    CHECK(halfline_I3(1.0, 1e-12, fp) == Approx(-1.0).epsilon(1e-5));
    testing::Gen gen(21);
    for (int k = 0; k < 200; ++k) {
        const FracParams g = gen.params();
        const double x = gen.log_uniform(1e-2, 1e2);
        CHECK(halfline_I3(x, gen.uniform(1e-6, 1.0 - 1e-9) * x, g) <= 0.0);
    }
    CHECK_THROWS_AS(halfline_I3(1.0, 1.0, fp), DomainError);
    CHECK_THROWS_AS(halfline_I3(1.0, 0.0, fp), DomainError);
}

TEST_CASE("halfline_g1 splits into its three pieces and vanishes with eps")
{
    const FracParams fp = FracParams::make(1, 0.5, 2.0);
    const double g = halfline_g1(1.0, 1e-3, fp);
    // mpmath brute force of the truncated integral.
    CHECK(g == Approx(-0.00025000002604166075).epsilon(1e-8));
    CHECK(std::abs(g) < 0.05);
    CHECK(g == Approx(halfline_I1(1.0, fp) + halfline_I2(1.0, 1e-3, fp) + halfline_I3(1.0, 1e-3, fp)));
    CHECK_THROWS_AS(halfline_g1(1.0, 2.0, fp), DomainError);

    for (double s : {0.3, 0.5, 0.7})
        for (double p : {1.5, 2.0, 3.0}) {
            const FracParams f = FracParams::make(1, s, p);
            double prev = 1e300;
            for (double eps : {1e-2, 1e-3, 1e-4}) {
                double sup = 0.0;
                for (int k = 0; k <= 30; ++k)
                    sup = std::max(sup, std::abs(halfline_g1(0.5 + 1.5 * k / 30.0, eps, f)));
                CHECK(sup < prev);
                prev = sup;
            }
        }
}

TEST_CASE("half-space operator")
{
    const FracParams fp = FracParams::make(2, 0.5, 2.0);
    const PVConfig cfg;
    const double v = halfspace_pv_2d(Point<2>(0.0, 1.0), 1e-2, fp, cfg);
    CHECK(std::abs(v) < 0.1);
    CHECK(halfspace_pv_2d(Point<2>(3.7, 1.0), 1e-2, fp, cfg) == Approx(v).epsilon(1e-12));
    PVConfig c = cfg;
    c.inner_cutoff = 1e-2;
    CHECK(pv_fplap_point(halfspace_field(0.5), Point<2>(0.0, 1.0), fp, c) == Approx(v).epsilon(1e-14));
    CHECK(std::abs(halfspace_pv_2d(Point<2>(0.0, 1.0), 1e-3, fp, cfg)) < std::abs(v));
    CHECK_THROWS_AS(halfspace_pv_2d(Point<2>(0.0, 0.0), 1e-2, fp, cfg), DomainError);
}

TEST_CASE("rotated fields evaluate at rotated points")
{
    const FracParams fp = FracParams::make(2, 0.4, 2.5);
    const double th = 0.7;
    Eigen::Matrix2d M;
    M << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Field2 u = halfspace_field(0.4);
    const Point<2> x(0.2, 0.8);
    PVConfig cfg;
    cfg.inner_cutoff = 1e-2;
    const double direct = pv_fplap_point(u, x, fp, cfg);
    const double turned = pv_fplap_point(rotated(u, M), M.transpose() * x, fp, cfg);
    CHECK(turned == Approx(direct).epsilon(1e-6));
}

TEST_CASE("tail")
{
    const FracParams fp = FracParams::make(1, 0.5, 2.5);
    const PVConfig cfg;
    CHECK(tail(distance_power_field(-0.5, 0.5, 0.5), 0.0, 1.0, fp, cfg) == 0.0);
    for (double c : {0.5, 1.0, 3.0}) {
        const double expected = std::pow(2.0 / fp.ps(), 1.0 / fp.q()) * c;
        CHECK(tail(constant_field(c), 0.0, 1.0, fp, cfg) == Approx(expected).epsilon(1e-10));
    }
    // Tail(u; 0, 2R) = Tail(u(2 .); 0, R).
    const Field1 u = testing::bump(0.5, 2.0, 1.0);
    const double direct = tail(u, 0.0, 0.6, fp, cfg);
    CHECK(direct > 0.0);
    CHECK(tail(dilated(u, 2.0), 0.0, 0.3, fp, cfg) == Approx(direct).epsilon(1e-8));
    CHECK_THROWS_AS(tail(u, 0.0, 0.0, fp, cfg), DomainError);

    const FracParams fp2 = FracParams::make(2, 0.5, 2.0);
    CHECK(tail(halfspace_field(0.5), Point<2>(0.0, 1.0), 0.5, fp2, cfg) > 0.0);
}

TEST_CASE("perturbation term")
{
    const FracParams fp = FracParams::make(1, 0.4, 2.0);
    const PVConfig cfg;
    const Field1 u = distance_power_field(-1.0, 1.0, 0.4);
    CHECK(perturbation_h(u, testing::bump(1.5, 0.5, 0.0), 0.0, fp, cfg) == 0.0);
    // p = 2: h = -2 int v |x - y|^{-1-2s}, mpmath reference.
    CHECK(perturbation_h(u, testing::bump(1.5, 0.5, 0.8), 0.0, fp, cfg) ==
          Approx(-0.36404279612093327).epsilon(1e-10));
    CHECK_THROWS_AS(perturbation_h(u, testing::bump(0.3, 0.5, 0.8), 0.0, fp, cfg), DomainError);
    CHECK_THROWS_AS(perturbation_h(u, constant_field(1.0), 0.0, fp, cfg), DomainError);
}

TEST_CASE("nonlocal additivity on random separated pairs")
{
    testing::Gen gen(12);
    const PVConfig cfg;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double s = gen.uniform(0.2, 0.8), p = gen.uniform(1.5, 3.0);
        const FracParams fp = FracParams::make(1, s, p);
        const Field1 u = scaled(distance_power_field(-1.0, 1.0, s), gen.uniform(0.5, 2.0));
        const double x = gen.uniform(-0.8, 0.8);
        const double w = gen.uniform(0.1, 0.5);
        const double m = (gen.coin() ? 1.0 : -1.0) * gen.uniform(1.0 + w + 0.05, 3.0);
        const Field1 v = testing::bump(m, w, gen.uniform(-1.0, 1.0));
        Field1 uv = sum(u, v);
        uv.profile = u.profile;
        const double err = pv1(uv, x, fp, cfg) - pv1(u, x, fp, cfg) - perturbation_h(u, v, x, fp, cfg);
        worst = std::max(worst, std::abs(err));
    }
    CHECK(worst <= 1e-6);
}
