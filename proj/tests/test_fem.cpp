#include "fplap/fem.hpp"
#include "fplap/regularity.hpp"

#include "generators.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

using namespace fplap;
using doctest::Approx;

namespace {

/// Element midpoints nearest to the targets; a piecewise-linear field is affine there.
std::vector<double> midpoint_probes(const Grid& g, const std::vector<double>& targets)
{
    std::vector<double> out;
    for (double t : targets) {
        const int e = static_cast<int>(std::floor((t - g.a) / g.h()));
        out.push_back(g.a + (e + 0.5) * g.h());
    }
    return out;
}

double median_abs(std::vector<double> v)
{
    for (double& x : v)
        x = std::abs(x);
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

double torsion_amplitude(double s) { return std::sin(std::numbers::pi * s) / (2.0 * std::numbers::pi); }

} // namespace

TEST_CASE("grid and discrete functions")
{
    const Grid g = Grid::make(-1.0, 1.0, 3);
    CHECK(g.h() == Approx(0.5));
    CHECK(g.node(0) == -1.0);
    CHECK(g.node(4) == Approx(1.0));
    CHECK(g.elements() == 4);
    CHECK_THROWS_AS(Grid::make(1.0, 1.0, 3), DomainError);
    CHECK_THROWS_AS(Grid::make(0.0, 1.0, 1), DomainError);

    const DiscreteFunction u = DiscreteFunction::interpolate(g, [](double x) { return 1.0 - x * x; });
    CHECK(u.values.size() == 3);
    CHECK(u(0.0) == Approx(1.0));
    CHECK(u(0.25) == Approx(0.875));
    CHECK(u(-0.75) == Approx(0.375));
    CHECK(u(1.5) == 0.0);
    CHECK(u(-1.0) == 0.0);
    const Eigen::VectorXd pad = u.padded();
    CHECK(pad.size() == 5);
    CHECK(pad[0] == 0.0);
    CHECK(pad[4] == 0.0);
    const Field1 f = u.to_field();
    CHECK(f.decay == DecayClass::compact);
    CHECK(f(Point<1>::Constant(0.25)) == Approx(0.875));
    CHECK(DiscreteFunction::constant(g, 2.0).values.sum() == Approx(6.0));
    CHECK_THROWS_AS(DiscreteFunction(g, Eigen::VectorXd::Zero(2)), DomainError);
    CHECK_THROWS_AS(DiscreteFunction(g, Eigen::VectorXd::Constant(3, NAN)), DomainError);
}

TEST_CASE("assembly rules")
{
    const Grid g = Grid::make(0.0, 1.0, 24);
    FemConfig pc;
    pc.mode = StiffnessMode::graph_pc;
    CHECK_THROWS_AS(assemble(g, FracParams::make(1, 0.5, 2.0), pc), DomainError);
    CHECK_NOTHROW(assemble(g, FracParams::make(1, 0.3, 2.0), pc));
    CHECK_THROWS_AS(assemble(g, FracParams::make(2, 0.3, 2.0)), DomainError);
    FemConfig bad;
    bad.blocks = 0;
    CHECK_THROWS_AS(assemble(g, FracParams::make(1, 0.3, 2.0), bad), DomainError);

    const StiffnessQuadrature sq = assemble(g, FracParams::make(1, 0.4, 2.5));
    for (int e = 0; e < g.elements(); ++e)
        for (int f = e + 2; f < g.elements(); f += 3)
            CHECK((sq.pair_weights(e, f) - sq.pair_weights(f, e).transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(sq.pair_weights(0, 1), DomainError);
}

TEST_CASE("p = 2 energy is a symmetric positive definite quadratic form")
{
    testing::Gen gen(31);
    for (double s : {0.2, 0.5, 0.8}) {
        const Grid g = Grid::make(-1.0, 1.0, 20);
        const StiffnessQuadrature sq = assemble(g, FracParams::make(1, s, 2.0));
        const Eigen::MatrixXd A = stiffness_matrix_p2(sq);
        CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * A.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        for (int k = 0; k < 10; ++k) {
            const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0);
            const double quad = 0.5 * u.dot(A * u);
            CHECK(seminorm_energy(u, sq) == Approx(quad).epsilon(1e-12));
        }
        CHECK((linearized_matrix(gen.vector(g.n, -1.0, 1.0), sq, 1e-3) - A).cwiseAbs().maxCoeff() <=
              1e-12 * A.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(stiffness_matrix_p2(assemble(Grid::make(0.0, 1.0, 4), FracParams::make(1, 0.5, 3.0))),
                    DomainError);
}

TEST_CASE("single-hat energy against mpmath quadrature")
{
    struct Case {
        double s, p, value;
    };
    const Grid g = Grid::make(0.0, 1.0, 3);
    Eigen::VectorXd hat = Eigen::VectorXd::Zero(3);
    hat[1] = 1.0;
    // tests/oracles/compute_oracles.py
    for (const Case& c : {Case{0.5, 2.0, 2.7725887222397812}, Case{0.3, 1.5, 3.0987507403930509},
                          Case{0.7, 3.0, 6.1478857611036312}}) {
        const StiffnessQuadrature sq = assemble(g, FracParams::make(1, c.s, c.p));
        INFO("s=" << c.s << " p=" << c.p << " E=" << std::setprecision(17) << seminorm_energy(hat, sq));
        CHECK(seminorm_energy(hat, sq) == Approx(c.value).epsilon(1e-6));
        const DiscreteFunction zero = DiscreteFunction::zeros(g);
        CHECK(energy(DiscreteFunction(g, hat), zero, sq) == Approx(c.value).epsilon(1e-6));
    }
}

TEST_CASE("energy basics")
{
    testing::Gen gen(8);
    const Grid g = Grid::make(-1.0, 1.0, 16);
    for (int k = 0; k < 6; ++k) {
        const FracParams fp = gen.params(0.2, 0.8, 1.3, 4.0);
        const StiffnessQuadrature sq = assemble(g, fp);
        const DiscreteFunction f(g, gen.vector(g.n, -1.0, 1.0));
        CHECK(energy(DiscreteFunction::zeros(g), f, sq) == 0.0);
        const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0);
        const double h = gen.log_uniform(0.1, 10.0);
        CHECK(seminorm_energy(h * u, sq) == Approx(std::pow(h, fp.p) * seminorm_energy(u, sq)).epsilon(1e-12));
        CHECK(energy(DiscreteFunction(g, u), f, sq) ==
              Approx(seminorm_energy(u, sq) - load_term(u, f.values, g)).epsilon(1e-14));
        const Eigen::VectorXd du = 1e-3 * gen.vector(g.n, -1.0, 1.0);
        CHECK(seminorm_difference(u, du, sq) ==
              Approx(seminorm_energy(u + du, sq) - seminorm_energy(u, sq)).epsilon(1e-9));
        Eigen::VectorXd grad(g.n);
        CHECK(seminorm_energy_gradient(u, sq, grad) == Approx(seminorm_energy(u, sq)).epsilon(1e-13));
        CHECK((grad - energy_gradient(DiscreteFunction(g, u), DiscreteFunction::zeros(g), sq)).norm() <=
              1e-13 * grad.norm());
    }
    CHECK(load_term(Eigen::VectorXd::Ones(16), Eigen::VectorXd::Ones(16), g) == Approx(16.0 * g.h()));
}

TEST_CASE("gradient matches central differences")
{
    testing::Gen gen(41);
    const Grid g = Grid::make(-1.0, 1.0, 32);
    const double eta = 1e-6;
    for (auto [s, p] : {std::pair{0.3, 1.5}, std::pair{0.5, 2.0}, std::pair{0.7, 3.0}}) {
        const StiffnessQuadrature sq = assemble(g, FracParams::make(1, s, p));
        const DiscreteFunction zero = DiscreteFunction::zeros(g);
        CHECK(energy_gradient(zero, zero, sq).cwiseAbs().maxCoeff() == 0.0);
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0);
            const DiscreteFunction f(g, gen.vector(g.n, -1.0, 1.0));
            const Eigen::VectorXd grad = energy_gradient(DiscreteFunction(g, u), f, sq);
            for (int i = 0; i < g.n; ++i) {
                Eigen::VectorXd up = u, dn = u;
                up[i] += eta;
                dn[i] -= eta;
                const double fd = (energy(DiscreteFunction(g, up), f, sq) - energy(DiscreteFunction(g, dn), f, sq)) /
                                  (2.0 * eta);
                worst = std::max(worst, std::abs(fd - grad[i]));
            }
        }
        INFO("s=" << s << " p=" << p);
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("p = 2 gradient is linear")
{
    testing::Gen gen(43);
    const Grid g = Grid::make(0.0, 2.0, 30);
    const StiffnessQuadrature sq = assemble(g, FracParams::make(1, 0.6, 2.0));
    const DiscreteFunction zero = DiscreteFunction::zeros(g);
    for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0), v = gen.vector(g.n, -1.0, 1.0);
        const double a = gen.uniform(-2.0, 2.0);
        const Eigen::VectorXd lhs = energy_gradient(DiscreteFunction(g, a * u + v), zero, sq);
        const Eigen::VectorXd rhs =
            a * energy_gradient(DiscreteFunction(g, u), zero, sq) + energy_gradient(DiscreteFunction(g, v), zero, sq);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("energy is strictly convex for p >= 2")
{
    testing::Gen gen(47);
    const Grid g = Grid::make(-1.0, 1.0, 12);
    for (int k = 0; k < 40; ++k) {
        const FracParams fp = gen.params(0.1, 0.9, 2.0, 5.0);
        const StiffnessQuadrature sq = assemble(g, fp);
        const DiscreteFunction f(g, gen.vector(g.n, -1.0, 1.0));
        const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0), v = gen.vector(g.n, -1.0, 1.0);
        const double lam = gen.uniform(0.05, 0.95);
        const double mid = energy(DiscreteFunction(g, lam * u + (1.0 - lam) * v), f, sq);
        const double chord = lam * energy(DiscreteFunction(g, u), f, sq) + (1.0 - lam) * energy(DiscreteFunction(g, v), f, sq);
        CHECK(chord - mid > 1e-8);
    }
}

TEST_CASE("results do not depend on the thread count")
{
    const Grid g = Grid::make(-1.0, 1.0, 100);
    const FracParams fp = FracParams::make(1, 0.4, 2.5);
    testing::Gen gen(3);
    const Eigen::VectorXd u = gen.vector(g.n, -1.0, 1.0);
    set_num_threads(1);
    const StiffnessQuadrature sq1 = assemble(g, fp);
    Eigen::VectorXd g1(g.n);
    const double e1 = seminorm_energy_gradient(u, sq1, g1);
    set_num_threads(3);
    const StiffnessQuadrature sq3 = assemble(g, fp);
    Eigen::VectorXd g3(g.n);
    const double e3 = seminorm_energy_gradient(u, sq3, g3);
    set_num_threads(0);
    CHECK(e1 == e3);
    CHECK((g1 - g3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tight tolerances for p < 2 end at the gradient rounding floor at worst")
{
    // Even n: the two middle nodes agree only up to rounding in the symmetric solution.
    const FracParams fp = FracParams::make(1, 0.7, 1.5);
    const Grid g = Grid::make(0.0, 1.0, 128);
    const StiffnessQuadrature sq = assemble(g, fp);
    SolveOptions opt;
    opt.tol = 1e-10;
    const SolveReport r = solve_dirichlet(DiscreteFunction::constant(g, 8.0), sq, opt);
    INFO(r.message);
    REQUIRE(r.converged);
    CHECK(r.grad_sup_norm <= r.tolerance);
    CHECK(r.tolerance <= 1e-6);
    CHECK(std::abs(r.solution.values[63] - r.solution.values[64]) <= 1e-14);

    const SolveReport r2 = solve_dirichlet(DiscreteFunction::constant(g, 8.0), assemble(g, FracParams::make(1, 0.7, 3.0)), opt);
    REQUIRE(r2.converged);
    CHECK(r2.message == "converged");
    CHECK(r2.tolerance == Approx(opt.tol * (1.0 + std::abs(r2.final_energy))));
}

TEST_CASE("zero source gives the zero solution")
{
    const Grid g = Grid::make(-1.0, 1.0, 40);
    const StiffnessQuadrature sq = assemble(g, FracParams::make(1, 0.5, 3.0));
    const SolveReport r = solve_dirichlet(DiscreteFunction::zeros(g), sq);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(r.solution.values.cwiseAbs().maxCoeff() == 0.0);
    SolveOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(solve_dirichlet(DiscreteFunction::zeros(g), sq, bad), DomainError);
    CHECK_THROWS_AS(solve_dirichlet(DiscreteFunction::zeros(Grid::make(-1.0, 1.0, 41)), sq), DomainError);
}

TEST_CASE("p = 2 torsion: dense solve, explicit profile and boundary slope")
{
    const double s = 0.5;
    const Grid g = Grid::make(-1.0, 1.0, 512);
    const StiffnessQuadrature sq = assemble(g, FracParams::make(1, s, 2.0));
    const DiscreteFunction f = DiscreteFunction::constant(g, 1.0);
    const SolveReport r = solve_dirichlet(f, sq);
    REQUIRE(r.converged);
    CHECK(r.grad_sup_norm <= r.tolerance);

    // Dense oracle: the minimizer solves A u = h f.
    const Eigen::MatrixXd A = stiffness_matrix_p2(sq);
    const Eigen::VectorXd exact = A.ldlt().solve(g.h() * f.values);
    CHECK((r.solution.values - exact).cwiseAbs().maxCoeff() <= 1e-6 * exact.maxCoeff());

    const double amp = torsion_amplitude(s);
    double shape = 0.0;
    for (int i = 1; i <= g.n; ++i) {
        const double x = g.node(i);
        shape = std::max(shape, std::abs(r.solution.values[i - 1] - amp * std::pow(1.0 - x * x, s)));
    }
    CHECK(shape <= 0.02 * amp);

    const ExponentFit fit = boundary_exponent(r.solution, 0.1);
    CHECK(std::abs(fit.exponent - 0.5) <= 0.03);
}

TEST_CASE("load homogeneity for p = 3")
{
    const Grid g = Grid::make(-1.0, 1.0, 64);
    const StiffnessQuadrature sq = assemble(g, FracParams::make(1, 0.5, 3.0));
    SolveOptions opt;
    opt.tol = 1e-11;
    const SolveReport u1 = solve_dirichlet(DiscreteFunction::constant(g, 1.0), sq, opt);
    const SolveReport u8 = solve_dirichlet(DiscreteFunction::constant(g, 8.0), sq, opt);
    REQUIRE(u1.converged);
    REQUIRE(u8.converged);
    const Eigen::VectorXd expect = std::sqrt(8.0) * u1.solution.values;
    CHECK((u8.solution.values - expect).cwiseAbs().maxCoeff() <= 1e-6 * expect.maxCoeff());
}

TEST_CASE("comparison of ordered sources")
{
    const Grid g = Grid::make(-1.0, 1.0, 48);
    for (auto [s, p] : {std::pair{0.3, 1.5}, std::pair{0.5, 2.0}, std::pair{0.7, 3.0}}) {
        const StiffnessQuadrature sq = assemble(g, FracParams::make(1, s, p));
        const SolveOptions opt;
        const SolveReport one = solve_dirichlet(DiscreteFunction::constant(g, 1.0), sq, opt);
        const SolveReport half = solve_dirichlet(DiscreteFunction::constant(g, 0.5), sq, opt);
        const SolveReport left =
            solve_dirichlet(DiscreteFunction::interpolate(g, [](double x) { return x < 0.0 ? 1.0 : 0.0; }), sq, opt);
        INFO("s=" << s << " p=" << p);
        CHECK(comparison_check(one, one) <= opt.tol);
        CHECK(comparison_check(half, one) <= 2.0 * opt.tol);
        CHECK(comparison_check(left, one) <= 2.0 * opt.tol);
        CHECK(comparison_check(one, half) > 0.0);
    }
    SolveReport other;
    other.solution = DiscreteFunction::zeros(Grid::make(-1.0, 1.0, 10));
    SolveReport here;
    here.solution = DiscreteFunction::zeros(g);
    CHECK_THROWS_AS(comparison_check(here, other), DomainError);
}

TEST_CASE("pointwise residual of discrete solutions")
{
    const FracParams fp = FracParams::make(1, 0.5, 2.0);
    const PVConfig cfg;
    const std::vector<double> targets{-0.5, -0.3, -0.1, 0.05, 0.2, 0.4, 0.6};
    {
        const Grid g = Grid::make(-1.0, 1.0, 64);
        const StiffnessQuadrature sq = assemble(g, fp);
        const DiscreteFunction zero = DiscreteFunction::zeros(g);
        const SolveReport r = solve_dirichlet(zero, sq);
        for (double v : residual_pv(r, zero, fp, cfg, midpoint_probes(g, targets)))
            CHECK(v == 0.0);
        CHECK_THROWS_AS(residual_pv(r, zero, fp, cfg, {-1.0 + g.h()}), DomainError);
    }

    std::vector<double> solved, manufactured;
    for (int n : {128, 256, 512}) {
        const Grid g = Grid::make(-1.0, 1.0, n);
        const StiffnessQuadrature sq = assemble(g, fp);
        const DiscreteFunction f = DiscreteFunction::constant(g, 1.0);
        const std::vector<double> probes = midpoint_probes(g, targets);
        const SolveReport r = solve_dirichlet(f, sq);
        REQUIRE(r.converged);
        solved.push_back(median_abs(residual_pv(r, f, fp, cfg, probes)));

        SolveReport m;
        m.solution = DiscreteFunction::interpolate(
            g, [&](double x) { return torsion_amplitude(fp.s) * std::pow(std::max(1.0 - x * x, 0.0), fp.s); });
        manufactured.push_back(median_abs(residual_pv(m, f, fp, cfg, probes)));
    }
    INFO("solved " << solved[0] << " " << solved[1] << " " << solved[2]);
    INFO("manufactured " << manufactured[0] << " " << manufactured[1] << " " << manufactured[2]);
    CHECK(solved[1] < solved[0]);
    CHECK(solved[2] < solved[1]);
    CHECK(manufactured[1] < manufactured[0]);
    CHECK(manufactured[2] < manufactured[1]);
}
