#pragma once

#include "fplap/core_math.hpp"
#include "fplap/pv_quadrature.hpp"
#include "fplap/scalar_field.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace fplap {

/// Uniform grid on [a, b] with n interior nodes x_i = a + i h, i = 1..n.
struct Grid {
    double a = 0.0;
    double b = 1.0;
    int n = 2;

    static Grid make(double a, double b, int n);
    void validate() const;

    double h() const { return (b - a) / (n + 1); }
    double length() const { return b - a; }
    /// Node coordinate for i = 0..n+1 (0 and n+1 are the pinned boundary nodes).
    double node(int i) const { return a + i * h(); }
    int elements() const { return n + 1; }

    bool operator==(const Grid& o) const { return a == o.a && b == o.b && n == o.n; }
};

/// Continuous piecewise-linear function vanishing outside (a, b).
struct DiscreteFunction {
    Grid grid;
    Eigen::VectorXd values; ///< interior nodal values, size n

    DiscreteFunction() = default;
    DiscreteFunction(Grid g, Eigen::VectorXd v);

    static DiscreteFunction zeros(const Grid& g);
    static DiscreteFunction constant(const Grid& g, double c);
    static DiscreteFunction interpolate(const Grid& g, const std::function<double(double)>& f);

    double operator()(double x) const;
    /// Nodal values including the two zero boundary nodes (size n + 2).
    Eigen::VectorXd padded() const;
    /// Compactly supported field with a plain break at every node.
    Field1 to_field() const;
};

enum class StiffnessMode { galerkin_pl, graph_pc };

/// Quadrature settings for the discrete energy.
struct FemConfig {
    StiffnessMode mode = StiffnessMode::galerkin_pl;
    int adjacent_order = 16; ///< Gauss points in the Duffy variable for touching elements
    int exterior_order = 32; ///< per-element rule for the exterior term
    /// Tensor Gauss order for element pairs at offset d, taken from the first
    /// band with d <= band_limit. Offsets beyond the last band use order 1.
    std::vector<std::pair<int, int>> far_bands{{3, 8}, {7, 6}, {15, 4}, {63, 3}, {255, 2}};
    int blocks = 32; ///< fixed work partition; results do not depend on thread count

    void validate() const;
    int far_order(int d) const;
};

/// Tensor rule for an element pair at offset d: x at nodes_x, y at nodes_y,
/// weights include h^{1-ps} |d + eta - xi|^{-1-ps}.
struct PairRule {
    int d = 0;
    int order = 0;
    Eigen::MatrixXd weights; ///< (order x order), row = node in the left element
};

/// Immutable quadrature data for the discrete Gagliardo energy on a grid.
struct StiffnessQuadrature {
    Grid grid;
    FracParams params;
    FemConfig config;

    double self_coeff = 0.0;         ///< same-element factor, times |Delta_e|^p
    Eigen::ArrayXd adjacent_t;       ///< Duffy nodes on (0, 1)
    Eigen::ArrayXd adjacent_w;       ///< weights incl. (1+t)^{-1-ps} and h^{1-ps}/(p-ps+1)
    std::vector<PairRule> far_rules; ///< indexed by offset d (entries 0 and 1 unused)

    /// Exterior term 2 int |u|^p kappa: per element e and node k of the exterior rule.
    Eigen::ArrayXd exterior_nodes;   ///< nodes on (0,1) for interior elements
    Eigen::ArrayXXd exterior_w;      ///< (order x elements); boundary elements use exterior_edge
    double exterior_edge_left = 0.0; ///< coefficient of |U_1|^p for element 0
    double exterior_edge_right = 0.0;///< coefficient of |U_n|^p for element n

    /// Piecewise-constant mode: weights h^{1-ps} I(d) and per-node exterior data.
    Eigen::ArrayXd graph_weights; ///< indexed by d = 0..n-1
    Eigen::ArrayXd graph_exterior;

    /// Weight matrix of the pair (e, f), rows at nodes of e. pair_weights(f, e) is the transpose.
    Eigen::MatrixXd pair_weights(int e, int f) const;
};

/// Quadrature data for the discrete energy; rejects graph_pc when ps >= 1.
StiffnessQuadrature assemble(const Grid& grid, const FracParams& params, const FemConfig& config = {});

/// (1/p) * discrete double integral of |u(x)-u(y)|^p |x-y|^{-1-ps} over R x R.
double seminorm_energy(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq);

/// Trapezoid load h sum f_i u_i.
double load_term(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& f,
                 const Grid& grid);

/// seminorm_energy(u) - load_term(u, f).
double energy(const DiscreteFunction& u, const DiscreteFunction& f, const StiffnessQuadrature& sq);

/// Derivative of energy with respect to the interior nodal values.
Eigen::VectorXd energy_gradient(const DiscreteFunction& u, const DiscreteFunction& f,
                                const StiffnessQuadrature& sq);

/// seminorm_energy(u + du) - seminorm_energy(u), summed term by term without cancellation.
double seminorm_difference(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& du,
                           const StiffnessQuadrature& sq);

/// Seminorm energy and its gradient in one pass.
double seminorm_energy_gradient(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq,
                                Eigen::Ref<Eigen::VectorXd> grad);

/// Dense matrix A with seminorm_energy(u) = u^T A u / 2; requires p = 2.
Eigen::MatrixXd stiffness_matrix_p2(const StiffnessQuadrature& sq);

/// Hessian of seminorm_energy at u with |D|^{p-2} replaced by (|D| + delta)^{p-2}.
/// Symmetric positive definite for delta > 0; equals stiffness_matrix_p2 when p = 2.
Eigen::MatrixXd linearized_matrix(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq,
                                  double delta);

struct SolveOptions {
    double tol = 1e-8;
    int max_iters = 20000;
    /// Fractional order of the p = 2 preconditioner; negative selects
    /// clamp(1 - p(1-s)/2, 0.05, 0.95).
    double precond_s = -1.0;
    bool precondition = true;
    /// For p != 2 the preconditioner is replaced every refresh_every iterations by
    /// linearized_matrix at the current iterate; 0 keeps the fixed p = 2 matrix.
    int refresh_every = 10;
    double regularization = 1e-8; ///< delta of linearized_matrix relative to max |u|
};

struct SolveReport {
    DiscreteFunction solution;
    int iterations = 0;
    double final_energy = 0.0;
    double grad_sup_norm = 0.0;
    bool converged = false;
    /// Threshold used for convergence: tol (1 + |E|), or for p < 2 the gradient
    /// rounding floor when no representable step decreases the energy any more.
    double tolerance = 0.0;
    std::string message;
};

/// Minimizes the discrete energy by preconditioned Barzilai-Borwein steps with Armijo backtracking.
SolveReport solve_dirichlet(const DiscreteFunction& f, const StiffnessQuadrature& sq, const SolveOptions& opt = {});

/// max(0, max_i(u1_i - u2_i)).
double comparison_check(const SolveReport& u1, const SolveReport& u2);

/// Principal value of the interpolant minus f (interpolated) at each probe.
std::vector<double> residual_pv(const SolveReport& report, const DiscreteFunction& f, const FracParams& params,
                                const PVConfig& cfg, const std::vector<double>& probes);

/// Thread count used by parallel loops; 0 keeps the runtime default.
void set_num_threads(int k);

} // namespace fplap
