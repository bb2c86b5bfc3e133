#include "fplap/fem.hpp"

#include "fplap/quadrature.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fplap {

namespace {

enum class PowKind { p15, p2, p3, general };

PowKind pow_kind(double p)
{
    if (p == 1.5) return PowKind::p15;
    if (p == 2.0) return PowKind::p2;
    if (p == 3.0) return PowKind::p3;
    return PowKind::general;
}

/// |x|^p elementwise.
template <typename A>
Eigen::ArrayXXd abs_pow(const A& x, double p, PowKind k)
{
    switch (k) {
    case PowKind::p15: return x.abs() * x.abs().sqrt();
    case PowKind::p2: return x.square();
    case PowKind::p3: return x.abs() * x.square();
    default: return x.abs().pow(p);
    }
}

/// |x|^{p-2} x elementwise.
template <typename A>
Eigen::ArrayXXd sign_pow(const A& x, double p, PowKind k)
{
    switch (k) {
    case PowKind::p15: return x.sign() * x.abs().sqrt();
    case PowKind::p2: return x;
    case PowKind::p3: return x * x.abs();
    default: return x.sign() * x.abs().pow(p - 1.0);
    }
}

/// Element values at the nodes of a rule: row k holds u(e + xi_k) for every element e.
Eigen::ArrayXXd element_values(const Eigen::VectorXd& U, const Eigen::ArrayXd& nodes)
{
    const Eigen::Index m = U.size() - 1;
    Eigen::ArrayXXd V(nodes.size(), m);
    for (Eigen::Index k = 0; k < nodes.size(); ++k)
        V.row(k) = (U.head(m).array() * (1.0 - nodes[k]) + U.tail(m).array() * nodes[k]).transpose();
    return V;
}

/// Adds dE/dV (rows at the given nodes) into the padded nodal gradient.
void scatter_element_values(const Eigen::ArrayXXd& GV, const Eigen::ArrayXd& nodes, Eigen::VectorXd& G)
{
    const Eigen::Index m = GV.cols();
    for (Eigen::Index k = 0; k < nodes.size(); ++k) {
        G.head(m).array() += (1.0 - nodes[k]) * GV.row(k).transpose();
        G.tail(m).array() += nodes[k] * GV.row(k).transpose();
    }
}

double graded_edge_integral(double p, double ps, double L, double h)
{
    // int_0^1 xi^p (L - h xi)^{-ps} d xi
    auto f = [&](double xi) { return std::pow(xi, p) * std::pow(L - h * xi, -ps); };
    return integrate_panels(f, graded_panels(0.0, 1.0, true, false, 30), gauss_legendre(16));
}

/// Distinct far-field orders in use, ascending.
std::vector<int> far_orders_used(const StiffnessQuadrature& sq)
{
    std::vector<int> orders;
    for (std::size_t d = 2; d < sq.far_rules.size(); ++d)
        orders.push_back(sq.far_rules[d].order);
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
    return orders;
}

double galerkin_energy_gradient(const Eigen::VectorXd& U, const StiffnessQuadrature& sq, Eigen::VectorXd* G)
{
    const double p = sq.params.p;
    const PowKind pk = pow_kind(p);
    const Eigen::Index m = U.size() - 1;
    const Eigen::ArrayXd delta = U.tail(m).array() - U.head(m).array();
    Eigen::ArrayXd g_delta;
    if (G)
        g_delta = Eigen::ArrayXd::Zero(m);

    // Same element.
    double e_self = sq.self_coeff * abs_pow(delta, p, pk).sum();
    if (G)
        g_delta += sq.self_coeff * sign_pow(delta, p, pk);

    // Touching elements, doubled for both orderings.
    double e_adj = 0.0;
    {
        const Eigen::ArrayXd A = delta.head(m - 1), B = delta.tail(m - 1);
        for (Eigen::Index k = 0; k < sq.adjacent_t.size(); ++k) {
            const double t = sq.adjacent_t[k], w = 2.0 * sq.adjacent_w[k];
            const Eigen::ArrayXd X = A + t * B, Y = t * A + B;
            e_adj += w * (abs_pow(X, p, pk).sum() + abs_pow(Y, p, pk).sum());
            if (G) {
                const Eigen::ArrayXd sx = sign_pow(X, p, pk), sy = sign_pow(Y, p, pk);
                g_delta.head(m - 1) += w * (sx + t * sy);
                g_delta.tail(m - 1) += w * (t * sx + sy);
            }
        }
    }

    // Disjoint pairs, in fixed blocks of offsets.
    const std::vector<int> orders = far_orders_used(sq);
    std::vector<Eigen::ArrayXXd> values(kMaxGaussOrder + 1);
    for (int k : orders)
        values[k] = element_values(U, gauss_legendre(k).nodes);

    const int n_off = static_cast<int>(m) - 2; // offsets 2..m-1
    const int blocks = std::max(1, std::min(sq.config.blocks, n_off));
    std::vector<double> e_block(blocks, 0.0);
    std::vector<std::vector<Eigen::ArrayXXd>> g_block(blocks);

#pragma omp parallel for schedule(dynamic, 1)
    for (int bk = 0; bk < blocks; ++bk) {
        const int d_lo = 2 + static_cast<int>(static_cast<long long>(n_off) * bk / blocks);
        const int d_hi = 2 + static_cast<int>(static_cast<long long>(n_off) * (bk + 1) / blocks);
        std::vector<Eigen::ArrayXXd>& gv = g_block[bk];
        if (G) {
            gv.resize(kMaxGaussOrder + 1);
            for (int k : orders)
                gv[k] = Eigen::ArrayXXd::Zero(k, m);
        }
        double acc = 0.0;
        for (int d = d_lo; d < d_hi; ++d) {
            const PairRule& rule = sq.far_rules[d];
            const int k = rule.order;
            const Eigen::Index len = m - d;
            const Eigen::ArrayXXd& V = values[k];
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    const double w = 2.0 * rule.weights(i, j);
                    const Eigen::ArrayXd D = V.row(i).head(len).transpose() - V.row(j).segment(d, len).transpose();
                    acc += w * abs_pow(D, p, pk).sum();
                    if (G) {
                        const Eigen::ArrayXd S = w * sign_pow(D, p, pk);
                        gv[k].row(i).head(len) += S.transpose();
                        gv[k].row(j).segment(d, len) -= S.transpose();
                    }
                }
            }
        }
        e_block[bk] = acc;
    }
    const double e_far = pairwise_sum(e_block);

    // Exterior confinement.
    const Eigen::ArrayXXd VX = element_values(U, sq.exterior_nodes);
    double e_ext = (sq.exterior_w * abs_pow(VX, p, pk)).sum();
    const double u1 = U[1], un = U[m - 1];
    e_ext += sq.exterior_edge_left * std::pow(std::abs(u1), p) + sq.exterior_edge_right * std::pow(std::abs(un), p);

    if (G) {
        G->setZero(U.size());
        G->tail(m).array() += g_delta;
        G->head(m).array() -= g_delta;
        for (int k : orders) {
            Eigen::ArrayXXd sum_k = Eigen::ArrayXXd::Zero(k, m);
            for (int bk = 0; bk < blocks; ++bk)
                if (!g_block[bk].empty())
                    sum_k += g_block[bk][k];
            scatter_element_values(sum_k, gauss_legendre(k).nodes, *G);
        }
        const Eigen::ArrayXXd GX =
            sq.exterior_w * sign_pow(VX, p, pk);
        scatter_element_values(GX, sq.exterior_nodes, *G);
        (*G)[1] += sq.exterior_edge_left * signed_power(u1, p - 1.0);
        (*G)[m - 1] += sq.exterior_edge_right * signed_power(un, p - 1.0);
    }
    const double parts[] = {e_self, e_adj, e_far, e_ext};
    return pairwise_sum(parts) / p;
}

double graph_energy_gradient(const Eigen::VectorXd& U, const StiffnessQuadrature& sq, Eigen::VectorXd* G)
{
    const double p = sq.params.p;
    const PowKind pk = pow_kind(p);
    const Eigen::Index n = U.size() - 2;
    const Eigen::ArrayXd u = U.segment(1, n).array();
    const int n_off = static_cast<int>(n) - 1; // offsets 1..n-1
    const int blocks = std::max(1, std::min(sq.config.blocks, n_off));
    std::vector<double> e_block(blocks, 0.0);
    std::vector<Eigen::ArrayXd> g_block(blocks);

#pragma omp parallel for schedule(dynamic, 1)
    for (int bk = 0; bk < blocks; ++bk) {
        const int d_lo = 1 + static_cast<int>(static_cast<long long>(n_off) * bk / blocks);
        const int d_hi = 1 + static_cast<int>(static_cast<long long>(n_off) * (bk + 1) / blocks);
        if (G)
            g_block[bk] = Eigen::ArrayXd::Zero(n);
        double acc = 0.0;
        for (int d = d_lo; d < d_hi; ++d) {
            const Eigen::Index len = n - d;
            const double w = 2.0 * sq.graph_weights[d];
            const Eigen::ArrayXd D = u.head(len) - u.segment(d, len);
            acc += w * abs_pow(D, p, pk).sum();
            if (G) {
                const Eigen::ArrayXd S = w * sign_pow(D, p, pk);
                g_block[bk].head(len) += S;
                g_block[bk].segment(d, len) -= S;
            }
        }
        e_block[bk] = acc;
    }
    const double e_ext = (sq.graph_exterior * abs_pow(u, p, pk)).sum();
    if (G) {
        G->setZero(U.size());
        for (int bk = 0; bk < blocks; ++bk)
            if (g_block[bk].size())
                G->segment(1, n).array() += g_block[bk];
        G->segment(1, n).array() += sq.graph_exterior * sign_pow(u, p, pk);
    }
    const double parts[] = {pairwise_sum(e_block), e_ext};
    return pairwise_sum(parts) / p;
}

/// |b + db|^p - |b|^p without cancellation when db is small relative to b.
Eigen::ArrayXXd diff_pow(const Eigen::ArrayXXd& b, const Eigen::ArrayXXd& db, double p)
{
    const Eigen::ArrayXXd a = b + db;
    const Eigen::ArrayXXd aa = a.abs(), ab = b.abs();
    // |a| - |b| is exactly sign(b) db when a and b share a sign.
    const Eigen::ArrayXXd dabs = (a * b > 0.0).select(b.sign() * db, aa - ab);
    switch (pow_kind(p)) {
    case PowKind::p2: return dabs * (aa + ab);
    case PowKind::p3: return dabs * (a.square() + aa * ab + b.square());
    case PowKind::p15: {
        const Eigen::ArrayXXd den = aa * aa.sqrt() + ab * ab.sqrt();
        return (den > 0.0).select(dabs * (a.square() + aa * ab + b.square()) / den, 0.0);
    }
    default: {
        const Eigen::ArrayXXd r = db / b;
        const Eigen::ArrayXXd stable = ab.pow(p) * (p * r.log1p()).expm1();
        return (b != 0.0 && r.abs() < 0.5).select(stable, aa.pow(p) - ab.pow(p));
    }
    }
}

double diff_pow(double b, double db, double p)
{
    Eigen::ArrayXXd B(1, 1), dB(1, 1);
    B(0, 0) = b;
    dB(0, 0) = db;
    return diff_pow(B, dB, p)(0, 0);
}

double galerkin_difference(const Eigen::VectorXd& U, const Eigen::VectorXd& dU, const StiffnessQuadrature& sq)
{
    const double p = sq.params.p;
    const Eigen::Index m = U.size() - 1;
    const Eigen::ArrayXd delta = U.tail(m).array() - U.head(m).array();
    const Eigen::ArrayXd ddelta = dU.tail(m).array() - dU.head(m).array();
    const double e_self = sq.self_coeff * diff_pow(delta, ddelta, p).sum();

    double e_adj = 0.0;
    {
        const Eigen::ArrayXd A = delta.head(m - 1), B = delta.tail(m - 1);
        const Eigen::ArrayXd dA = ddelta.head(m - 1), dB = ddelta.tail(m - 1);
        for (Eigen::Index k = 0; k < sq.adjacent_t.size(); ++k) {
            const double t = sq.adjacent_t[k], w = 2.0 * sq.adjacent_w[k];
            e_adj += w * (diff_pow(A + t * B, dA + t * dB, p).sum() + diff_pow(t * A + B, t * dA + dB, p).sum());
        }
    }

    const std::vector<int> orders = far_orders_used(sq);
    std::vector<Eigen::ArrayXXd> values(kMaxGaussOrder + 1), dvalues(kMaxGaussOrder + 1);
    for (int k : orders) {
        values[k] = element_values(U, gauss_legendre(k).nodes);
        dvalues[k] = element_values(dU, gauss_legendre(k).nodes);
    }
    const int n_off = static_cast<int>(m) - 2;
    const int blocks = std::max(1, std::min(sq.config.blocks, n_off));
    std::vector<double> e_block(blocks, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
    for (int bk = 0; bk < blocks; ++bk) {
        const int d_lo = 2 + static_cast<int>(static_cast<long long>(n_off) * bk / blocks);
        const int d_hi = 2 + static_cast<int>(static_cast<long long>(n_off) * (bk + 1) / blocks);
        double acc = 0.0;
        for (int d = d_lo; d < d_hi; ++d) {
            const PairRule& rule = sq.far_rules[d];
            const int k = rule.order;
            const Eigen::Index len = m - d;
            const Eigen::ArrayXXd &V = values[k], &dV = dvalues[k];
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const Eigen::ArrayXd D = V.row(i).head(len).transpose() - V.row(j).segment(d, len).transpose();
                    const Eigen::ArrayXd dD =
                        dV.row(i).head(len).transpose() - dV.row(j).segment(d, len).transpose();
                    acc += 2.0 * rule.weights(i, j) * diff_pow(D, dD, p).sum();
                }
        }
        e_block[bk] = acc;
    }

    const Eigen::ArrayXXd VX = element_values(U, sq.exterior_nodes), dVX = element_values(dU, sq.exterior_nodes);
    double e_ext = (sq.exterior_w * diff_pow(VX, dVX, p)).sum();
    e_ext += sq.exterior_edge_left * diff_pow(U[1], dU[1], p) + sq.exterior_edge_right * diff_pow(U[m - 1], dU[m - 1], p);
    const double parts[] = {e_self, e_adj, pairwise_sum(e_block), e_ext};
    return pairwise_sum(parts) / p;
}

double graph_difference(const Eigen::VectorXd& U, const Eigen::VectorXd& dU, const StiffnessQuadrature& sq)
{
    const double p = sq.params.p;
    const Eigen::Index n = U.size() - 2;
    const Eigen::ArrayXd u = U.segment(1, n).array(), du = dU.segment(1, n).array();
    std::vector<double> terms;
    for (Eigen::Index d = 1; d < n; ++d) {
        const Eigen::Index len = n - d;
        terms.push_back(2.0 * sq.graph_weights[d] *
                        diff_pow(u.head(len) - u.segment(d, len), du.head(len) - du.segment(d, len), p).sum());
    }
    terms.push_back((sq.graph_exterior * diff_pow(u, du, p)).sum());
    return pairwise_sum(terms) / p;
}

Eigen::VectorXd pad(const Eigen::Ref<const Eigen::VectorXd>& u)
{
    Eigen::VectorXd U = Eigen::VectorXd::Zero(u.size() + 2);
    U.segment(1, u.size()) = u;
    return U;
}

double energy_impl(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq, Eigen::VectorXd* G)
{
    if (u.size() != sq.grid.n)
        throw DomainError("nodal vector does not match the grid");
    const Eigen::VectorXd U = pad(u);
    Eigen::VectorXd GU;
    const double e = sq.config.mode == StiffnessMode::galerkin_pl ? galerkin_energy_gradient(U, sq, G ? &GU : nullptr)
                                                                  : graph_energy_gradient(U, sq, G ? &GU : nullptr);
    if (G)
        *G = GU.segment(1, sq.grid.n);
    return e;
}

} // namespace

// ---------------------------------------------------------------------------

Grid Grid::make(double a, double b, int n)
{
    Grid g{a, b, n};
    g.validate();
    return g;
}

void Grid::validate() const
{
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw DomainError("Grid: requires finite a < b");
    if (n < 2)
        throw DomainError("Grid: requires n >= 2 interior nodes");
}

DiscreteFunction::DiscreteFunction(Grid g, Eigen::VectorXd v) : grid(g), values(std::move(v))
{
    grid.validate();
    if (values.size() != grid.n)
        throw DomainError("DiscreteFunction: value count does not match the grid");
    if (!values.allFinite())
        throw DomainError("DiscreteFunction: non-finite nodal value");
}

DiscreteFunction DiscreteFunction::zeros(const Grid& g)
{
    return {g, Eigen::VectorXd::Zero(g.n)};
}

DiscreteFunction DiscreteFunction::constant(const Grid& g, double c)
{
    return {g, Eigen::VectorXd::Constant(g.n, c)};
}

DiscreteFunction DiscreteFunction::interpolate(const Grid& g, const std::function<double(double)>& f)
{
    Eigen::VectorXd v(g.n);
    for (int i = 1; i <= g.n; ++i)
        v[i - 1] = f(g.node(i));
    return {g, v};
}

double DiscreteFunction::operator()(double x) const
{
    if (!(x > grid.a && x < grid.b))
        return 0.0;
    const double t = (x - grid.a) / grid.h();
    const int i = std::clamp(static_cast<int>(std::floor(t)), 0, grid.n);
    const double xi = t - i;
    const double left = i == 0 ? 0.0 : values[i - 1];
    const double right = i == grid.n ? 0.0 : values[i];
    return left * (1.0 - xi) + right * xi;
}

Eigen::VectorXd DiscreteFunction::padded() const
{
    return pad(values);
}

Field1 DiscreteFunction::to_field() const
{
    std::vector<double> nodes(grid.n + 2);
    for (int i = 0; i <= grid.n + 1; ++i)
        nodes[i] = grid.node(i);
    Field1 u = make_field_1d([self = *this](double x) { return self(x); }, DecayClass::compact,
                             LocalProfile::piecewise_affine, std::move(nodes));
    return with_support(std::move(u), grid.a, grid.b);
}

void FemConfig::validate() const
{
    if (adjacent_order < 1 || adjacent_order > kMaxGaussOrder || exterior_order < 1 ||
        exterior_order > kMaxGaussOrder)
        throw DomainError("FemConfig: quadrature order out of range");
    for (const auto& [limit, order] : far_bands)
        if (order < 1 || order > kMaxGaussOrder || limit < 2)
            throw DomainError("FemConfig: invalid far-field band");
    if (blocks < 1)
        throw DomainError("FemConfig: blocks must be positive");
}

int FemConfig::far_order(int d) const
{
    for (const auto& [limit, order] : far_bands)
        if (d <= limit)
            return order;
    return 1;
}

Eigen::MatrixXd StiffnessQuadrature::pair_weights(int e, int f) const
{
    const int d = std::abs(e - f);
    if (config.mode == StiffnessMode::graph_pc) {
        if (d < 1 || d >= grid.n)
            throw DomainError("pair_weights: cells out of range");
        return Eigen::MatrixXd::Constant(1, 1, graph_weights[d]);
    }
    if (d < 2 || d >= static_cast<int>(far_rules.size()))
        throw DomainError("pair_weights: only disjoint element pairs carry tensor rules");
    const Eigen::MatrixXd& W = far_rules[d].weights;
    return e < f ? W : Eigen::MatrixXd(W.transpose());
}

StiffnessQuadrature assemble(const Grid& grid, const FracParams& params, const FemConfig& config)
{
    grid.validate();
    params.validate();
    config.validate();
    if (params.dim != 1)
        throw DomainError("assemble: only dim = 1 is supported");
    if (config.mode == StiffnessMode::graph_pc && params.ps() >= 1.0)
        throw DomainError("assemble: graph_pc mode requires p*s < 1");

    StiffnessQuadrature sq;
    sq.grid = grid;
    sq.params = params;
    sq.config = config;
    const double p = params.p, ps = params.ps(), h = grid.h();
    const double hk = std::pow(h, 1.0 - ps);
    const int m = grid.elements();

    if (config.mode == StiffnessMode::graph_pc) {
        const double g2 = 1.0 - ps; // gamma + 2 with gamma = -1 - ps
        const double denom = (-ps) * g2;
        sq.graph_weights = Eigen::ArrayXd::Zero(grid.n);
        for (int d = 1; d < grid.n; ++d)
            sq.graph_weights[d] =
                hk * (std::pow(d + 1.0, g2) - 2.0 * std::pow(d, g2) + std::pow(d - 1.0, g2)) / denom;
        const double a0 = grid.a + 0.5 * h, b0 = grid.b - 0.5 * h;
        sq.graph_exterior.resize(grid.n);
        for (int i = 1; i <= grid.n; ++i) {
            const double lo = a0 + (i - 1) * h, hi = a0 + i * h;
            const double left = std::pow(hi - a0, g2) - std::pow(lo - a0, g2);
            const double right = std::pow(b0 - lo, g2) - std::pow(b0 - hi, g2);
            sq.graph_exterior[i - 1] = 2.0 * (left + right) / (g2 * ps);
        }
        return sq;
    }

    const double pr = p - ps; // p(1-s) > 0
    sq.self_coeff = 2.0 / (pr * (pr + 1.0)) * hk;

    const GaussRule& ra = gauss_legendre(config.adjacent_order);
    sq.adjacent_t = ra.nodes;
    sq.adjacent_w = ra.weights * (1.0 + ra.nodes).pow(-1.0 - ps) * (hk / (pr + 1.0));

    sq.far_rules.resize(std::max(m, 2));
    for (int d = 2; d < m; ++d) {
        PairRule& r = sq.far_rules[d];
        r.d = d;
        r.order = config.far_order(d);
        const GaussRule& g = gauss_legendre(r.order);
        r.weights.resize(r.order, r.order);
        for (int i = 0; i < r.order; ++i)
            for (int j = 0; j < r.order; ++j)
                r.weights(i, j) = g.weights[i] * g.weights[j] * hk * std::pow(d + g.nodes[j] - g.nodes[i], -1.0 - ps);
    }

    const GaussRule& rx = gauss_legendre(config.exterior_order);
    sq.exterior_nodes = rx.nodes;
    sq.exterior_w = Eigen::ArrayXXd::Zero(rx.order(), m);
    for (int e = 1; e < m - 1; ++e)
        for (int k = 0; k < rx.order(); ++k) {
            const double x = grid.a + h * (e + rx.nodes[k]);
            const double kappa = (std::pow(x - grid.a, -ps) + std::pow(grid.b - x, -ps)) / ps;
            sq.exterior_w(k, e) = 2.0 * h * rx.weights[k] * kappa;
        }
    const double L = grid.length();
    const double edge = 2.0 / ps * (hk / (pr + 1.0) + h * graded_edge_integral(p, ps, L, h));
    sq.exterior_edge_left = edge;
    sq.exterior_edge_right = edge;
    return sq;
}

double seminorm_energy(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq)
{
    return energy_impl(u, sq, nullptr);
}

double seminorm_difference(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& du,
                           const StiffnessQuadrature& sq)
{
    if (u.size() != sq.grid.n || du.size() != sq.grid.n)
        throw DomainError("seminorm_difference: nodal vector does not match the grid");
    const Eigen::VectorXd U = pad(u), dU = pad(du);
    return sq.config.mode == StiffnessMode::galerkin_pl ? galerkin_difference(U, dU, sq) : graph_difference(U, dU, sq);
}

double seminorm_energy_gradient(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq,
                                Eigen::Ref<Eigen::VectorXd> grad)
{
    Eigen::VectorXd G;
    const double e = energy_impl(u, sq, &G);
    grad = G;
    return e;
}

double load_term(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& f,
                 const Grid& grid)
{
    if (u.size() != grid.n || f.size() != grid.n)
        throw DomainError("load_term: size mismatch");
    return grid.h() * u.dot(f);
}

double energy(const DiscreteFunction& u, const DiscreteFunction& f, const StiffnessQuadrature& sq)
{
    if (!(u.grid == sq.grid) || !(f.grid == sq.grid))
        throw DomainError("energy: grid mismatch");
    return seminorm_energy(u.values, sq) - load_term(u.values, f.values, sq.grid);
}

Eigen::VectorXd energy_gradient(const DiscreteFunction& u, const DiscreteFunction& f, const StiffnessQuadrature& sq)
{
    if (!(u.grid == sq.grid) || !(f.grid == sq.grid))
        throw DomainError("energy_gradient: grid mismatch");
    Eigen::VectorXd g(sq.grid.n);
    seminorm_energy_gradient(u.values, sq, g);
    g -= sq.grid.h() * f.values;
    return g;
}

Eigen::MatrixXd linearized_matrix(const Eigen::Ref<const Eigen::VectorXd>& u, const StiffnessQuadrature& sq,
                                  double delta)
{
    const int n = sq.grid.n, m = sq.grid.elements();
    if (u.size() != n)
        throw DomainError("linearized_matrix: nodal vector does not match the grid");
    const double p = sq.params.p;
    // (p-1)(|D| + delta)^{p-2}; exactly 1 at p = 2.
    auto weight = [&](const Eigen::ArrayXd& D) -> Eigen::ArrayXd {
        if (p == 2.0)
            return Eigen::ArrayXd::Ones(D.size());
        return (p - 1.0) * (D.abs() + delta).pow(p - 2.0);
    };
    const Eigen::VectorXd U = pad(u);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 2, n + 2);
    // Upper band accumulation: H(r, r + k) += values[r - start].
    auto band = [&](int k, Eigen::Index start, const Eigen::ArrayXd& values) {
        H.diagonal(k).segment(start, values.size()).array() += values;
    };

    if (sq.config.mode == StiffnessMode::graph_pc) {
        const Eigen::ArrayXd v = U.segment(1, n).array();
        for (int d = 1; d < n; ++d) {
            const Eigen::Index len = n - d;
            const Eigen::ArrayXd S = 2.0 * sq.graph_weights[d] * weight(v.head(len) - v.segment(d, len));
            band(0, 1, S);
            band(0, 1 + d, S);
            band(d, 1, -S);
        }
        band(0, 1, sq.graph_exterior * weight(v));
    } else {
        const Eigen::ArrayXd delta_e = U.tail(m).array() - U.head(m).array();
        const Eigen::ArrayXd A = sq.self_coeff * weight(delta_e);
        band(0, 0, A);
        band(0, 1, A);
        band(1, 0, -A);

        const Eigen::ArrayXd Da = delta_e.head(m - 1), Db = delta_e.tail(m - 1);
        for (Eigen::Index k = 0; k < sq.adjacent_t.size(); ++k) {
            const double t = sq.adjacent_t[k], w = 2.0 * sq.adjacent_w[k];
            const Eigen::ArrayXd ax = w * weight(Da + t * Db), ay = w * weight(t * Da + Db);
            const double x[3] = {-1.0, 1.0 - t, t}, y[3] = {-t, t - 1.0, 1.0};
            for (int r = 0; r < 3; ++r)
                for (int c = r; c < 3; ++c)
                    band(c - r, r, x[r] * x[c] * ax + y[r] * y[c] * ay);
        }

        std::vector<Eigen::ArrayXXd> values(kMaxGaussOrder + 1);
        for (int k : far_orders_used(sq))
            values[k] = element_values(U, gauss_legendre(k).nodes);
        for (int d = 2; d < m; ++d) {
            const PairRule& r = sq.far_rules[d];
            const GaussRule& g = gauss_legendre(r.order);
            const Eigen::Index len = m - d;
            const Eigen::ArrayXXd& V = values[r.order];
            Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(len, 10);
            for (int i = 0; i < r.order; ++i)
                for (int j = 0; j < r.order; ++j) {
                    const Eigen::ArrayXd D = V.row(i).head(len).transpose() - V.row(j).segment(d, len).transpose();
                    const Eigen::ArrayXd S = 2.0 * r.weights(i, j) * weight(D);
                    const double c0 = 1.0 - g.nodes[i], c1 = g.nodes[i], c2 = g.nodes[j] - 1.0, c3 = -g.nodes[j];
                    const double coef[10] = {c0 * c0, c1 * c1, c2 * c2, c3 * c3, c0 * c1,
                                             c2 * c3, c1 * c2, c0 * c2, c1 * c3, c0 * c3};
                    for (int q = 0; q < 10; ++q)
                        acc.col(q) += coef[q] * S;
                }
            band(0, 0, acc.col(0));
            band(0, 1, acc.col(1));
            band(0, d, acc.col(2));
            band(0, d + 1, acc.col(3));
            band(1, 0, acc.col(4));
            band(1, d, acc.col(5));
            band(d - 1, 1, acc.col(6));
            band(d, 0, acc.col(7));
            band(d, 1, acc.col(8));
            band(d + 1, 0, acc.col(9));
        }

        const Eigen::ArrayXXd VX = element_values(U, sq.exterior_nodes);
        for (Eigen::Index k = 0; k < sq.exterior_nodes.size(); ++k) {
            const double xi = sq.exterior_nodes[k];
            const Eigen::ArrayXd S = sq.exterior_w.row(k).transpose() * weight(VX.row(k).transpose());
            band(0, 0, (1.0 - xi) * (1.0 - xi) * S);
            band(0, 1, xi * xi * S);
            band(1, 0, xi * (1.0 - xi) * S);
        }
        Eigen::ArrayXd edge(2);
        edge << U[1], U[n];
        const Eigen::ArrayXd we = weight(edge);
        H(1, 1) += sq.exterior_edge_left * we[0];
        H(n, n) += sq.exterior_edge_right * we[1];
    }
    H.triangularView<Eigen::StrictlyLower>() = H.transpose();
    return H.block(1, 1, n, n);
}

Eigen::MatrixXd stiffness_matrix_p2(const StiffnessQuadrature& sq)
{
    if (sq.params.p != 2.0)
        throw DomainError("stiffness_matrix_p2: requires p = 2");
    return linearized_matrix(Eigen::VectorXd::Zero(sq.grid.n), sq, 0.0);
}

SolveReport solve_dirichlet(const DiscreteFunction& f, const StiffnessQuadrature& sq, const SolveOptions& opt)
{
    if (!(opt.tol > 0.0))
        throw DomainError("solve_dirichlet: tol must be positive");
    if (opt.max_iters < 0 || opt.refresh_every < 0 || !(opt.regularization > 0.0))
        throw DomainError("solve_dirichlet: invalid iteration settings");
    if (!(f.grid == sq.grid))
        throw DomainError("solve_dirichlet: grid mismatch");
    if (!f.values.allFinite())
        throw DomainError("solve_dirichlet: non-finite source");

    const Grid& grid = sq.grid;
    const double p = sq.params.p, h = grid.h();
    const Eigen::VectorXd load = h * f.values;
    const bool relinearize = opt.precondition && opt.refresh_every > 0 && p != 2.0;

    // base: fixed p = 2 preconditioner; llt: current one (relinearized for p != 2).
    Eigen::LLT<Eigen::MatrixXd> base, llt;
    auto factor = [](Eigen::LLT<Eigen::MatrixXd>& f, const Eigen::MatrixXd& P) {
        f.compute(P);
        if (f.info() != Eigen::Success)
            throw std::runtime_error("solve_dirichlet: preconditioner factorization failed");
    };
    if (opt.precondition) {
        double s_pc = opt.precond_s;
        if (s_pc <= 0.0)
            s_pc = std::clamp(1.0 - p * (1.0 - sq.params.s) / 2.0, 0.05, 0.95);
        if (p == 2.0 && opt.precond_s <= 0.0) {
            factor(base, stiffness_matrix_p2(sq));
        } else {
            FemConfig pc_cfg = sq.config;
            pc_cfg.mode = StiffnessMode::galerkin_pl;
            factor(base, stiffness_matrix_p2(assemble(grid, FracParams::make(1, s_pc, 2.0), pc_cfg)));
        }
        llt = base;
    }
    auto eval = [&](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
        if (g) {
            g->resize(grid.n);
            const double e = seminorm_energy_gradient(u, sq, *g);
            *g -= load;
            return e - load.dot(u);
        }
        return seminorm_energy(u, sq) - load.dot(u);
    };
    auto threshold = [&](double e) { return opt.tol * (1.0 + std::abs(e)); };

    SolveReport rep;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.n), g;
    double E = eval(u, &g);
    constexpr double c_armijo = 1e-4;
    double t = 1.0;
    int it = 0;
    bool relinearized = false;
    bool floor_hit = false;
    // For p < 2 the gradient is only (p-1)-Holder in u: a few ulps of asymmetry
    // between nearly equal nodes already produce this much gradient.
    auto rounding_floor = [&](const Eigen::VectorXd& v) {
        if (p >= 2.0)
            return 0.0;
        const double coeff = sq.config.mode == StiffnessMode::galerkin_pl ? sq.self_coeff : sq.graph_weights.maxCoeff();
        const double ulp = 4.0 * std::numeric_limits<double>::epsilon() * v.lpNorm<Eigen::Infinity>();
        return 4.0 * coeff * std::pow(ulp, p - 1.0);
    };
    rep.message = "max_iters reached";

    // Armijo backtracking from t along d; halves until u + t d rounds back to u.
    auto backtrack = [&](const Eigen::VectorXd& d, double& step, Eigen::VectorXd& u_new) {
        for (;; step *= 0.5) {
            u_new = u + step * d;
            const Eigen::VectorXd du = u_new - u;
            if (du.isZero(0.0))
                return false;
            if (seminorm_difference(u, du, sq) - load.dot(du) <= c_armijo * g.dot(du))
                return true;
        }
    };

    while (true) {
        if (g.lpNorm<Eigen::Infinity>() <= threshold(E)) {
            rep.converged = true;
            rep.message = "converged";
            break;
        }
        if (it >= opt.max_iters)
            break;
        if (relinearize && it > 0 && (it - 1) % opt.refresh_every == 0) {
            factor(llt, linearized_matrix(u, sq, opt.regularization * u.lpNorm<Eigen::Infinity>()));
            relinearized = true;
            t = 1.0;
        }
        Eigen::VectorXd d = opt.precondition ? Eigen::VectorXd(-llt.solve(g)) : Eigen::VectorXd(-g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            rep.message = "preconditioned direction is not a descent direction";
            break;
        }
        if (it == 0 && u.isZero(0.0)) {
            // Exact line minimum of t^p S - t L along d for the homogeneous energy.
            const double S = seminorm_energy(d, sq);
            const double L = load.dot(d);
            if (S > 0.0 && L > 0.0)
                t = std::pow(L / (p * S), 1.0 / (p - 1.0));
        }

        Eigen::VectorXd u_new;
        bool accepted = backtrack(d, t, u_new);
        if (!accepted && relinearized) {
            llt = base;
            relinearized = false;
            d = -llt.solve(g);
            slope = g.dot(d);
            t = 1.0;
            accepted = slope < 0.0 && backtrack(d, t, u_new);
        }
        if (!accepted && opt.precondition) {
            // Steepest descent as the last resort near kinks of the p < 2 energy.
            d = -g;
            slope = g.dot(d);
            t = 1.0;
            accepted = backtrack(d, t, u_new);
        }
        if (!accepted) {
            if (g.lpNorm<Eigen::Infinity>() <= rounding_floor(u)) {
                rep.converged = true;
                rep.message = "converged to the gradient rounding floor";
                floor_hit = true;
            } else {
                rep.message = "line search failed";
            }
            break;
        }
        Eigen::VectorXd g_new;
        const double E_new = eval(u_new, &g_new);
        const double sy = t * d.dot(g_new - g);
        const double t_next = t * t * (-slope) / sy;
        u = std::move(u_new);
        g = std::move(g_new);
        E = E_new;
        ++it;
        t = (sy > 0.0 && std::isfinite(t_next)) ? t_next : 2.0 * t;
    }
    rep.solution = DiscreteFunction(grid, u);
    rep.iterations = it;
    rep.final_energy = E;
    rep.grad_sup_norm = g.lpNorm<Eigen::Infinity>();
    rep.tolerance = floor_hit ? std::max(threshold(E), rounding_floor(u)) : threshold(E);
    return rep;
}

double comparison_check(const SolveReport& u1, const SolveReport& u2)
{
    if (!(u1.solution.grid == u2.solution.grid))
        throw DomainError("comparison_check: grid mismatch");
    return std::max(0.0, (u1.solution.values - u2.solution.values).maxCoeff());
}

std::vector<double> residual_pv(const SolveReport& report, const DiscreteFunction& f, const FracParams& params,
                                const PVConfig& cfg, const std::vector<double>& probes)
{
    const Grid& grid = report.solution.grid;
    if (!(f.grid == grid))
        throw DomainError("residual_pv: grid mismatch");
    const double h = grid.h();
    PVConfig c = cfg;
    c.inner_cutoff = std::min(cfg.inner_cutoff, 0.25 * h);
    const Field1 u = report.solution.to_field();
    std::vector<double> out;
    out.reserve(probes.size());
    for (double x : probes) {
        if (!(x - grid.a >= 4.0 * h - 1e-12 * grid.length() && grid.b - x >= 4.0 * h - 1e-12 * grid.length()))
            throw DomainError("residual_pv: probe closer than 4h to the boundary");
        out.push_back(pv_fplap_point(u, x, params, c) - f(x));
    }
    return out;
}

void set_num_threads(int k)
{
#ifdef _OPENMP
    if (k > 0)
        omp_set_num_threads(k);
#else
    (void)k;
#endif
}

} // namespace fplap
