#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace fplap {

/// Gauss-Legendre rule on [0,1].
struct GaussRule {
    Eigen::ArrayXd nodes;
    Eigen::ArrayXd weights;
    int order() const { return static_cast<int>(nodes.size()); }
};

constexpr int kMaxGaussOrder = 64;

/// Cached rule of the given order (1..kMaxGaussOrder). Thread-safe.
const GaussRule& gauss_legendre(int order);

struct Panel {
    double lo;
    double hi;
};

/// Partition of [lo, hi] refined geometrically (ratio 1/2) toward the
/// flagged endpoints. With both ends flagged the interval is split at its
/// midpoint first. depth is the number of halvings.
std::vector<Panel> graded_panels(double lo, double hi, bool grade_lo, bool grade_hi, int depth);

/// Sum in a fixed pairwise order; result is independent of how the terms were produced.
double pairwise_sum(std::span<const double> terms);

/// Composite Gauss quadrature of f over the given panels.
template <typename F>
double integrate_panels(F&& f, const std::vector<Panel>& panels, const GaussRule& rule)
{
    std::vector<double> partial;
    partial.reserve(panels.size());
    for (const Panel& pn : panels) {
        const double len = pn.hi - pn.lo;
        if (!(len > 0.0))
            continue;
        double acc = 0.0;
        for (int k = 0; k < rule.order(); ++k)
            acc += rule.weights[k] * f(pn.lo + len * rule.nodes[k]);
        partial.push_back(acc * len);
    }
    return pairwise_sum(partial);
}

/// Gauss quadrature on one panel, bisected until the panel estimate and the
/// sum over its halves agree to rel_tol times the integral of |f|.
template <typename F>
double integrate_adaptive(F&& f, const Panel& pn, const GaussRule& rule, double rel_tol, int max_depth)
{
    auto eval = [&](double lo, double hi, double& mag) {
        const double len = hi - lo;
        double acc = 0.0, abs_acc = 0.0;
        for (int k = 0; k < rule.order(); ++k) {
            const double t = rule.weights[k] * f(lo + len * rule.nodes[k]);
            acc += t;
            abs_acc += std::abs(t);
        }
        mag = abs_acc * len;
        return acc * len;
    };
    auto rec = [&](auto&& self, double lo, double hi, double whole, int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        double m1 = 0.0, m2 = 0.0;
        const double left = eval(lo, mid, m1);
        const double right = eval(mid, hi, m2);
        const double fine = left + right;
        if (depth >= max_depth || !(mid > lo && mid < hi) || std::abs(fine - whole) <= rel_tol * (m1 + m2))
            return fine;
        return self(self, lo, mid, left, depth + 1) + self(self, mid, hi, right, depth + 1);
    };
    if (!(pn.hi > pn.lo))
        return 0.0;
    double mag = 0.0;
    const double whole = eval(pn.lo, pn.hi, mag);
    return rec(rec, pn.lo, pn.hi, whole, 0);
}

} // namespace fplap
