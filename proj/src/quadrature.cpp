#include "fplap/quadrature.hpp"

#include "fplap/core_math.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace fplap {

namespace {

GaussRule build_rule(int order)
{
    // Newton iteration on P_n, roots mapped from [-1,1] to [0,1].
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
            }
            dp = order * (x * p1 - p2) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15)
                break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.nodes[order - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[order - 1 - i] = 0.5 * w;
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int order)
{
    if (order < 1 || order > kMaxGaussOrder)
        throw DomainError("gauss_legendre: order out of range");
    static const std::array<GaussRule, kMaxGaussOrder + 1> table = [] {
        std::array<GaussRule, kMaxGaussOrder + 1> t;
        for (int n = 1; n <= kMaxGaussOrder; ++n)
            t[n] = build_rule(n);
        return t;
    }();
    return table[order];
}

std::vector<Panel> graded_panels(double lo, double hi, bool grade_lo, bool grade_hi, int depth)
{
    std::vector<Panel> out;
    if (!(hi > lo))
        return out;
    if (grade_lo && grade_hi) {
        const double mid = 0.5 * (lo + hi);
        out = graded_panels(lo, mid, true, false, depth);
        auto right = graded_panels(mid, hi, false, true, depth);
        out.insert(out.end(), right.begin(), right.end());
        return out;
    }
    if (!grade_lo && !grade_hi) {
        out.push_back({lo, hi});
        return out;
    }
    const double len = hi - lo;
    std::vector<double> cuts;
    cuts.reserve(depth + 2);
    for (int k = depth; k >= 1; --k)
        cuts.push_back(std::ldexp(len, -k));
    if (grade_lo) {
        double prev = lo;
        for (double c : cuts) {
            out.push_back({prev, lo + c});
            prev = lo + c;
        }
        out.push_back({prev, hi});
    } else {
        double prev = hi;
        std::vector<Panel> rev;
        for (double c : cuts) {
            rev.push_back({hi - c, prev});
            prev = hi - c;
        }
        rev.push_back({lo, prev});
        out.assign(rev.rbegin(), rev.rend());
    }
    return out;
}

double pairwise_sum(std::span<const double> terms)
{
    if (terms.size() <= 8) {
        double acc = 0.0;
        for (double t : terms)
            acc += t;
        return acc;
    }
    const std::size_t mid = terms.size() / 2;
    return pairwise_sum(terms.first(mid)) + pairwise_sum(terms.subspan(mid));
}

} // namespace fplap
