#pragma once

#include "fplap/core_math.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace fplap::testing {

/// Small seeded generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }

    /// Log-uniform on [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    /// Admissible (s, p) with s in [smin, smax] and p in [pmin, pmax].
    FracParams params(double smin = 0.1, double smax = 0.9, double pmin = 1.2, double pmax = 4.0)
    {
        return FracParams::make(1, uniform(smin, smax), uniform(pmin, pmax));
    }

    Eigen::VectorXd vector(int n, double lo, double hi)
    {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
            v[i] = uniform(lo, hi);
        return v;
    }

    /// Nonnegative samples rescaled to mean exactly 1 (up to rounding).
    Eigen::VectorXd unit_mean_sample(int n)
    {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
            v[i] = coin() ? uniform(0.0, 1.0) : -std::log(uniform(1e-12, 1.0));
        v /= v.mean();
        return v;
    }

private:
    std::mt19937_64 rng_;
};

} // namespace fplap::testing
