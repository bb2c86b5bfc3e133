#pragma once

#include "fplap/io.hpp"
#include "fplap/regularity.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fplap {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string summary; ///< headline measurement
    std::string tag;     ///< "reduced" or "under-resolved" when run below the stated sizes
    std::vector<std::string> notes; ///< per-case lines, failures first
};

/// Inputs shared by every criterion.
struct SuiteContext {
    SuiteSettings settings;
    std::uint64_t seed = 0;
    FemConfig fem;
    PVConfig pv;
};

/// The 3 x 3 (s, p) sweep used throughout.
std::vector<FracParams> standard_pairs();

std::string criterion_name(int id);

/// Runs one criterion in isolation (1..13).
CriterionResult run_criterion(int id, const SuiteContext& ctx);

/// Runs the selected criteria in order; on_done fires after each one.
std::vector<CriterionResult> run_suite(const SuiteContext& ctx,
                                       const std::function<void(const CriterionResult&)>& on_done = {});

/// Checks behind the identities command, one row per (s, p).
struct IdentityRow {
    FracParams params;
    double halfline_value = 0.0;    ///< pv of x_+^s at x = 1
    double halfline_split_err = 0.0;///< |pv - 2 g1| at x = 1
    bool halfline_pass = false;
    double halfspace_value = 0.0;   ///< pv of (x_2)_+^s at (0.3, 1)
    double halfspace_err = 0.0;     ///< against the one-dimensional reduction
    bool halfspace_pass = false;
    double pieces_err = 0.0;        ///< I1, I3 against adaptive quadrature
    bool pieces_pass = false;
    double psi_max = 0.0;
    bool psi_pass = false;
    double tail_err = 0.0;          ///< relative, against the closed form for an indicator
    bool tail_pass = false;
    double additivity_err = 0.0;
    bool additivity_pass = false;
    double scaling_err = 0.0;       ///< dilation and homogeneity laws, relative
    bool scaling_pass = false;

    bool all_pass() const
    {
        return halfline_pass && halfspace_pass && pieces_pass && psi_pass && tail_pass && additivity_pass &&
               scaling_pass;
    }
};

IdentityRow identity_row(const FracParams& params, const PVConfig& cfg);

/// Independent adaptive quadrature of the defining integrals of I1 and I3.
double halfline_I1_reference(double x, const FracParams& params);
double halfline_I3_reference(double x, double eps, const FracParams& params);

} // namespace fplap
