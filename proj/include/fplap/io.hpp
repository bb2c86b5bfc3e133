#pragma once

#include "fplap/fem.hpp"
#include "fplap/pv_quadrature.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fplap {

/// Right-hand side of the Dirichlet problem: a constant or a piecewise-constant table.
struct SourceSpec {
    enum class Kind { constant, table };
    Kind kind = Kind::constant;
    double value = 1.0;
    std::vector<double> breaks; ///< interior break points, increasing
    std::vector<double> values; ///< breaks.size() + 1 values, left to right

    void validate() const;
    double operator()(double x) const;
};

/// Overrides for the acceptance suite.
struct SuiteSettings {
    int boundary_n = 2048;
    int boundary_max_iters = 400;
    int comparison_n = 48;
    int comparison_pairs = 50;
    int gradient_n = 32;
    int gradient_states = 20;
    int scaling_n = 128;
    int jensen_trials = 10000;
    int additivity_pairs = 20;
    std::vector<int> only; ///< criterion ids to run; empty runs all
};

/// Resolved run configuration. Every field has a default, so `{}` is a valid document.
struct ExperimentConfig {
    FracParams params = FracParams::make(1, 0.5, 2.0);
    double a = -1.0;
    double b = 1.0;
    int n = 512;
    SourceSpec source;
    FemConfig fem;
    PVConfig pv;
    SolveOptions solver;
    double boundary_window = 0.1;
    int levels = 5;
    std::optional<double> osc_radius; ///< default: half the domain length
    std::vector<double> centers;      ///< Harnack centers; default: the midpoint
    std::vector<double> radii;        ///< Harnack radii; default: a quarter of the length
    double K = 0.0;
    std::optional<std::string> input; ///< solution file consumed by exponent / harnack
    std::vector<double> sweep_s{0.3, 0.5, 0.7};
    std::vector<double> sweep_p{1.5, 2.0, 3.0};
    SuiteSettings suite;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parses and validates a configuration document. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads a JSON config; a relative "input" path is taken relative to the file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, including defaults.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Header "# a=.. b=.. n=.. s=.. p=.." followed by one interior nodal value per line.
void write_solution(const std::filesystem::path& path, const DiscreteFunction& u, const FracParams& params);

struct SolutionFile {
    DiscreteFunction u;
    FracParams params;
};

SolutionFile read_solution(const std::filesystem::path& path);

/// Comma-separated table whose first line records the resolved configuration.
class CsvTable {
public:
    CsvTable(std::vector<std::string> columns, nlohmann::json provenance);

    CsvTable& row();
    CsvTable& operator<<(double v);
    CsvTable& operator<<(int v);
    CsvTable& operator<<(bool v);
    CsvTable& operator<<(const std::string& v);

    void write(std::ostream& os) const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> columns_;
    nlohmann::json provenance_;
    std::vector<std::vector<std::string>> rows_;
};

/// Machine-readable error record written next to the outputs.
void write_error(const std::filesystem::path& path, const std::string& kind, const std::string& message,
                 int exit_code, const nlohmann::json& provenance);

} // namespace fplap
