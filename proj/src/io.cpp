#include "fplap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fplap {

using nlohmann::json;

namespace {

/// Object reader that rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw DomainError(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw DomainError(path_ + "." + key + ": " + e.what());
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out)
    {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null())
            return;
        T v{};
        get(key, v);
        out = v;
    }

    Section sub(const char* key)
    {
        seen_.insert(key);
        return Section(j_.contains(key) ? j_.at(key) : empty(), path_ + "." + key);
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k))
                throw DomainError(path_ + ": unknown key '" + k + "'");
    }

private:
    static const json& empty()
    {
        static const json e = json::object();
        return e;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

StiffnessMode parse_mode(const std::string& name)
{
    if (name == "galerkin_pl")
        return StiffnessMode::galerkin_pl;
    if (name == "graph_pc")
        return StiffnessMode::graph_pc;
    throw DomainError("fem.mode: expected 'galerkin_pl' or 'graph_pc'");
}

std::string mode_name(StiffnessMode m)
{
    return m == StiffnessMode::galerkin_pl ? "galerkin_pl" : "graph_pc";
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& what)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw DomainError("cannot parse " + what + " from '" + t + "'");
    return v;
}

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void SourceSpec::validate() const
{
    if (kind == Kind::constant) {
        if (!std::isfinite(value))
            throw DomainError("source.value must be finite");
        return;
    }
    if (values.size() != breaks.size() + 1)
        throw DomainError("source: a table needs exactly one more value than breaks");
    if (!std::is_sorted(breaks.begin(), breaks.end()) ||
        std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end())
        throw DomainError("source.breaks must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v))
            throw DomainError("source.values must be finite");
}

double SourceSpec::operator()(double x) const
{
    if (kind == Kind::constant)
        return value;
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    return values[static_cast<std::size_t>(it - breaks.begin())];
}

void ExperimentConfig::validate() const
{
    params.validate();
    Grid::make(a, b, n);
    source.validate();
    fem.validate();
    if (fem.mode == StiffnessMode::graph_pc && params.ps() >= 1.0)
        throw DomainError("fem.mode: graph_pc requires p*s < 1");
    pv.validate();
    if (!(solver.tol > 0.0) || solver.max_iters < 0 || solver.refresh_every < 0 || !(solver.regularization > 0.0))
        throw DomainError("solver: tol and regularization must be positive, counts non-negative");
    if (!(boundary_window > 0.0 && boundary_window < 0.5))
        throw DomainError("windows.boundary must lie in (0, 0.5)");
    if (levels < 3)
        throw DomainError("windows.levels must be >= 3");
    if (osc_radius && !(*osc_radius > 0.0))
        throw DomainError("windows.radius must be positive");
    for (double r : radii)
        if (!(r > 0.0))
            throw DomainError("harnack.radii must be positive");
    if (!(K >= 0.0))
        throw DomainError("harnack.K must be non-negative");
    if (sweep_s.empty() || sweep_p.empty())
        throw DomainError("sweep lists must be non-empty");
    for (double s : sweep_s)
        for (double p : sweep_p)
            FracParams::make(1, s, p);
    const SuiteSettings& st = suite;
    if (st.boundary_n < 2 || st.comparison_n < 2 || st.gradient_n < 2 || st.scaling_n < 2 || st.comparison_pairs < 1 ||
        st.gradient_states < 1 || st.jensen_trials < 1 || st.additivity_pairs < 1 || st.boundary_max_iters < 1)
        throw DomainError("suite: sizes must be positive (grids need n >= 2)");
    for (int id : st.only)
        if (id < 1 || id > 13)
            throw DomainError("suite.only: criterion ids run from 1 to 13");
}

ExperimentConfig parse_config(const json& doc)
{
    ExperimentConfig cfg;
    Section root(doc, "config");

    Section params = root.sub("params");
    double s = cfg.params.s, p = cfg.params.p;
    params.get("s", s);
    params.get("p", p);
    params.finish();
    cfg.params = FracParams::make(1, s, p);

    Section domain = root.sub("domain");
    domain.get("a", cfg.a);
    domain.get("b", cfg.b);
    domain.finish();

    Section grid = root.sub("grid");
    grid.get("n", cfg.n);
    grid.finish();

    Section src = root.sub("source");
    std::string type = "constant";
    src.get("type", type);
    if (type == "constant") {
        cfg.source.kind = SourceSpec::Kind::constant;
        src.get("value", cfg.source.value);
    } else if (type == "table") {
        cfg.source.kind = SourceSpec::Kind::table;
        src.get("breaks", cfg.source.breaks);
        src.get("values", cfg.source.values);
    } else {
        throw DomainError("source.type: expected 'constant' or 'table'");
    }
    src.finish();

    Section fem = root.sub("fem");
    std::string mode = mode_name(cfg.fem.mode);
    fem.get("mode", mode);
    cfg.fem.mode = parse_mode(mode);
    fem.get("adjacent_order", cfg.fem.adjacent_order);
    fem.get("exterior_order", cfg.fem.exterior_order);
    fem.get("far_bands", cfg.fem.far_bands);
    fem.get("blocks", cfg.fem.blocks);
    fem.finish();

    Section pv = root.sub("quadrature");
    pv.get("inner_cutoff", cfg.pv.inner_cutoff);
    pv.get("outer_cutoff", cfg.pv.outer_cutoff);
    pv.get("grading_depth", cfg.pv.grading_depth);
    pv.get("gauss_order", cfg.pv.gauss_order);
    pv.get("angular_panels", cfg.pv.angular_panels);
    pv.get("max_halving_change", cfg.pv.max_halving_change);
    pv.finish();

    Section sol = root.sub("solver");
    sol.get("tol", cfg.solver.tol);
    sol.get("max_iters", cfg.solver.max_iters);
    sol.get("precond_s", cfg.solver.precond_s);
    sol.get("precondition", cfg.solver.precondition);
    sol.get("refresh_every", cfg.solver.refresh_every);
    sol.get("regularization", cfg.solver.regularization);
    sol.finish();

    Section win = root.sub("windows");
    win.get("boundary", cfg.boundary_window);
    win.get("levels", cfg.levels);
    win.get("radius", cfg.osc_radius);
    win.finish();

    Section har = root.sub("harnack");
    har.get("centers", cfg.centers);
    har.get("radii", cfg.radii);
    har.get("K", cfg.K);
    har.finish();

    Section sweep = root.sub("sweep");
    sweep.get("s", cfg.sweep_s);
    sweep.get("p", cfg.sweep_p);
    sweep.finish();

    Section suite = root.sub("suite");
    suite.get("boundary_n", cfg.suite.boundary_n);
    suite.get("boundary_max_iters", cfg.suite.boundary_max_iters);
    suite.get("comparison_n", cfg.suite.comparison_n);
    suite.get("comparison_pairs", cfg.suite.comparison_pairs);
    suite.get("gradient_n", cfg.suite.gradient_n);
    suite.get("gradient_states", cfg.suite.gradient_states);
    suite.get("scaling_n", cfg.suite.scaling_n);
    suite.get("jensen_trials", cfg.suite.jensen_trials);
    suite.get("additivity_pairs", cfg.suite.additivity_pairs);
    suite.get("only", cfg.suite.only);
    suite.finish();

    root.get("input", cfg.input);
    root.get("seed", cfg.seed);
    root.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DomainError("config " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg = parse_config(doc);
    if (cfg.input && std::filesystem::path(*cfg.input).is_relative())
        cfg.input = (path.parent_path() / *cfg.input).lexically_normal().string();
    return cfg;
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["params"] = {{"s", cfg.params.s}, {"p", cfg.params.p}};
    j["domain"] = {{"a", cfg.a}, {"b", cfg.b}};
    j["grid"] = {{"n", cfg.n}};
    if (cfg.source.kind == SourceSpec::Kind::constant)
        j["source"] = {{"type", "constant"}, {"value", cfg.source.value}};
    else
        j["source"] = {{"type", "table"}, {"breaks", cfg.source.breaks}, {"values", cfg.source.values}};
    j["fem"] = {{"mode", mode_name(cfg.fem.mode)},
                {"adjacent_order", cfg.fem.adjacent_order},
                {"exterior_order", cfg.fem.exterior_order},
                {"far_bands", cfg.fem.far_bands},
                {"blocks", cfg.fem.blocks}};
    j["quadrature"] = {{"inner_cutoff", cfg.pv.inner_cutoff},   {"outer_cutoff", cfg.pv.outer_cutoff},
                       {"grading_depth", cfg.pv.grading_depth}, {"gauss_order", cfg.pv.gauss_order},
                       {"angular_panels", cfg.pv.angular_panels}, {"max_halving_change", cfg.pv.max_halving_change}};
    j["solver"] = {{"tol", cfg.solver.tol},
                   {"max_iters", cfg.solver.max_iters},
                   {"precond_s", cfg.solver.precond_s},
                   {"precondition", cfg.solver.precondition},
                   {"refresh_every", cfg.solver.refresh_every},
                   {"regularization", cfg.solver.regularization}};
    j["windows"] = {{"boundary", cfg.boundary_window}, {"levels", cfg.levels},
                    {"radius", cfg.osc_radius ? json(*cfg.osc_radius) : json(nullptr)}};
    j["harnack"] = {{"centers", cfg.centers}, {"radii", cfg.radii}, {"K", cfg.K}};
    j["sweep"] = {{"s", cfg.sweep_s}, {"p", cfg.sweep_p}};
    const SuiteSettings& st = cfg.suite;
    j["suite"] = {{"boundary_n", st.boundary_n},         {"boundary_max_iters", st.boundary_max_iters},
                  {"comparison_n", st.comparison_n},     {"comparison_pairs", st.comparison_pairs},
                  {"gradient_n", st.gradient_n},         {"gradient_states", st.gradient_states},
                  {"scaling_n", st.scaling_n},           {"jensen_trials", st.jensen_trials},
                  {"additivity_pairs", st.additivity_pairs}, {"only", st.only}};
    j["input"] = cfg.input ? json(*cfg.input) : json(nullptr);
    j["seed"] = cfg.seed;
    return j;
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_solution(const std::filesystem::path& path, const DiscreteFunction& u, const FracParams& params)
{
    std::ofstream out(path);
    if (!out)
        throw DomainError("cannot write " + path.string());
    const Grid& g = u.grid;
    out << "# a=" << format_double(g.a) << " b=" << format_double(g.b) << " n=" << g.n
        << " s=" << format_double(params.s) << " p=" << format_double(params.p) << '\n';
    for (Eigen::Index i = 0; i < u.values.size(); ++i)
        out << format_double(u.values[i]) << '\n';
}

SolutionFile read_solution(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DomainError("cannot open solution file " + path.string());
    std::string header;
    std::getline(in, header);
    if (header.rfind("#", 0) != 0)
        throw DomainError(path.string() + ": missing '# a=.. b=.. n=.. s=.. p=..' header");
    std::istringstream hs(header.substr(1));
    std::map<std::string, std::string> kv;
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw DomainError(path.string() + ": malformed header token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    for (const char* k : {"a", "b", "n", "s", "p"})
        if (!kv.count(k))
            throw DomainError(path.string() + ": header lacks '" + k + "'");
    const double nd = parse_number(kv["n"], "n");
    if (nd != std::floor(nd) || nd < 2 || nd > 1e8)
        throw DomainError(path.string() + ": n must be an integer >= 2");
    const Grid g = Grid::make(parse_number(kv["a"], "a"), parse_number(kv["b"], "b"), static_cast<int>(nd));
    const FracParams params = FracParams::make(1, parse_number(kv["s"], "s"), parse_number(kv["p"], "p"));

    Eigen::VectorXd values(g.n);
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        if (k >= g.n)
            throw DomainError(path.string() + ": more than n values");
        values[k++] = parse_number(line, "nodal value");
    }
    if (k != g.n)
        throw DomainError(path.string() + ": expected " + std::to_string(g.n) + " values, found " + std::to_string(k));
    return {DiscreteFunction(g, std::move(values)), params};
}

CsvTable::CsvTable(std::vector<std::string> columns, json provenance)
    : columns_(std::move(columns)), provenance_(std::move(provenance))
{
}

CsvTable& CsvTable::row()
{
    rows_.emplace_back();
    return *this;
}

CsvTable& CsvTable::operator<<(double v)
{
    return *this << format_double(v);
}

CsvTable& CsvTable::operator<<(int v)
{
    return *this << std::to_string(v);
}

CsvTable& CsvTable::operator<<(bool v)
{
    return *this << std::string(v ? "true" : "false");
}

CsvTable& CsvTable::operator<<(const std::string& v)
{
    if (rows_.empty())
        row();
    if (rows_.back().size() >= columns_.size())
        throw std::logic_error("CsvTable: too many cells in row");
    rows_.back().push_back(csv_escape(v));
    return *this;
}

void CsvTable::write(std::ostream& os) const
{
    os << "# config=" << provenance_.dump() << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
        if (r.size() != columns_.size())
            throw std::logic_error("CsvTable: incomplete row");
        for (std::size_t i = 0; i < r.size(); ++i)
            os << (i ? "," : "") << r[i];
        os << '\n';
    }
}

void CsvTable::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw DomainError("cannot write " + path.string());
    write(out);
}

void write_error(const std::filesystem::path& path, const std::string& kind, const std::string& message,
                 int exit_code, const json& provenance)
{
    std::ofstream out(path);
    if (!out)
        return;
    json rec = {{"error", kind}, {"message", message}, {"exit_code", exit_code}, {"config", provenance}};
    out << rec.dump(2) << '\n';
}

} // namespace fplap
