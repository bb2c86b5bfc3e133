#include "fplap/io.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fplap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "fplap_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("an empty document yields the defaults")
{
    const ExperimentConfig cfg = parse_config(json::object());
    CHECK(cfg.params.s == 0.5);
    CHECK(cfg.params.p == 2.0);
    CHECK(cfg.a == -1.0);
    CHECK(cfg.b == 1.0);
    CHECK(cfg.n == 512);
    CHECK(cfg.source.kind == SourceSpec::Kind::constant);
    CHECK(cfg.source.value == 1.0);
    CHECK(cfg.pv.grading_depth == 24);
    CHECK(cfg.sweep_s.size() * cfg.sweep_p.size() == 9);
    CHECK(cfg.seed == 0);
    CHECK_FALSE(cfg.input);
}

TEST_CASE("configuration fields are read and validated")
{
    const json doc = json::parse(R"({
        "params": {"s": 0.3, "p": 3},
        "domain": {"a": 0, "b": 2},
        "grid": {"n": 64},
        "source": {"type": "table", "breaks": [0.5, 1.5], "values": [1, 0, 2]},
        "quadrature": {"grading_depth": 6, "inner_cutoff": 0.002},
        "solver": {"tol": 1e-9, "max_iters": 50},
        "windows": {"boundary": 0.2, "levels": 4, "radius": 0.5},
        "harnack": {"centers": [1.0], "radii": [0.4], "K": 2},
        "sweep": {"s": [0.4], "p": [2.5]},
        "suite": {"only": [1, 13], "jensen_trials": 100},
        "input": "solution.txt",
        "seed": 42
    })");
    const ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.params.s == 0.3);
    CHECK(cfg.params.p == 3.0);
    CHECK(cfg.b == 2.0);
    CHECK(cfg.n == 64);
    CHECK(cfg.source(0.2) == 1.0);
    CHECK(cfg.source(1.0) == 0.0);
    CHECK(cfg.source(1.9) == 2.0);
    CHECK(cfg.pv.grading_depth == 6);
    CHECK(cfg.solver.max_iters == 50);
    CHECK(*cfg.osc_radius == 0.5);
    CHECK(cfg.K == 2.0);
    CHECK(cfg.suite.only == std::vector<int>{1, 13});
    CHECK(*cfg.input == "solution.txt");
    CHECK(cfg.seed == 42);

    // The resolved form reads back to itself.
    CHECK(to_json(parse_config(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("invalid documents are rejected")
{
    for (const char* text : {R"({"params": {"s": 1.2}})", R"({"params": {"p": 1}})", R"({"grid": {"n": 1}})",
                             R"({"domain": {"a": 1, "b": 0}})", R"({"bogus": 1})", R"({"params": {"t": 1}})",
                             R"({"params": {"s": "half"}})", R"({"source": {"type": "table", "breaks": [0], "values": [1]}})",
                             R"({"source": {"type": "spline"}})", R"({"quadrature": {"grading_depth": 0}})",
                             R"({"solver": {"tol": -1}})", R"({"windows": {"boundary": 0.7}})",
                             R"({"fem": {"mode": "graph_pc"}})", R"({"suite": {"only": [14]}})", R"([1, 2])"}) {
        INFO(std::string(text));
        CHECK_THROWS_AS(parse_config(json::parse(text)), DomainError);
    }
    const fs::path bad = scratch("bad.json");
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_config(bad), DomainError);
    CHECK_THROWS_AS(load_config(scratch("missing.json")), DomainError);
}

TEST_CASE("doubles print in shortest round-trip form")
{
    testing::Gen gen(1);
    for (int k = 0; k < 1000; ++k) {
        const double v = gen.uniform(-1.0, 1.0) * std::pow(10.0, gen.integer(-300, 300));
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(NAN) == "nan");
}

TEST_CASE("solution files round-trip exactly")
{
    testing::Gen gen(2);
    const Grid g = Grid::make(-0.5, 1.25, 37);
    const DiscreteFunction u(g, gen.vector(g.n, -3.0, 3.0));
    const fs::path path = scratch("u.txt");
    write_solution(path, u, FracParams::make(1, 0.3, 2.5));
    const SolutionFile back = read_solution(path);
    CHECK(back.u.grid == g);
    CHECK(back.params.s == 0.3);
    CHECK(back.params.p == 2.5);
    CHECK((back.u.values - u.values).cwiseAbs().maxCoeff() == 0.0);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "# a=-0.5 b=1.25 n=37 s=0.3 p=2.5");

    std::ofstream(scratch("short.txt")) << "# a=0 b=1 n=3 s=0.5 p=2\n0.1\n0.2\n";
    CHECK_THROWS_AS(read_solution(scratch("short.txt")), DomainError);
    std::ofstream(scratch("nohdr.txt")) << "0.1\n0.2\n";
    CHECK_THROWS_AS(read_solution(scratch("nohdr.txt")), DomainError);
    std::ofstream(scratch("badval.txt")) << "# a=0 b=1 n=2 s=0.5 p=2\n0.1\nx\n";
    CHECK_THROWS_AS(read_solution(scratch("badval.txt")), DomainError);
    CHECK_THROWS_AS(read_solution(scratch("absent.txt")), DomainError);
}

TEST_CASE("tables carry their configuration")
{
    CsvTable t({"name", "value", "ok"}, json{{"seed", 3}});
    t.row() << std::string("a,b") << 0.25 << true;
    t.row() << std::string("plain") << 7 << false;
    std::ostringstream os;
    t.write(os);
    CHECK(os.str() == "# config={\"seed\":3}\nname,value,ok\n\"a,b\",0.25,true\nplain,7,false\n");

    CsvTable partial({"x", "y"}, json::object());
    partial.row() << 1.0;
    std::ostringstream sink;
    CHECK_THROWS(partial.write(sink));
    CHECK_THROWS(partial << 2.0 << 3.0);
}

TEST_CASE("error records are machine readable")
{
    const fs::path path = scratch("error.json");
    write_error(path, "validation", "s out of range", 1, json{{"command", "solve"}});
    std::ifstream in(path);
    const json rec = json::parse(in);
    CHECK(rec["error"] == "validation");
    CHECK(rec["exit_code"] == 1);
    CHECK(rec["config"]["command"] == "solve");
}
