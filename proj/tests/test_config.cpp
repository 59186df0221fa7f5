#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "singsys/config.hpp"
#include "singsys/csvio.hpp"

using namespace singsys;

namespace {

RunConfig parse_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "test");
}

int error_line(const std::string& text) {
    std::istringstream is(text);
    try {
        parse_config(is, "test");
    } catch (const config_error& e) {
        return e.line;
    }
    return -1;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("defaults are the shipped preset") {
        RunConfig cfg = parse_text("");
        CHECK(cfg.exponents.p == 2.0);
        CHECK(cfg.exponents.q == 2.0);
        CHECK(cfg.exponents.N == 3);
        CHECK(cfg.exponents.alpha1 == -0.5);
        CHECK(cfg.exponents.beta1 == 0.5);
        CHECK(cfg.exponents.alpha2 == 0.5);
        CHECK(cfg.exponents.beta2 == -0.5);
        CHECK(cfg.mesh_kind == "ball");
        CHECK(cfg.mesh_n == 129);
        CHECK(cfg.mesh_L == 1.0);
        CHECK(cfg.delta() == 0.1);  // L / 10 when unset
        CHECK(cfg.solver.newton_tol == 1e-10);
        CHECK(cfg.solver.max_iter == 100);
        CHECK(cfg.eps_schedule.size() == 4);
        CHECK(cfg.seed == 1);
    }

    SUBCASE("full file with comments and spacing") {
        RunConfig cfg = parse_text(
            "# run description\n"
            "p = 3\n"
            "q=2.5\n"
            "N = 4\n"
            "alpha1 = -0.25   # inline comment\n"
            "beta1 = 0.75\n"
            "alpha2 = 0.5\n"
            "beta2 = -0.125\n"
            "\n"
            "mesh.kind = interval\n"
            "mesh.n = 255\n"
            "mesh.L = 2\n"
            "mesh.delta = 0.04\n"
            "solver.tol = 1e-12\n"
            "solver.max_iter = 250\n"
            "solver.damping = 0.25\n"
            "eps.schedule = 1e-1, 1e-2, 5e-3\n"
            "seed = 42\n");
        CHECK(cfg.exponents.p == 3.0);
        CHECK(cfg.exponents.q == 2.5);
        CHECK(cfg.exponents.N == 4);
        CHECK(cfg.exponents.alpha1 == -0.25);
        CHECK(cfg.mesh_kind == "interval");
        CHECK(cfg.mesh_n == 255);
        CHECK(cfg.mesh_L == 2.0);
        CHECK(cfg.mesh_delta == 0.04);
        CHECK(cfg.delta() == 0.04);
        CHECK(cfg.solver.newton_tol == 1e-12);
        CHECK(cfg.solver.max_iter == 250);
        CHECK(cfg.solver.damping == 0.25);
        REQUIRE(cfg.eps_schedule.size() == 3);
        CHECK(cfg.eps_schedule[2] == 5e-3);
        CHECK(cfg.seed == 42);
    }

    SUBCASE("line numbers in failures") {
        CHECK(error_line("p = 2\nbogus_key = 1\n") == 2);
        CHECK(error_line("p = two\n") == 1);
        CHECK(error_line("\n\np 2\n") == 3);
        CHECK(error_line("p = 2\np = 3\n") == 2);          // duplicate
        CHECK(error_line("mesh.n = 129 extra\n") == 1);    // trailing junk
        CHECK(error_line("mesh.kind = disk\n") == 1);
        CHECK(error_line("eps.schedule = 1e-1,,1e-3\n") == 1);
        CHECK(error_line("p =\n") == 1);                   // empty value
        CHECK(error_line("solver.damping = 0\n") == 1);
        CHECK(error_line("mesh.n = 2\n") == 1);
    }

    SUBCASE("mesh factory resolves kind, dimension and delta") {
        RunConfig cfg = parse_text("mesh.kind = ball\nmesh.n = 65\nN = 3\n");
        Mesh mesh = make_mesh(cfg);
        CHECK(mesh.kind == Mesh::Kind::ball);
        CHECK(mesh.n == 65);
        CHECK(mesh.delta == 0.1);
        RunConfig flat = parse_text("mesh.kind = interval\nmesh.n = 65\n");
        CHECK(make_mesh(flat).kind == Mesh::Kind::interval);
    }

    SUBCASE("echo covers every key and round-trips") {
        RunConfig cfg = parse_text("p = 2.5\neps.schedule = 1e-1,1e-2\nseed = 9\n");
        auto echo = echo_config(cfg);
        REQUIRE(echo.size() == 16);
        std::string text;
        for (const auto& [k, v] : echo) text += k + " = " + v + "\n";
        RunConfig back = parse_text(text);
        CHECK(back.exponents.p == cfg.exponents.p);
        CHECK(back.eps_schedule == cfg.eps_schedule);
        CHECK(back.seed == cfg.seed);
        CHECK(back.mesh_delta == cfg.delta());  // default resolved in the echo
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), config_error);
    }
}

TEST_CASE("csv round trip") {
    const std::string path = "test_roundtrip.csv";

    CsvTable t;
    t.comments = {"artifact.version = 1", "config.p = 2", "eps.final = 1.0000000000000001e-09"};
    t.columns = {"node", "u", "label"};
    add_row(t, {format_number(0.0078125), format_number(0.27042179443305217), "inner"});
    add_row(t, {format_number(1.0 / 3.0), format_number(-1.5e-300), "outer"});
    write_csv(path, t);

    CsvTable r = read_csv(path);
    REQUIRE(r.columns == t.columns);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.comments == t.comments);
    CHECK(comment_value(r, "eps.final") == "1.0000000000000001e-09");
    CHECK(comment_value(r, "missing") == "");
    CHECK(column_index(r, "u") == 1);
    CHECK(column_index(r, "absent") == -1);
    // numeric cells recover identical bits
    CHECK(cell_number(r, 0, 1) == 0.27042179443305217);
    CHECK(cell_number(r, 1, 0) == 1.0 / 3.0);
    CHECK(cell_number(r, 1, 1) == -1.5e-300);
    CHECK_THROWS(cell_number(r, 0, 2));  // "inner" is not a number
    CHECK_THROWS(cell_number(r, 5, 0));

    SUBCASE("rewriting produces identical bytes") {
        write_csv("test_roundtrip2.csv", r);
        std::ifstream a(path, std::ios::binary), b("test_roundtrip2.csv", std::ios::binary);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        CHECK(sa.str() == sb.str());
        std::remove("test_roundtrip2.csv");
    }

    SUBCASE("ragged input rejected") {
        std::ofstream bad("test_ragged.csv", std::ios::binary);
        bad << "a,b\n1,2\n3\n";
        bad.close();
        CHECK_THROWS(read_csv("test_ragged.csv"));
        std::remove("test_ragged.csv");
    }

    CHECK_THROWS(read_csv("no_such_file.csv"));
    std::remove(path.c_str());
}
