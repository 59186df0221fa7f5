#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "singsys/mesh.hpp"

using namespace singsys;

TEST_CASE("interval mesh layout") {
    Mesh m = build_mesh(Mesh::Kind::interval, 9, 1.0, 0.1);
    CHECK(m.n == 9);
    CHECK(m.h == doctest::Approx(0.1));
    CHECK(m.node.front() == doctest::Approx(0.1));
    CHECK(m.node.back() == doctest::Approx(0.9));
    CHECK(m.edge_w.size() == 10);
    CHECK(m.cell_w.size() == 9);
    for (double w : m.edge_w) CHECK(w == 1.0);
    CHECK(m.measure_scale == 1.0);
}

TEST_CASE("interval distance and strip") {
    Mesh m = build_mesh(Mesh::Kind::interval, 9, 1.0, 0.25);
    CHECK(m.distance(0) == doctest::Approx(0.1));
    CHECK(m.distance(8) == doctest::Approx(0.1));
    CHECK(m.distance(4) == doctest::Approx(0.5));
    auto strip = m.strip_nodes();
    auto off = m.off_strip_nodes();
    CHECK(strip.size() + off.size() == 9);
    // nodes at 0.1, 0.2 and 0.8, 0.9 are strictly inside the strip
    CHECK(strip == std::vector<int>{0, 1, 7, 8});
}

TEST_CASE("ball distance uses wall only") {
    Mesh m = build_mesh(Mesh::Kind::ball, 9, 1.0, 0.25, 3);
    CHECK(m.distance(0) == doctest::Approx(0.9));
    CHECK(m.distance(8) == doctest::Approx(0.1));
    CHECK(m.strip_nodes() == std::vector<int>{7, 8});
}

TEST_CASE("interval integrate is the midpoint rule") {
    Mesh m = build_mesh(Mesh::Kind::interval, 999, 2.0, 0.1);
    std::vector<double> f(m.node.size());
    for (size_t i = 0; i < f.size(); ++i) f[i] = m.node[i] * (2.0 - m.node[i]);
    // integral of x(2-x) over (0,2) is 4/3; midpoint rule is O(h^2)
    CHECK(m.integrate(f) == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("ball integrate converges for fields vanishing at the wall") {
    // the quadrature covers interior cells only, so it is second order for
    // fields with zero trace; integral of (1 - r^2) over the unit 3-ball is
    // 8*pi/15
    double err[2];
    int ns[2] = {64, 128};
    for (int k = 0; k < 2; ++k) {
        Mesh m = build_mesh(Mesh::Kind::ball, ns[k], 1.0, 0.1, 3);
        std::vector<double> f(static_cast<size_t>(ns[k]));
        for (size_t i = 0; i < f.size(); ++i) f[i] = 1.0 - m.node[i] * m.node[i];
        err[k] = std::abs(m.integrate(f) - 8.0 * M_PI / 15.0);
    }
    CHECK(err[0] < 5e-4);
    CHECK(err[1] < 0.3 * err[0]);
}

TEST_CASE("ball cell weights are exact shell averages") {
    Mesh m = build_mesh(Mesh::Kind::ball, 10, 1.0, 0.1, 2);
    double h = m.h;
    for (int i = 0; i < m.n; ++i) {
        double rl = m.node[static_cast<size_t>(i)] - 0.5 * h;
        double rr = m.node[static_cast<size_t>(i)] + 0.5 * h;
        double exact = (rr * rr - rl * rl) / (2.0 * h);
        CHECK(m.cell_w[static_cast<size_t>(i)] == doctest::Approx(exact).epsilon(1e-14));
    }
}

TEST_CASE("build_mesh validates arguments") {
    CHECK_THROWS_AS(build_mesh(Mesh::Kind::interval, 2, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(Mesh::Kind::interval, 9, -1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(Mesh::Kind::interval, 9, 1.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(Mesh::Kind::interval, 9, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(Mesh::Kind::ball, 9, 1.0, 0.1, 1), std::invalid_argument);
}

TEST_CASE("norm helpers") {
    std::vector<double> a{1.0, -3.0, 2.0};
    std::vector<double> b{1.5, -2.0, 2.0};
    CHECK(max_norm(a) == 3.0);
    CHECK(max_abs_diff(a, b) == 1.0);
}
