#include <cmath>
#include <vector>

#include "doctest.h"
#include "singsys/errors.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"

using namespace singsys;

namespace {

std::vector<double> sample(const Mesh& m, double (*f)(double)) {
    std::vector<double> v(static_cast<size_t>(m.n));
    for (int i = 0; i < m.n; ++i) v[static_cast<size_t>(i)] = f(m.node[static_cast<size_t>(i)]);
    return v;
}

double quad_interval(double x) { return x * (1.0 - x); }
double quad_ball(double r) { return 1.0 - r * r; }
double sine(double x) { return std::sin(M_PI * x); }
// -(|u'|u')' for u = sin(pi x)
double sine_rhs_p3(double x) {
    return 2.0 * M_PI * M_PI * M_PI * std::abs(std::cos(M_PI * x)) * std::sin(M_PI * x);
}

}  // namespace

TEST_CASE("p=2 interval operator is exact on quadratics") {
    Mesh m = build_mesh(Mesh::Kind::interval, 31, 1.0, 0.1);
    std::vector<double> u = sample(m, quad_interval);
    std::vector<double> r = apply_p_laplacian(u, 2.0, m);
    for (double v : r) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("p=2 ball operator is exact on quadratics including the axis row") {
    for (int dim : {2, 3}) {
        Mesh m = build_mesh(Mesh::Kind::ball, 31, 1.0, 0.1, dim);
        std::vector<double> u = sample(m, quad_ball);
        std::vector<double> r = apply_p_laplacian(u, 2.0, m);
        // -Laplace(1 - r^2) = 2*dim in dim dimensions
        for (double v : r) CHECK(v == doctest::Approx(2.0 * dim).epsilon(1e-11));
    }
}

TEST_CASE("operator is (p-1)-homogeneous with zero floor") {
    Mesh m = build_mesh(Mesh::Kind::ball, 17, 1.0, 0.1, 3);
    std::vector<double> u = sample(m, quad_ball);
    std::vector<double> u3 = u;
    for (double& x : u3) x *= 3.0;
    double p = 2.7;
    std::vector<double> a = apply_p_laplacian(u3, p, m);
    std::vector<double> b = apply_p_laplacian(u, p, m);
    double s = std::pow(3.0, p - 1.0);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(s * b[i]).epsilon(1e-12));
}

TEST_CASE("p=3 operator converges on a manufactured solution") {
    // the flux kink where u' = 0 caps the consistency order at one in a
    // shrinking neighborhood of x = 1/2; away from it the scheme is second
    // order
    double err[2], err_off[2];
    int ns[2] = {63, 127};
    for (int k = 0; k < 2; ++k) {
        Mesh m = build_mesh(Mesh::Kind::interval, ns[k], 1.0, 0.1);
        std::vector<double> u = sample(m, sine);
        std::vector<double> f = sample(m, sine_rhs_p3);
        std::vector<double> r = apply_p_laplacian(u, 3.0, m);
        double e = 0, eo = 0;
        for (size_t i = 0; i < r.size(); ++i) {
            double d = std::abs(r[i] - f[i]);
            e = std::max(e, d);
            if (std::abs(m.node[i] - 0.5) >= 0.1) eo = std::max(eo, d);
        }
        err[k] = e;
        err_off[k] = eo;
    }
    CHECK(err[1] < 0.65 * err[0]);
    CHECK(err_off[0] < 0.05);
    CHECK(err_off[1] < 0.35 * err_off[0]);
}

TEST_CASE("p=2 solve reproduces the exact quadratic") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 63, 1.0, 0.1);
    std::vector<double> f(63, 2.0);
    std::vector<double> u = solve_dirichlet(f, 2.0, m, opts);
    std::vector<double> exact = sample(m, quad_interval);
    CHECK(max_abs_diff(u, exact) < 1e-13);

    Mesh mb = build_mesh(Mesh::Kind::ball, 63, 1.0, 0.1, 3);
    std::vector<double> fb(63, 6.0);
    std::vector<double> ub = solve_dirichlet(fb, 2.0, mb, opts);
    std::vector<double> exactb = sample(mb, quad_ball);
    CHECK(max_abs_diff(ub, exactb) < 1e-12);
}

TEST_CASE("p=3 solve converges with non-increasing energy") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 127, 1.0, 0.1);
    std::vector<double> f = sample(m, sine_rhs_p3);
    SolveStats st;
    std::vector<double> u = solve_dirichlet(f, 3.0, m, opts, nullptr, &st);
    CHECK(st.final_residual <= opts.newton_tol);
    REQUIRE(st.energies.size() >= 2);
    for (size_t k = 1; k < st.energies.size(); ++k)
        CHECK(st.energies[k] <= st.energies[k - 1] + 1e-12 * std::abs(st.energies[k - 1]));
    // the discrete solution tracks the manufactured one
    std::vector<double> exact = sample(m, sine);
    CHECK(max_abs_diff(u, exact) < 5e-3);
}

TEST_CASE("solve respects the operator scaling") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 40, 1.0, 0.1);
    double p = 2.5;
    std::vector<double> f = sample(m, sine);
    std::vector<double> u1 = solve_dirichlet(f, p, m, opts);
    std::vector<double> f2 = f;
    for (double& x : f2) x *= std::pow(2.0, p - 1.0);
    std::vector<double> u2 = solve_dirichlet(f2, p, m, opts);
    for (size_t i = 0; i < u1.size(); ++i)
        CHECK(u2[i] == doctest::Approx(2.0 * u1[i]).epsilon(1e-7));
}

TEST_CASE("interval p=2 eigenvalue matches the three-point formula") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 256, 1.0, 0.1);
    EigenPair e = principal_eigenpair(2.0, m, opts);
    double h = m.h;
    double discrete = 2.0 * (1.0 - std::cos(M_PI * h)) / (h * h);
    CHECK(e.lambda == doctest::Approx(discrete).epsilon(1e-9));
    CHECK(std::abs(e.lambda - M_PI * M_PI) < 3e-4);
    CHECK(e.residual <= opts.newton_tol * std::max(1.0, e.lambda));
    for (double v : e.phi) CHECK(v > 0);
    std::vector<double> pp(e.phi.size());
    for (size_t i = 0; i < pp.size(); ++i) pp[i] = e.phi[i] * e.phi[i];
    CHECK(m.integrate(pp) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ball p=2 eigenvalue approaches pi^2") {
    // first radial Dirichlet eigenvalue of the unit ball in 3d is pi^2
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::ball, 256, 1.0, 0.1, 3);
    EigenPair e = principal_eigenpair(2.0, m, opts);
    CHECK(std::abs(e.lambda - M_PI * M_PI) < 2e-3);
    for (double v : e.phi) CHECK(v > 0);
}

TEST_CASE("interval p=3 eigenvalue matches the quadrature reference") {
    // lambda_1(p) = (p-1) (2 I_p)^p on the unit interval with
    // I_p = integral_0^1 (1 - t^p)^{-1/p} dt; for p = 3 this evaluates to
    // 28.288761976002555
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 255, 1.0, 0.1);
    EigenPair e = principal_eigenpair(3.0, m, opts);
    CHECK(std::abs(e.lambda - 28.288761976002555) < 0.05);

    // discrete eigenvalues rescale exactly like the continuum: lambda ~ L^{-p}
    Mesh m2 = build_mesh(Mesh::Kind::interval, 255, 2.0, 0.2);
    EigenPair e2 = principal_eigenpair(3.0, m2, opts);
    CHECK(e2.lambda * 8.0 == doctest::Approx(e.lambda).epsilon(1e-8));
}

TEST_CASE("rayleigh quotient is stationary at the eigenvector") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 64, 1.0, 0.1);
    EigenPair e = principal_eigenpair(2.0, m, opts);
    CHECK(rayleigh_quotient(e.phi, 2.0, m) == doctest::Approx(e.lambda).epsilon(1e-12));
    // perturbations only increase it
    std::vector<double> v = e.phi;
    for (size_t i = 0; i < v.size(); ++i) v[i] += 0.01 * std::sin(7.0 * M_PI * m.node[i]);
    CHECK(rayleigh_quotient(v, 2.0, m) > e.lambda);
}

TEST_CASE("shifted solve hits a manufactured kink problem at p=2") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 63, 1.0, 0.1);
    std::vector<double> ustar = sample(m, quad_interval);
    double rho = 3.0;
    std::vector<double> kf(static_cast<size_t>(m.n));
    for (int i = 0; i < m.n; ++i) kf[static_cast<size_t>(i)] = (ustar[static_cast<size_t>(i)] > 0.2) ? 0.1 : 0.4;
    std::vector<double> rhs = apply_p_laplacian(ustar, 2.0, m);
    for (int i = 0; i < m.n; ++i)
        rhs[static_cast<size_t>(i)] += rho * std::max(kf[static_cast<size_t>(i)], ustar[static_cast<size_t>(i)]);
    std::vector<double> u = solve_shifted(rhs, 2.0, rho, kf, m, opts);
    CHECK(max_abs_diff(u, ustar) < 1e-9);
}

TEST_CASE("shifted solve converges for p=3") {
    SolverOptions opts;
    Mesh m = build_mesh(Mesh::Kind::interval, 63, 1.0, 0.1);
    std::vector<double> ustar = sample(m, sine);
    double rho = 2.0;
    std::vector<double> kf(static_cast<size_t>(m.n), 0.25);
    std::vector<double> rhs = apply_p_laplacian(ustar, 3.0, m);
    for (int i = 0; i < m.n; ++i)
        rhs[static_cast<size_t>(i)] += rho * std::max(kf[static_cast<size_t>(i)],
                                                      ustar[static_cast<size_t>(i)] * ustar[static_cast<size_t>(i)]);
    std::vector<double> u = solve_shifted(rhs, 3.0, rho, kf, m, opts);
    std::vector<double> r = apply_p_laplacian(u, 3.0, m, opts.regularization_floor);
    for (int i = 0; i < m.n; ++i) {
        double ph = signed_power(u[static_cast<size_t>(i)], 2.0);
        r[static_cast<size_t>(i)] += rho * std::max(kf[static_cast<size_t>(i)], ph) - rhs[static_cast<size_t>(i)];
    }
    CHECK(max_norm(r) <= opts.newton_tol);
    CHECK(max_abs_diff(u, ustar) < 1e-3);
}

TEST_CASE("zero floor at a flat iterate degenerates the Jacobian") {
    SolverOptions opts;
    opts.regularization_floor = 0.0;
    Mesh m = build_mesh(Mesh::Kind::interval, 15, 1.0, 0.1);
    std::vector<double> f(15, 1.0);
    std::vector<double> zeros(15, 0.0);
    CHECK_THROWS_AS(solve_dirichlet(f, 3.0, m, opts, &zeros), degenerate_jacobian);
}

TEST_CASE("iteration cap raises non_convergence") {
    SolverOptions opts;
    opts.max_iter = 1;
    Mesh m = build_mesh(Mesh::Kind::interval, 63, 1.0, 0.1);
    std::vector<double> f = sample(m, sine_rhs_p3);
    CHECK_THROWS_AS(solve_dirichlet(f, 3.0, m, opts), non_convergence);
}

TEST_CASE("signed power basics") {
    CHECK(signed_power(0.0, 1.7) == 0.0);
    CHECK(signed_power(2.0, 2.0) == doctest::Approx(4.0));
    CHECK(signed_power(-2.0, 2.0) == doctest::Approx(-4.0));
    CHECK(signed_power(-3.0, 1.0) == doctest::Approx(-3.0));
}
