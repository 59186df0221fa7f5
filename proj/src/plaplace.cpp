#include "singsys/plaplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "singsys/errors.hpp"

namespace singsys {

namespace {

// Edge gradients of a nodal field, including the two boundary edges.
// Interval: one-sided differences against the zero trace.
// Ball: the axis edge uses the even quadratic extension through r = 0
// (ghost value (4u_1 - u_2)/3), which keeps the scheme second order at the
// axis and the Jacobian tridiagonal.
std::vector<double> edge_gradients(const std::vector<double>& u, const Mesh& m) {
    const int n = m.n;
    const double h = m.h;
    std::vector<double> D(static_cast<size_t>(n) + 1);
    if (m.kind == Mesh::Kind::ball)
        D[0] = (u[1] - u[0]) / (3.0 * h);
    else
        D[0] = u[0] / h;
    for (int e = 1; e < n; ++e) D[static_cast<size_t>(e)] = (u[static_cast<size_t>(e)] - u[static_cast<size_t>(e) - 1]) / h;
    D[static_cast<size_t>(n)] = -u[static_cast<size_t>(n) - 1] / h;
    return D;
}

double flux(double D, double p, double floor) {
    if (floor == 0.0) return signed_power(D, p - 1.0);
    return D * std::pow(D * D + floor * floor, 0.5 * (p - 2.0));
}

// Derivative of flux() with respect to the gradient.
double dflux(double D, double p, double floor) {
    if (floor == 0.0) {
        if (D == 0.0) {
            if (p > 2.0) return 0.0;
            if (p == 2.0) return 1.0;
            return std::numeric_limits<double>::infinity();
        }
        return (p - 1.0) * std::pow(std::abs(D), p - 2.0);
    }
    double t = D * D + floor * floor;
    return std::pow(t, 0.5 * (p - 2.0)) * (1.0 + (p - 2.0) * D * D / t);
}

struct Tridiag {
    std::vector<double> lo, di, up;  // sub-, main-, super-diagonal
    explicit Tridiag(int n) : lo(static_cast<size_t>(n), 0.0), di(static_cast<size_t>(n), 0.0), up(static_cast<size_t>(n), 0.0) {}
};

// Thomas elimination.  The assembled matrices are (weighted) M-matrices, so
// no pivoting is needed; a vanishing pivot means the linearization
// degenerated (possible only with a zero regularization floor).
std::vector<double> thomas_solve(Tridiag J, std::vector<double> rhs, double floor) {
    const size_t n = rhs.size();
    for (size_t i = 1; i < n; ++i) {
        if (J.di[i - 1] == 0.0 || !std::isfinite(J.di[i - 1]))
            throw degenerate_jacobian(
                floor == 0.0 ? "tridiagonal pivot degenerated with zero regularization floor"
                             : "tridiagonal pivot degenerated");
        double w = J.lo[i] / J.di[i - 1];
        J.di[i] -= w * J.up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (J.di[n - 1] == 0.0 || !std::isfinite(J.di[n - 1]))
        throw degenerate_jacobian(
            floor == 0.0 ? "tridiagonal pivot degenerated with zero regularization floor"
                         : "tridiagonal pivot degenerated");
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / J.di[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - J.up[i] * x[i + 1]) / J.di[i];
    return x;
}

// Jacobian of apply_p_laplacian at u (same floor as the residual).
Tridiag assemble_jacobian(const std::vector<double>& u, double p, const Mesh& m, double floor) {
    const int n = m.n;
    const double h = m.h;
    std::vector<double> D = edge_gradients(u, m);
    Tridiag J(n);
    auto scale = [&](int i) { return m.cell_w[static_cast<size_t>(i)] * h * h; };

    // interior edges e = 1..n-1 couple nodes e-1 and e
    for (int e = 1; e < n; ++e) {
        double t = m.edge_w[static_cast<size_t>(e)] * dflux(D[static_cast<size_t>(e)], p, floor);
        J.di[static_cast<size_t>(e) - 1] += t / scale(e - 1);
        J.up[static_cast<size_t>(e) - 1] -= t / scale(e - 1);
        J.di[static_cast<size_t>(e)] += t / scale(e);
        J.lo[static_cast<size_t>(e)] -= t / scale(e);
    }
    // boundary edge at x = L
    {
        double t = m.edge_w[static_cast<size_t>(n)] * dflux(D[static_cast<size_t>(n)], p, floor);
        J.di[static_cast<size_t>(n) - 1] += t / scale(n - 1);
    }
    // boundary edge at x = 0 (interval) or axis edge (ball)
    if (m.kind == Mesh::Kind::ball) {
        double t = m.edge_w[0] * dflux(D[0], p, floor) / 3.0;
        J.di[0] -= t / scale(0);
        J.up[0] += t / scale(0);
    } else {
        double t = m.edge_w[0] * dflux(D[0], p, floor);
        J.di[0] += t / scale(0);
    }
    return J;
}

// Exact gradient of dirichlet_energy (the axis edge contributes through its
// one-sided stencil).
std::vector<double> energy_gradient(const std::vector<double>& u, const std::vector<double>& f,
                                    double p, const Mesh& m, double floor) {
    const int n = m.n;
    const double h = m.h;
    std::vector<double> D = edge_gradients(u, m);
    std::vector<double> g(static_cast<size_t>(n), 0.0);
    for (int e = 0; e <= n; ++e) {
        double wF = m.edge_w[static_cast<size_t>(e)] * flux(D[static_cast<size_t>(e)], p, floor);
        if (e == 0) {
            if (m.kind == Mesh::Kind::ball) {
                g[0] -= wF / 3.0;
                g[1] += wF / 3.0;
            } else {
                g[0] += wF;
            }
        } else if (e == n) {
            g[static_cast<size_t>(n) - 1] -= wF;
        } else {
            g[static_cast<size_t>(e) - 1] -= wF;
            g[static_cast<size_t>(e)] += wF;
        }
    }
    for (int i = 0; i < n; ++i)
        g[static_cast<size_t>(i)] = g[static_cast<size_t>(i)] - h * m.cell_w[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
    return g;
}

void check_size(const std::vector<double>& u, const Mesh& m, const char* who) {
    if (static_cast<int>(u.size()) != m.n)
        throw std::invalid_argument(std::string(who) + ": field size does not match mesh");
}

// Rounding floor of the residual evaluation at the iterate u.  The dominant
// noise is the cancellation in the edge gradients, eps*|u|/h per operand,
// amplified by dflux and the flux difference quotient.  Residuals below this
// level are numerically meaningless, so the solvers accept them as converged.
double residual_eval_floor(const std::vector<double>& u, double p, const Mesh& m, double floor) {
    const int n = m.n;
    const double h = m.h;
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> D = edge_gradients(u, m);
    auto edge_term = [&](int e) {
        double df = dflux(D[static_cast<size_t>(e)], p, floor);
        if (!std::isfinite(df)) df = 0.0;
        double ubar;
        if (e == 0)
            ubar = (m.kind == Mesh::Kind::ball) ? std::max(std::abs(u[0]), std::abs(u[1]))
                                                : std::abs(u[0]);
        else if (e == n)
            ubar = std::abs(u[static_cast<size_t>(n) - 1]);
        else
            ubar = std::max(std::abs(u[static_cast<size_t>(e) - 1]), std::abs(u[static_cast<size_t>(e)]));
        double F = std::abs(flux(D[static_cast<size_t>(e)], p, floor));
        return m.edge_w[static_cast<size_t>(e)] * (2.0 * df * ubar / h + F);
    };
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        double t = (edge_term(i) + edge_term(i + 1)) * eps / (m.cell_w[static_cast<size_t>(i)] * h);
        worst = std::max(worst, t);
    }
    return worst;
}

}  // namespace

double signed_power(double s, double pm1) {
    if (s == 0.0) return 0.0;
    double a = std::pow(std::abs(s), pm1);
    return s > 0 ? a : -a;
}

std::vector<double> apply_p_laplacian(const std::vector<double>& u, double p, const Mesh& m,
                                      double floor) {
    check_size(u, m, "apply_p_laplacian");
    const int n = m.n;
    const double h = m.h;
    std::vector<double> D = edge_gradients(u, m);
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double fl = m.edge_w[static_cast<size_t>(i)] * flux(D[static_cast<size_t>(i)], p, floor);
        double fr = m.edge_w[static_cast<size_t>(i) + 1] * flux(D[static_cast<size_t>(i) + 1], p, floor);
        out[static_cast<size_t>(i)] = -(fr - fl) / (m.cell_w[static_cast<size_t>(i)] * h);
    }
    return out;
}

double dirichlet_energy(const std::vector<double>& u, const std::vector<double>& f, double p,
                        const Mesh& m, double floor) {
    check_size(u, m, "dirichlet_energy");
    const double h = m.h;
    std::vector<double> D = edge_gradients(u, m);
    double e = 0;
    for (size_t k = 0; k < D.size(); ++k) {
        // primitive of flux(): ((D^2+floor^2)^{p/2} - floor^p)/p
        double t = std::pow(D[k] * D[k] + floor * floor, 0.5 * p) - std::pow(floor, p);
        e += m.edge_w[k] * t / p;
    }
    double load = 0;
    for (size_t i = 0; i < u.size(); ++i) load += m.cell_w[i] * f[i] * u[i];
    return h * (e - load);
}

std::vector<double> solve_dirichlet(const std::vector<double>& f, double p, const Mesh& m,
                                    const SolverOptions& opts, const std::vector<double>* initial,
                                    SolveStats* stats) {
    check_size(f, m, "solve_dirichlet");
    if (!(p > 1.0)) throw std::invalid_argument("solve_dirichlet: need p > 1");
    const int n = m.n;
    const double floor = opts.regularization_floor;

    auto residual = [&](const std::vector<double>& u) {
        std::vector<double> r = apply_p_laplacian(u, p, m, floor);
        for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] -= f[static_cast<size_t>(i)];
        return r;
    };

    if (p == 2.0) {
        std::vector<double> zero(static_cast<size_t>(n), 0.0);
        Tridiag J = assemble_jacobian(zero, 2.0, m, floor);
        std::vector<double> u = thomas_solve(J, f, floor);
        if (stats) {
            stats->iterations = 1;
            stats->final_residual = max_norm(residual(u));
            stats->energies = {dirichlet_energy(u, f, 2.0, m, floor)};
        }
        return u;
    }

    std::vector<double> u;
    if (initial) {
        u = *initial;
        check_size(u, m, "solve_dirichlet initial guess");
    } else {
        // linear predictor, rescaled to minimize the p-energy along itself
        std::vector<double> zero(static_cast<size_t>(n), 0.0);
        Tridiag J2 = assemble_jacobian(zero, 2.0, m, floor);
        std::vector<double> w = thomas_solve(J2, f, floor);
        double load = 0;
        for (int i = 0; i < n; ++i) load += m.cell_w[static_cast<size_t>(i)] * f[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
        load *= m.h;
        std::vector<double> Dw = edge_gradients(w, m);
        double sp = 0;
        for (size_t k = 0; k < Dw.size(); ++k) sp += m.edge_w[k] * std::pow(std::abs(Dw[k]), p);
        sp *= m.h;
        double c = (load > 0 && sp > 0) ? std::pow(load / sp, 1.0 / (p - 1.0)) : 1.0;
        u = w;
        for (double& x : u) x *= c;
    }

    std::vector<double> r = residual(u);
    double rn = max_norm(r);
    double energy = dirichlet_energy(u, f, p, m, floor);
    if (stats) {
        stats->energies.clear();
        stats->energies.push_back(energy);
    }

    for (int it = 1; it <= opts.max_iter; ++it) {
        if (rn <= opts.newton_tol || rn <= residual_eval_floor(u, p, m, floor)) {
            if (stats) {
                stats->iterations = it - 1;
                stats->final_residual = rn;
            }
            return u;
        }
        Tridiag J = assemble_jacobian(u, p, m, floor);
        std::vector<double> neg_r(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) neg_r[static_cast<size_t>(i)] = -r[static_cast<size_t>(i)];
        std::vector<double> d = thomas_solve(J, neg_r, floor);

        std::vector<double> g = energy_gradient(u, f, p, m, floor);
        double slope = 0;
        for (int i = 0; i < n; ++i) slope += g[static_cast<size_t>(i)] * d[static_cast<size_t>(i)];

        double lam = 1.0;
        bool accepted = false;
        std::vector<double> trial(static_cast<size_t>(n));
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < n; ++i) trial[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] + lam * d[static_cast<size_t>(i)];
            std::vector<double> rt = residual(trial);
            double rtn = max_norm(rt);
            double et = dirichlet_energy(trial, f, p, m, floor);
            // primary test: residual decrease; near the minimum the energy
            // differences sink below rounding noise, the residual does not
            bool ok = rtn <= (1.0 - 1e-4 * lam) * rn || rtn <= opts.newton_tol;
            if (!ok && slope < 0) ok = et <= energy + 1e-4 * lam * slope;
            if (ok) {
                u.swap(trial);
                r.swap(rt);
                rn = rtn;
                energy = et;
                accepted = true;
                break;
            }
            lam *= opts.damping;
        }
        if (!accepted) throw non_convergence("solve_dirichlet line search", it, rn);
        if (stats) stats->energies.push_back(energy);
    }
    if (rn <= opts.newton_tol || rn <= residual_eval_floor(u, p, m, floor)) {
        if (stats) {
            stats->iterations = opts.max_iter;
            stats->final_residual = rn;
        }
        return u;
    }
    throw non_convergence("solve_dirichlet", opts.max_iter, rn);
}

namespace {

// Eigenvalue estimate that minimizes the operator residual in the weighted
// least-squares sense.  Unlike the energy ratio it is exactly consistent
// with apply_p_laplacian at the ball axis row, so the residual of a
// converged discrete eigenpair can reach rounding level.
double least_squares_lambda(const std::vector<double>& phi, double p, const Mesh& m) {
    std::vector<double> Au = apply_p_laplacian(phi, p, m);
    double num = 0, den = 0;
    for (size_t i = 0; i < phi.size(); ++i) {
        double ph = std::pow(std::abs(phi[i]), p - 1.0);
        num += m.cell_w[i] * Au[i] * ph;
        den += m.cell_w[i] * ph * ph;
    }
    return num / den;
}

}  // namespace

double rayleigh_quotient(const std::vector<double>& u, double p, const Mesh& m) {
    check_size(u, m, "rayleigh_quotient");
    std::vector<double> D = edge_gradients(u, m);
    double num = 0;
    for (size_t k = 0; k < D.size(); ++k) num += m.edge_w[k] * std::pow(std::abs(D[k]), p);
    num *= m.h;
    std::vector<double> up(u.size());
    for (size_t i = 0; i < u.size(); ++i) up[i] = std::pow(std::abs(u[i]), p);
    double den = 0;
    for (size_t i = 0; i < u.size(); ++i) den += m.cell_w[i] * up[i];
    den *= m.h;
    return num / den;
}

EigenPair principal_eigenpair(double p, const Mesh& m, const SolverOptions& opts) {
    if (!(p > 1.0)) throw std::invalid_argument("principal_eigenpair: need p > 1");
    const int n = m.n;

    std::vector<double> phi(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) phi[static_cast<size_t>(i)] = m.distance(i);
    {
        std::vector<double> pp(phi.size());
        for (size_t i = 0; i < phi.size(); ++i) pp[i] = std::pow(phi[i], p);
        double nrm = std::pow(m.integrate(pp), 1.0 / p);
        for (double& x : phi) x /= nrm;
    }
    double lambda = least_squares_lambda(phi, p, m);

    SolverOptions inner = opts;
    inner.newton_tol = std::max(opts.newton_tol * 0.5, 1e-12);
    inner.max_iter = std::max(opts.max_iter, 60);

    const int outer_cap = 1000;
    double last_res = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= outer_cap; ++it) {
        std::vector<double> rhs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) rhs[static_cast<size_t>(i)] = lambda * std::pow(phi[static_cast<size_t>(i)], p - 1.0);
        std::vector<double> w = solve_dirichlet(rhs, p, m, inner, &phi);
        for (double x : w)
            if (!(x > 0)) throw sign_violation("principal_eigenpair: iterate lost positivity");
        std::vector<double> wp(w.size());
        for (size_t i = 0; i < w.size(); ++i) wp[i] = std::pow(w[i], p);
        double nrm = std::pow(m.integrate(wp), 1.0 / p);
        for (size_t i = 0; i < w.size(); ++i) w[i] /= nrm;
        double lam_new = least_squares_lambda(w, p, m);

        std::vector<double> res = apply_p_laplacian(w, p, m);
        for (int i = 0; i < n; ++i) res[static_cast<size_t>(i)] -= lam_new * std::pow(w[static_cast<size_t>(i)], p - 1.0);
        last_res = max_norm(res);
        double scale = std::max(1.0, lam_new);
        // same acceptance semantics as solve_dirichlet: a residual at the
        // rounding floor of its own evaluation counts as converged
        double res_gate = std::max(opts.newton_tol * scale, residual_eval_floor(w, p, m, 0.0));
        bool done = last_res <= res_gate &&
                    std::abs(lam_new - lambda) <= opts.newton_tol * scale;
        phi.swap(w);
        lambda = lam_new;
        if (done) {
            EigenPair out;
            out.lambda = lambda;
            out.phi = phi;
            out.iterations = it;
            out.residual = last_res;
            return out;
        }
    }
    throw non_convergence("principal_eigenpair", outer_cap, last_res);
}

std::vector<double> solve_shifted(const std::vector<double>& rhs, double p, double rho,
                                  const std::vector<double>& kink_floor, const Mesh& m,
                                  const SolverOptions& opts, const std::vector<double>* initial) {
    check_size(rhs, m, "solve_shifted");
    check_size(kink_floor, m, "solve_shifted kink floor");
    if (!(p > 1.0)) throw std::invalid_argument("solve_shifted: need p > 1");
    if (rho < 0) throw std::invalid_argument("solve_shifted: need rho >= 0");
    const int n = m.n;
    const double floor = opts.regularization_floor;

    auto residual = [&](const std::vector<double>& u) {
        std::vector<double> r = apply_p_laplacian(u, p, m, floor);
        for (int i = 0; i < n; ++i) {
            double ph = signed_power(u[static_cast<size_t>(i)], p - 1.0);
            r[static_cast<size_t>(i)] += rho * std::max(kink_floor[static_cast<size_t>(i)], ph) - rhs[static_cast<size_t>(i)];
        }
        return r;
    };

    std::vector<double> u;
    if (initial) {
        u = *initial;
        check_size(u, m, "solve_shifted initial guess");
    } else {
        std::vector<double> f0(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) f0[static_cast<size_t>(i)] = rhs[static_cast<size_t>(i)] - rho * kink_floor[static_cast<size_t>(i)];
        SolverOptions pre = opts;
        pre.newton_tol = std::max(opts.newton_tol, 1e-8);
        try {
            u = solve_dirichlet(f0, p, m, pre);
        } catch (const solver_error&) {
            u.assign(static_cast<size_t>(n), 0.0);
        }
    }

    std::vector<double> r = residual(u);
    double rn = max_norm(r);
    for (int it = 1; it <= opts.max_iter; ++it) {
        if (rn <= opts.newton_tol || rn <= residual_eval_floor(u, p, m, floor)) return u;
        Tridiag J = assemble_jacobian(u, p, m, floor);
        for (int i = 0; i < n; ++i) {
            double ph = signed_power(u[static_cast<size_t>(i)], p - 1.0);
            // ties activate the |u|^{p-2}u branch, keeping the active set
            // stable at equality
            if (ph >= kink_floor[static_cast<size_t>(i)]) {
                double uu = u[static_cast<size_t>(i)];
                double dph = (p - 1.0) * std::pow(uu * uu + floor * floor, 0.5 * (p - 2.0));
                J.di[static_cast<size_t>(i)] += rho * dph;
            }
        }
        std::vector<double> neg_r(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) neg_r[static_cast<size_t>(i)] = -r[static_cast<size_t>(i)];
        std::vector<double> d = thomas_solve(J, neg_r, floor);

        double lam = 1.0;
        bool accepted = false;
        std::vector<double> trial(static_cast<size_t>(n));
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < n; ++i) trial[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] + lam * d[static_cast<size_t>(i)];
            std::vector<double> rt = residual(trial);
            double rtn = max_norm(rt);
            if (rtn <= (1.0 - 1e-4 * lam) * rn || rtn <= opts.newton_tol) {
                u.swap(trial);
                r.swap(rt);
                rn = rtn;
                accepted = true;
                break;
            }
            lam *= opts.damping;
        }
        if (!accepted) throw non_convergence("solve_shifted line search", it, rn);
    }
    if (rn <= opts.newton_tol || rn <= residual_eval_floor(u, p, m, floor)) return u;
    throw non_convergence("solve_shifted", opts.max_iter, rn);
}

JacobianBands p_laplacian_jacobian(const std::vector<double>& u, double p, const Mesh& m,
                                   double floor) {
    check_size(u, m, "p_laplacian_jacobian");
    Tridiag J = assemble_jacobian(u, p, m, floor);
    return JacobianBands{std::move(J.lo), std::move(J.di), std::move(J.up)};
}

double residual_floor(const std::vector<double>& u, double p, const Mesh& m, double floor) {
    check_size(u, m, "residual_floor");
    return residual_eval_floor(u, p, m, floor);
}

}  // namespace singsys
