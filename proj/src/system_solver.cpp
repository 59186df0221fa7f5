#include "singsys/system_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "singsys/errors.hpp"

namespace singsys {

namespace {

constexpr double kEscapeSlack = 1e-8;    // relative box-violation tolerance
constexpr double kOrderSlack = 1e-12;    // relative per-step ordering slack
constexpr double kResidualAmp = 1e3;     // residual target = amp * newton_tol
constexpr double kSeparationGate = 0.1;  // relative distance gate for a second root

void check_state(const Problem& pb, const std::vector<double>& u,
                 const std::vector<double>& v, const char* where) {
    if (static_cast<int>(u.size()) != pb.mesh.n || static_cast<int>(v.size()) != pb.mesh.n)
        throw std::invalid_argument(std::string(where) + ": state size does not match the mesh");
}

void check_t_eps(double t, double eps, const char* where) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument(std::string(where) + ": eps must lie in (0,1)");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument(std::string(where) + ": t must lie in [0,1]");
}

// Nodal slopes A(x) of the integrated shift rho * max(A w, w^{p-1}):
//   u side  A = (u_lo + eps)^{alpha1 - 1} R^{beta1},
//   v side  A = R^{alpha2} (v_lo + eps)^{beta2 - 1}.
struct ShiftSlopes {
    std::vector<double> au, av;
};

ShiftSlopes shift_slopes(const Problem& pb, double eps) {
    const auto& c = pb.cfg;
    const double R = pb.led.R;
    const size_t n = static_cast<size_t>(pb.mesh.n);
    ShiftSlopes s;
    s.au.resize(n);
    s.av.resize(n);
    for (size_t i = 0; i < n; ++i) {
        s.au[i] = std::pow(pb.env.u_lo[i] + eps, c.alpha1 - 1.0) * std::pow(R, c.beta1);
        s.av[i] = std::pow(R, c.alpha2) * std::pow(pb.env.v_lo[i] + eps, c.beta2 - 1.0);
    }
    return s;
}

double shift_term(double w, double slope, double pm1) {
    return std::max(slope * w, signed_power(w, pm1));
}

// a.e. derivative of shift_term; ties activate the linear branch
double shift_deriv(double w, double slope, double p) {
    double lin = slope * w;
    double pw = signed_power(w, p - 1.0);
    if (lin >= pw) return slope;
    return (p - 1.0) * std::pow(std::abs(w), p - 2.0);
}

// Right-hand sides without the shift, evaluated on already-truncated fields.
void core_rhs(const Problem& pb, const std::vector<double>& tu, const std::vector<double>& tv,
              double t, double eps, HomotopyVariant variant, std::vector<double>& g_u,
              std::vector<double>& g_v) {
    const auto& c = pb.cfg;
    const size_t n = static_cast<size_t>(pb.mesh.n);
    g_u.assign(n, 0.0);
    g_v.assign(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double fu = t * std::pow(tu[i] + eps, c.alpha1) * std::pow(tv[i], c.beta1);
        double fv = t * std::pow(tu[i], c.alpha2) * std::pow(tv[i] + eps, c.beta2);
        if (variant == HomotopyVariant::radius_box) {
            fu += pb.led.m * (1.0 - t) * std::pow(tu[i], c.p - 1.0);
            fv += pb.led.m * (1.0 - t) * std::pow(tv[i], c.q - 1.0);
        } else {
            fu += (1.0 - t) * pb.led.eta * std::pow(pb.phi_p[i] + eps, c.alpha1);
            fv += (1.0 - t) * pb.led.eta * std::pow(pb.phi_q[i] + eps, c.beta2);
        }
        g_u[i] = fu;
        g_v[i] = fv;
    }
}

struct BoxUpper {
    std::vector<double> u, v;
};

BoxUpper box_upper(const Problem& pb, HomotopyVariant variant) {
    if (variant == HomotopyVariant::hat_box) return {pb.env.u_hat, pb.env.v_hat};
    const size_t n = static_cast<size_t>(pb.mesh.n);
    return {std::vector<double>(n, pb.led.R), std::vector<double>(n, pb.led.R)};
}

// Max-norm residuals of the full homotopy operator (shift included on both
// sides; on the box the shifts cancel and this is the plain operator residual).
void homotopy_residual(const Problem& pb, const std::vector<double>& u,
                       const std::vector<double>& v, double t, double eps,
                       HomotopyVariant variant, double& rn_u, double& rn_v) {
    std::vector<double> f_u, f_v;
    rhs_homotopy(pb, u, v, t, eps, variant, f_u, f_v);
    ShiftSlopes s = shift_slopes(pb, eps);
    std::vector<double> op_u = apply_p_laplacian(u, pb.cfg.p, pb.mesh);
    std::vector<double> op_v = apply_p_laplacian(v, pb.cfg.q, pb.mesh);
    rn_u = 0.0;
    rn_v = 0.0;
    for (size_t i = 0; i < op_u.size(); ++i) {
        double ru = op_u[i] + pb.led.rho * shift_term(u[i], s.au[i], pb.cfg.p - 1.0) - f_u[i];
        double rv = op_v[i] + pb.led.rho * shift_term(v[i], s.av[i], pb.cfg.q - 1.0) - f_v[i];
        rn_u = std::max(rn_u, std::abs(ru));
        rn_v = std::max(rn_v, std::abs(rv));
    }
}

HatClass classify_hat(const Problem& pb, const std::vector<double>& u,
                      const std::vector<double>& v) {
    for (size_t i = 0; i < u.size(); ++i)
        if (u[i] > pb.env.u_hat[i] || v[i] > pb.env.v_hat[i]) return HatClass::outside_hat;
    return HatClass::inside_hat;
}

// Largest relative violation of lo <= w <= up over all nodes.
double box_excess(const std::vector<double>& w, const std::vector<double>& lo,
                  const std::vector<double>& up) {
    double worst = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        worst = std::max(worst, (lo[i] - w[i]) / (1.0 + std::abs(lo[i])));
        worst = std::max(worst, (w[i] - up[i]) / (1.0 + std::abs(up[i])));
    }
    return worst;
}

// Shared Picard loop.  dir = +1 expects nondecreasing iterates, -1
// nonincreasing, 0 records nothing (warm starts during continuation).
SolutionPair iterate_picard(const Problem& pb, double eps, double t, HomotopyVariant variant,
                            const SolverOptions& opts, std::vector<double> u,
                            std::vector<double> v, int dir, MonotoneStats* stats) {
    const Mesh& mesh = pb.mesh;
    const BoxUpper up = box_upper(pb, variant);
    MonotoneStats st;
    double diff = std::numeric_limits<double>::infinity();
    std::vector<double> g_u, g_v;
    for (int it = 1; it <= opts.max_iter; ++it) {
        std::vector<double> tu = truncate(u, pb.env.u_lo, up.u);
        std::vector<double> tv = truncate(v, pb.env.v_lo, up.v);
        core_rhs(pb, tu, tv, t, eps, variant, g_u, g_v);
        std::vector<double> un = solve_dirichlet(g_u, pb.cfg.p, mesh, opts, &u);
        std::vector<double> vn = solve_dirichlet(g_v, pb.cfg.q, mesh, opts, &v);

        double excess = std::max(box_excess(un, pb.env.u_lo, up.u),
                                 box_excess(vn, pb.env.v_lo, up.v));
        if (excess > kEscapeSlack) {
            std::ostringstream os;
            os << "iterate left the truncation box (t = " << t << ", eps = " << eps << ")";
            throw rectangle_escape(os.str(), it, excess);
        }
        if (dir != 0) {
            double viol = 0.0;
            for (size_t i = 0; i < un.size(); ++i) {
                viol = std::max(viol, dir * (u[i] - un[i]) / (1.0 + std::abs(u[i])));
                viol = std::max(viol, dir * (v[i] - vn[i]) / (1.0 + std::abs(v[i])));
            }
            st.worst_step_violation = std::max(st.worst_step_violation, viol);
            if (viol > kOrderSlack) st.monotone_every_step = false;
        }
        diff = std::max(max_abs_diff(u, un), max_abs_diff(v, vn));
        u.swap(un);
        v.swap(vn);
        st.iterations = it;
        st.final_diff = diff;
        if (diff <= opts.newton_tol) {
            double rn_u = 0.0, rn_v = 0.0;
            homotopy_residual(pb, u, v, t, eps, variant, rn_u, rn_v);
            double tgt_u = std::max(kResidualAmp * opts.newton_tol,
                                    residual_floor(u, pb.cfg.p, mesh));
            double tgt_v = std::max(kResidualAmp * opts.newton_tol,
                                    residual_floor(v, pb.cfg.q, mesh));
            if (rn_u <= tgt_u && rn_v <= tgt_v) {
                if (stats) *stats = st;
                SolutionPair sol;
                sol.u = std::move(u);
                sol.v = std::move(v);
                sol.eps = eps;
                sol.residual_u = rn_u;
                sol.residual_v = rn_v;
                sol.iterations = it;
                sol.classification = classify_hat(pb, sol.u, sol.v);
                return sol;
            }
        }
    }
    throw non_convergence("monotone_iterate", opts.max_iter, diff);
}

// ---- coupled Newton machinery ----------------------------------------

struct Block2 {
    double a = 0, b = 0, c = 0, d = 0;  // row-major [[a, b], [c, d]]
};

Block2 inv2(const Block2& M, const char* where) {
    double det = M.a * M.d - M.b * M.c;
    if (!std::isfinite(det) || det == 0.0) throw degenerate_jacobian(where);
    return {M.d / det, -M.b / det, -M.c / det, M.a / det};
}

Block2 mul2(const Block2& A, const Block2& B) {
    return {A.a * B.a + A.b * B.c, A.a * B.b + A.b * B.d,
            A.c * B.a + A.d * B.c, A.c * B.b + A.d * B.d};
}

// Block-tridiagonal solve with 2x2 blocks (in-place elimination).  sub/sup
// hold the off-diagonal blocks (sub[0], sup[n-1] unused).
void block_thomas(std::vector<Block2>& sub, std::vector<Block2>& dia, std::vector<Block2>& sup,
                  std::vector<double>& ru, std::vector<double>& rv) {
    const size_t n = dia.size();
    for (size_t i = 1; i < n; ++i) {
        Block2 w = mul2(sub[i], inv2(dia[i - 1], "coupled tridiagonal pivot degenerated"));
        Block2 ws = mul2(w, sup[i - 1]);
        dia[i].a -= ws.a;
        dia[i].b -= ws.b;
        dia[i].c -= ws.c;
        dia[i].d -= ws.d;
        ru[i] -= w.a * ru[i - 1] + w.b * rv[i - 1];
        rv[i] -= w.c * ru[i - 1] + w.d * rv[i - 1];
    }
    Block2 di = inv2(dia[n - 1], "coupled tridiagonal pivot degenerated");
    double xu = di.a * ru[n - 1] + di.b * rv[n - 1];
    double xv = di.c * ru[n - 1] + di.d * rv[n - 1];
    ru[n - 1] = xu;
    rv[n - 1] = xv;
    for (size_t i = n - 1; i-- > 0;) {
        double su = ru[i] - (sup[i].a * ru[i + 1] + sup[i].b * rv[i + 1]);
        double sv = rv[i] - (sup[i].c * ru[i + 1] + sup[i].d * rv[i + 1]);
        Block2 dd = inv2(dia[i], "coupled tridiagonal pivot degenerated");
        ru[i] = dd.a * su + dd.b * sv;
        rv[i] = dd.c * su + dd.d * sv;
    }
}

struct Fields {
    std::vector<double> u, v;
};

struct NewtonOutcome {
    Fields state;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::string failure;  // empty when converged
};

// Squared volume distance between two states.
double dist2(const Mesh& mesh, const Fields& a, const Fields& b) {
    std::vector<double> w(a.u.size());
    for (size_t i = 0; i < w.size(); ++i) {
        double s = a.u[i] - b.u[i];
        w[i] = s * s;
    }
    double d = mesh.integrate(w);
    for (size_t i = 0; i < w.size(); ++i) {
        double s = a.v[i] - b.v[i];
        w[i] = s * s;
    }
    return d + mesh.integrate(w);
}

double deflation_weight(const Mesh& mesh, const Fields& x, const Fields& ref) {
    double d2 = dist2(mesh, x, ref);
    if (d2 < 1e-300) return 1e300;
    return 1.0 + 1.0 / d2;
}

// Newton iteration on the regularized system
//   -D_p u = (u+eps)^{a1} v^{b1},  -D_q v = u^{a2} (v+eps)^{b2}
// with optional deflation against `deflate`.  The deflation multiplies the
// merit by 1 + 1/dist^2 and rescales the Newton step by the exact
// one-dimensional correction, so converged iterates cannot sit at the
// deflated state.  A fraction-to-boundary rule keeps both components
// strictly positive.
NewtonOutcome newton_regularized(const Problem& pb, double eps, const SolverOptions& opts,
                                 Fields x, const Fields* deflate) {
    const Mesh& mesh = pb.mesh;
    const auto& c = pb.cfg;
    const size_t n = static_cast<size_t>(mesh.n);
    NewtonOutcome out;

    auto resid = [&](const Fields& s, std::vector<double>& ru, std::vector<double>& rv) {
        ru = apply_p_laplacian(s.u, c.p, mesh);
        rv = apply_p_laplacian(s.v, c.q, mesh);
        for (size_t i = 0; i < n; ++i) {
            ru[i] -= std::pow(s.u[i] + eps, c.alpha1) * std::pow(s.v[i], c.beta1);
            rv[i] -= std::pow(s.u[i], c.alpha2) * std::pow(s.v[i] + eps, c.beta2);
        }
    };
    auto merit_of = [&](const Fields& s, double rn) {
        return deflate ? deflation_weight(mesh, s, *deflate) * rn : rn;
    };

    std::vector<double> ru, rv;
    resid(x, ru, rv);
    double rn = std::max(max_norm(ru), max_norm(rv));

    try {
        for (int it = 0; it < opts.max_iter; ++it) {
            double tol = std::max({opts.newton_tol, residual_floor(x.u, c.p, mesh),
                                   residual_floor(x.v, c.q, mesh)});
            if (rn <= tol) {
                out.converged = true;
                break;
            }
            JacobianBands jp = p_laplacian_jacobian(x.u, c.p, mesh, opts.regularization_floor);
            JacobianBands jq = p_laplacian_jacobian(x.v, c.q, mesh, opts.regularization_floor);
            std::vector<Block2> sub(n), dia(n), sup(n);
            for (size_t i = 0; i < n; ++i) {
                double duu = -c.alpha1 * std::pow(x.u[i] + eps, c.alpha1 - 1.0) *
                             std::pow(x.v[i], c.beta1);
                double duv = -c.beta1 * std::pow(x.u[i] + eps, c.alpha1) *
                             std::pow(x.v[i], c.beta1 - 1.0);
                double dvu = -c.alpha2 * std::pow(x.u[i], c.alpha2 - 1.0) *
                             std::pow(x.v[i] + eps, c.beta2);
                double dvv = -c.beta2 * std::pow(x.u[i], c.alpha2) *
                             std::pow(x.v[i] + eps, c.beta2 - 1.0);
                dia[i] = {jp.diag[i] + duu, duv, dvu, jq.diag[i] + dvv};
                sub[i] = {jp.lower[i], 0.0, 0.0, jq.lower[i]};
                sup[i] = {jp.upper[i], 0.0, 0.0, jq.upper[i]};
            }
            std::vector<double> du(n), dv(n);
            for (size_t i = 0; i < n; ++i) {
                du[i] = -ru[i];
                dv[i] = -rv[i];
            }
            block_thomas(sub, dia, sup, du, dv);

            if (deflate) {
                double d2 = dist2(mesh, x, *deflate);
                if (d2 < 1e-300) d2 = 1e-300;
                double m = 1.0 + 1.0 / d2;
                std::vector<double> w(n);
                for (size_t i = 0; i < n; ++i) w[i] = (x.u[i] - deflate->u[i]) * du[i];
                double dd2 = 2.0 * mesh.integrate(w);
                for (size_t i = 0; i < n; ++i) w[i] = (x.v[i] - deflate->v[i]) * dv[i];
                dd2 += 2.0 * mesh.integrate(w);
                // exact step scale for the deflated residual m(x) F(x):
                // tau = 1 / (1 - (grad m . delta) / m), floored to keep the
                // step from reversing back into the deflated state
                double denom = 1.0 + dd2 / (d2 * d2 * m);
                if (denom < 0.05) denom = 0.05;
                double tau = 1.0 / denom;
                for (size_t i = 0; i < n; ++i) {
                    du[i] *= tau;
                    dv[i] *= tau;
                }
            }

            double lam = 1.0;
            for (size_t i = 0; i < n; ++i) {
                if (du[i] < 0.0) lam = std::min(lam, -0.995 * x.u[i] / du[i]);
                if (dv[i] < 0.0) lam = std::min(lam, -0.995 * x.v[i] / dv[i]);
            }
            double merit = merit_of(x, rn);
            bool accepted = false;
            Fields trial;
            trial.u.resize(n);
            trial.v.resize(n);
            std::vector<double> rtu, rtv;
            for (int ls = 0; ls < 40; ++ls) {
                for (size_t i = 0; i < n; ++i) {
                    trial.u[i] = x.u[i] + lam * du[i];
                    trial.v[i] = x.v[i] + lam * dv[i];
                }
                resid(trial, rtu, rtv);
                double rtn = std::max(max_norm(rtu), max_norm(rtv));
                double mt = merit_of(trial, rtn);
                if (std::isfinite(mt) && (mt <= (1.0 - 1e-4 * lam) * merit || rtn <= tol)) {
                    x = std::move(trial);
                    ru.swap(rtu);
                    rv.swap(rtv);
                    rn = rtn;
                    accepted = true;
                    break;
                }
                lam *= opts.damping;
            }
            out.iterations = it + 1;
            if (!accepted) {
                out.failure = "line_search_stall";
                break;
            }
        }
    } catch (const degenerate_jacobian&) {
        out.failure = "singular_jacobian";
    }
    if (!out.converged && out.failure.empty()) out.failure = "no_convergence";
    out.state = std::move(x);
    out.residual = rn;
    return out;
}

// Newton iteration on the full homotopy system at parameter t (shift and
// truncation included); used for the endpoint sweeps.  Inside the box the
// shift contributions cancel in residual and Jacobian alike, outside the box
// only the operator-side shift survives, which is what drives iterates back.
NewtonOutcome newton_homotopy(const Problem& pb, double t, double eps,
                              const SolverOptions& opts, Fields x) {
    const Mesh& mesh = pb.mesh;
    const auto& c = pb.cfg;
    const size_t n = static_cast<size_t>(mesh.n);
    const BoxUpper up = box_upper(pb, HomotopyVariant::radius_box);
    const ShiftSlopes sl = shift_slopes(pb, eps);
    const double rho = pb.led.rho;
    NewtonOutcome out;

    auto resid = [&](const Fields& s, std::vector<double>& ru, std::vector<double>& rv) {
        std::vector<double> fu, fv;
        rhs_homotopy(pb, s.u, s.v, t, eps, HomotopyVariant::radius_box, fu, fv);
        ru = apply_p_laplacian(s.u, c.p, mesh);
        rv = apply_p_laplacian(s.v, c.q, mesh);
        for (size_t i = 0; i < n; ++i) {
            ru[i] += rho * shift_term(s.u[i], sl.au[i], c.p - 1.0) - fu[i];
            rv[i] += rho * shift_term(s.v[i], sl.av[i], c.q - 1.0) - fv[i];
        }
    };

    std::vector<double> ru, rv;
    resid(x, ru, rv);
    double rn = std::max(max_norm(ru), max_norm(rv));
    try {
        for (int it = 0; it < opts.max_iter; ++it) {
            double tol = std::max({kResidualAmp * opts.newton_tol,
                                   residual_floor(x.u, c.p, mesh),
                                   residual_floor(x.v, c.q, mesh)});
            if (rn <= tol) {
                out.converged = true;
                break;
            }
            JacobianBands jp = p_laplacian_jacobian(x.u, c.p, mesh, opts.regularization_floor);
            JacobianBands jq = p_laplacian_jacobian(x.v, c.q, mesh, opts.regularization_floor);
            std::vector<Block2> sub(n), dia(n), sup(n);
            for (size_t i = 0; i < n; ++i) {
                double tu = std::min(std::max(x.u[i], pb.env.u_lo[i]), up.u[i]);
                double tv = std::min(std::max(x.v[i], pb.env.v_lo[i]), up.v[i]);
                bool in_u = x.u[i] > pb.env.u_lo[i] && x.u[i] < up.u[i];
                bool in_v = x.v[i] > pb.env.v_lo[i] && x.v[i] < up.v[i];
                double duu = rho * shift_deriv(x.u[i], sl.au[i], c.p);
                double dvv = rho * shift_deriv(x.v[i], sl.av[i], c.q);
                double duv = 0.0, dvu = 0.0;
                if (in_u) {
                    duu -= t * c.alpha1 * std::pow(tu + eps, c.alpha1 - 1.0) *
                               std::pow(tv, c.beta1) +
                           pb.led.m * (1.0 - t) * (c.p - 1.0) * std::pow(tu, c.p - 2.0) +
                           rho * shift_deriv(tu, sl.au[i], c.p);
                }
                if (in_v) {
                    dvv -= t * c.beta2 * std::pow(tu, c.alpha2) *
                               std::pow(tv + eps, c.beta2 - 1.0) +
                           pb.led.m * (1.0 - t) * (c.q - 1.0) * std::pow(tv, c.q - 2.0) +
                           rho * shift_deriv(tv, sl.av[i], c.q);
                }
                if (in_v) duv = -t * c.beta1 * std::pow(tu + eps, c.alpha1) *
                                std::pow(tv, c.beta1 - 1.0);
                if (in_u) dvu = -t * c.alpha2 * std::pow(tu, c.alpha2 - 1.0) *
                                std::pow(tv + eps, c.beta2);
                dia[i] = {jp.diag[i] + duu, duv, dvu, jq.diag[i] + dvv};
                sub[i] = {jp.lower[i], 0.0, 0.0, jq.lower[i]};
                sup[i] = {jp.upper[i], 0.0, 0.0, jq.upper[i]};
            }
            std::vector<double> du(n), dv(n);
            for (size_t i = 0; i < n; ++i) {
                du[i] = -ru[i];
                dv[i] = -rv[i];
            }
            block_thomas(sub, dia, sup, du, dv);

            double lam = 1.0;
            bool accepted = false;
            Fields trial;
            trial.u.resize(n);
            trial.v.resize(n);
            std::vector<double> rtu, rtv;
            for (int ls = 0; ls < 40; ++ls) {
                for (size_t i = 0; i < n; ++i) {
                    trial.u[i] = x.u[i] + lam * du[i];
                    trial.v[i] = x.v[i] + lam * dv[i];
                }
                resid(trial, rtu, rtv);
                double rtn = std::max(max_norm(rtu), max_norm(rtv));
                if (std::isfinite(rtn) && (rtn <= (1.0 - 1e-4 * lam) * rn || rtn <= tol)) {
                    x = std::move(trial);
                    ru.swap(rtu);
                    rv.swap(rtv);
                    rn = rtn;
                    accepted = true;
                    break;
                }
                lam *= opts.damping;
            }
            out.iterations = it + 1;
            if (!accepted) {
                out.failure = "line_search_stall";
                break;
            }
        }
    } catch (const degenerate_jacobian&) {
        out.failure = "singular_jacobian";
    }
    if (!out.converged && out.failure.empty()) out.failure = "no_convergence";
    out.state = std::move(x);
    out.residual = rn;
    return out;
}

// Smooth random field with values in [0, 1] and max exactly 1: two
// neighbor-averaging passes over iid uniforms, then rescaled.
std::vector<double> smooth_unit_field(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> w(static_cast<size_t>(n));
    for (auto& x : w) x = uni(rng);
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> s(w.size());
        for (size_t i = 0; i < w.size(); ++i) {
            double l = i > 0 ? w[i - 1] : w[i];
            double r = i + 1 < w.size() ? w[i + 1] : w[i];
            s[i] = 0.25 * (l + 2.0 * w[i] + r);
        }
        w.swap(s);
    }
    double mx = max_norm(w);
    if (mx > 0.0)
        for (auto& x : w) x /= mx;
    return w;
}

bool all_positive(const std::vector<double>& w) {
    for (double x : w)
        if (!(x > 0.0)) return false;
    return true;
}

}  // namespace

double deflation_factor(const Mesh& mesh, const std::vector<double>& u,
                        const std::vector<double>& v, const std::vector<double>& ru,
                        const std::vector<double>& rv) {
    return deflation_weight(mesh, Fields{u, v}, Fields{ru, rv});
}

Problem make_problem(const ExponentConfig& cfg, const Mesh& mesh, const BarrierSet& bar,
                     const ConstantLedger& ledger) {
    Problem pb;
    pb.cfg = cfg;
    pb.mesh = mesh;
    pb.led = ledger;
    pb.env = build_envelope(ledger, bar, cfg, mesh);
    pb.phi_p = bar.eigen_p.phi;
    pb.phi_q = bar.eigen_q.phi;
    return pb;
}

std::vector<double> truncate(const std::vector<double>& w, const std::vector<double>& lower,
                             const std::vector<double>& upper) {
    if (w.size() != lower.size() || w.size() != upper.size())
        throw std::invalid_argument("truncate: field sizes disagree");
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) out[i] = std::min(std::max(w[i], lower[i]), upper[i]);
    return out;
}

std::vector<double> truncate(const std::vector<double>& w, const std::vector<double>& lower,
                             double upper) {
    if (w.size() != lower.size())
        throw std::invalid_argument("truncate: field sizes disagree");
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) out[i] = std::min(std::max(w[i], lower[i]), upper);
    return out;
}

void rhs_homotopy(const Problem& pb, const std::vector<double>& u, const std::vector<double>& v,
                  double t, double eps, HomotopyVariant variant, std::vector<double>& f_u,
                  std::vector<double>& f_v) {
    check_state(pb, u, v, "rhs_homotopy");
    check_t_eps(t, eps, "rhs_homotopy");
    const BoxUpper up = box_upper(pb, variant);
    std::vector<double> tu = truncate(u, pb.env.u_lo, up.u);
    std::vector<double> tv = truncate(v, pb.env.v_lo, up.v);
    core_rhs(pb, tu, tv, t, eps, variant, f_u, f_v);
    const ShiftSlopes s = shift_slopes(pb, eps);
    for (size_t i = 0; i < f_u.size(); ++i) {
        f_u[i] += pb.led.rho * shift_term(tu[i], s.au[i], pb.cfg.p - 1.0);
        f_v[i] += pb.led.rho * shift_term(tv[i], s.av[i], pb.cfg.q - 1.0);
    }
}

SolutionPair monotone_iterate(const Problem& pb, double eps, double t, HomotopyVariant variant,
                              const SolverOptions& opts, IterateStart start,
                              MonotoneStats* stats) {
    check_t_eps(t, eps, "monotone_iterate");
    const BoxUpper up = box_upper(pb, variant);
    if (start == IterateStart::lower)
        return iterate_picard(pb, eps, t, variant, opts, pb.env.u_lo, pb.env.v_lo, +1, stats);
    return iterate_picard(pb, eps, t, variant, opts, up.u, up.v, -1, stats);
}

ContinuationTrace continue_epsilon(const Problem& pb, const std::vector<double>& schedule,
                                   const SolverOptions& opts, const ContinuationExtend& extend) {
    if (schedule.empty())
        throw std::invalid_argument("continue_epsilon: schedule must not be empty");
    for (size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0 && schedule[k] < 1.0))
            throw std::invalid_argument("continue_epsilon: schedule values must lie in (0,1)");
        if (k > 0 && !(schedule[k] < schedule[k - 1]))
            throw std::invalid_argument("continue_epsilon: schedule must decrease strictly");
    }

    ContinuationTrace tr;
    SolutionPair cur = monotone_iterate(pb, schedule[0], 1.0, HomotopyVariant::radius_box, opts,
                                        IterateStart::lower);
    tr.entries.push_back({schedule[0], cur, std::numeric_limits<double>::quiet_NaN()});
    for (size_t k = 1; k < schedule.size(); ++k) {
        SolutionPair nxt = iterate_picard(pb, schedule[k], 1.0, HomotopyVariant::radius_box,
                                          opts, cur.u, cur.v, 0, nullptr);
        double diff = std::max(max_abs_diff(cur.u, nxt.u), max_abs_diff(cur.v, nxt.v));
        tr.entries.push_back({schedule[k], nxt, diff});
        cur = std::move(nxt);
    }

    // residuals of the pair against the unregularized right-hand sides
    auto singular_res = [&](const SolutionPair& sp, double& rn_u, double& rn_v) {
        std::vector<double> ru = apply_p_laplacian(sp.u, pb.cfg.p, pb.mesh);
        std::vector<double> rv = apply_p_laplacian(sp.v, pb.cfg.q, pb.mesh);
        rn_u = 0.0;
        rn_v = 0.0;
        for (size_t i = 0; i < ru.size(); ++i) {
            double fu = std::pow(sp.u[i], pb.cfg.alpha1) * std::pow(sp.v[i], pb.cfg.beta1);
            double fv = std::pow(sp.u[i], pb.cfg.alpha2) * std::pow(sp.v[i], pb.cfg.beta2);
            rn_u = std::max(rn_u, std::abs(ru[i] - fu));
            rn_v = std::max(rn_v, std::abs(rv[i] - fv));
        }
    };

    double sr_u = 0.0, sr_v = 0.0;
    singular_res(cur, sr_u, sr_v);
    if (extend.target_residual > 0.0) {
        while (std::max(sr_u, sr_v) > extend.target_residual) {
            double ne = cur.eps * extend.factor;
            if (!(ne >= extend.eps_floor)) break;
            SolutionPair nxt = iterate_picard(pb, ne, 1.0, HomotopyVariant::radius_box, opts,
                                              cur.u, cur.v, 0, nullptr);
            double diff = std::max(max_abs_diff(cur.u, nxt.u), max_abs_diff(cur.v, nxt.v));
            tr.entries.push_back({ne, nxt, diff});
            cur = std::move(nxt);
            singular_res(cur, sr_u, sr_v);
        }
    }
    tr.singular_residual_u = sr_u;
    tr.singular_residual_v = sr_v;
    tr.entries.back().sol.residual_u = sr_u;
    tr.entries.back().sol.residual_v = sr_v;
    return tr;
}

SecondSearchResult find_second_solution(const Problem& pb, const SolutionPair& first,
                                        double eps, const SolverOptions& opts,
                                        std::uint64_t seed) {
    check_state(pb, first.u, first.v, "find_second_solution");
    check_t_eps(1.0, eps, "find_second_solution");
    const Mesh& mesh = pb.mesh;
    const size_t n = static_cast<size_t>(mesh.n);
    const Fields ref{first.u, first.v};
    const double nu1 = max_norm(first.u);
    const double nv1 = max_norm(first.v);

    std::mt19937_64 rng(seed);
    struct Start {
        std::string label;
        Fields state;
        bool deflated;
    };
    std::vector<Start> starts;
    for (int k = 0; k < 4; ++k) {
        double amp = k < 2 ? 0.5 : 0.9;
        std::vector<double> pu = smooth_unit_field(rng, mesh.n);
        std::vector<double> pv = smooth_unit_field(rng, mesh.n);
        Fields s;
        s.u.resize(n);
        s.v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            if (k % 2 == 0) {
                s.u[i] = first.u[i] * (1.0 + amp * pu[i]);
                s.v[i] = first.v[i] * (1.0 - amp * pv[i]);
            } else {
                s.u[i] = first.u[i] * (1.0 - amp * pu[i]);
                s.v[i] = first.v[i] * (1.0 + amp * pv[i]);
            }
        }
        starts.push_back({"deflate_kick_" + std::to_string(k + 1), std::move(s), true});
    }
    for (double beta : {1.5, 2.0, 4.0, 8.0}) {
        Fields s;
        s.u.resize(n);
        s.v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            s.u[i] = beta * pb.env.u_hat[i];
            s.v[i] = beta * pb.env.v_hat[i];
        }
        std::ostringstream os;
        os << "hat_scale_" << beta;
        starts.push_back({os.str(), std::move(s), false});
    }

    SecondSearchResult res;
    for (auto& [label, start, deflated] : starts) {
        NewtonOutcome out = newton_regularized(pb, eps, opts, start, deflated ? &ref : nullptr);
        AttemptDiagnostic d;
        d.start = label;
        d.iterations = out.iterations;
        d.final_residual = out.residual;
        d.converged = out.converged;
        d.positive = all_positive(out.state.u) && all_positive(out.state.v);
        double sep_u = nu1 > 0.0 ? max_abs_diff(out.state.u, first.u) / nu1 : 0.0;
        double sep_v = nv1 > 0.0 ? max_abs_diff(out.state.v, first.v) / nv1 : 0.0;
        d.separation = std::max(sep_u, sep_v);
        d.outside_hat = classify_hat(pb, out.state.u, out.state.v) == HatClass::outside_hat;
        d.inside_radius = std::max(max_norm(out.state.u), max_norm(out.state.v)) <= pb.led.R;
        if (!d.converged)
            d.outcome = out.failure;
        else if (!d.positive)
            d.outcome = "lost_positivity";
        else if (d.separation <= kSeparationGate)
            d.outcome = "matches_first";
        else if (!d.outside_hat)
            d.outcome = "inside_hat";
        else if (!d.inside_radius)
            d.outcome = "outside_radius";
        else
            d.outcome = "second_solution";
        bool accept = d.outcome == "second_solution";
        res.attempts.push_back(std::move(d));
        if (accept) {
            std::vector<double> ru = apply_p_laplacian(out.state.u, pb.cfg.p, mesh);
            std::vector<double> rv = apply_p_laplacian(out.state.v, pb.cfg.q, mesh);
            double rn_u = 0.0, rn_v = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double fu = std::pow(out.state.u[i] + eps, pb.cfg.alpha1) *
                            std::pow(out.state.v[i], pb.cfg.beta1);
                double fv = std::pow(out.state.u[i], pb.cfg.alpha2) *
                            std::pow(out.state.v[i] + eps, pb.cfg.beta2);
                rn_u = std::max(rn_u, std::abs(ru[i] - fu));
                rn_v = std::max(rn_v, std::abs(rv[i] - fv));
            }
            res.found = true;
            res.pair.u = std::move(out.state.u);
            res.pair.v = std::move(out.state.v);
            res.pair.eps = eps;
            res.pair.residual_u = rn_u;
            res.pair.residual_v = rn_v;
            res.pair.iterations = out.iterations;
            res.pair.classification = HatClass::outside_hat;
            break;
        }
    }
    return res;
}

T0Report verify_no_solution_t0(const Problem& pb, double eps, const SolverOptions& opts,
                               std::uint64_t seed) {
    check_t_eps(0.0, eps, "verify_no_solution_t0");
    const Mesh& mesh = pb.mesh;
    const size_t n = static_cast<size_t>(mesh.n);
    T0Report rep;

    try {
        monotone_iterate(pb, eps, 0.0, HomotopyVariant::radius_box, opts, IterateStart::lower);
        rep.monotone_outcome = "converged inside the box";
    } catch (const rectangle_escape& e) {
        rep.monotone_escaped = true;
        std::ostringstream os;
        os << "rectangle_escape at iteration " << e.iteration << " with relative excess "
           << e.worst_excess;
        rep.monotone_outcome = os.str();
    } catch (const non_convergence& e) {
        std::ostringstream os;
        os << "no_convergence after " << e.iterations << " iterations";
        rep.monotone_outcome = os.str();
    }

    // shared start list: ten seeded smooth states plus the known solution
    SolutionPair t1 = monotone_iterate(pb, eps, 1.0, HomotopyVariant::radius_box, opts,
                                       IterateStart::lower);
    const double php = max_norm(pb.phi_p);
    const double phq = max_norm(pb.phi_q);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.02, 0.98);
    std::vector<std::pair<std::string, Fields>> starts;
    for (int k = 0; k < 10; ++k) {
        double ru = amp(rng), rv = amp(rng);
        std::vector<double> ju = smooth_unit_field(rng, mesh.n);
        std::vector<double> jv = smooth_unit_field(rng, mesh.n);
        Fields s;
        s.u.resize(n);
        s.v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            s.u[i] = ru * pb.led.R * (pb.phi_p[i] / php) * (0.7 + 0.6 * ju[i]);
            s.v[i] = rv * pb.led.R * (pb.phi_q[i] / phq) * (0.7 + 0.6 * jv[i]);
        }
        starts.emplace_back("seed_" + std::to_string(k + 1), std::move(s));
    }
    starts.emplace_back("known_solution", Fields{t1.u, t1.v});

    auto sweep = [&](double t, std::vector<AttemptDiagnostic>& into) {
        int roots = 0;
        for (const auto& [label, start] : starts) {
            NewtonOutcome out = newton_homotopy(pb, t, eps, opts, start);
            AttemptDiagnostic d;
            d.start = label;
            d.iterations = out.iterations;
            d.final_residual = out.residual;
            d.converged = out.converged;
            d.positive = all_positive(out.state.u) && all_positive(out.state.v);
            d.outside_hat = classify_hat(pb, out.state.u, out.state.v) == HatClass::outside_hat;
            d.inside_radius =
                std::max(max_norm(out.state.u), max_norm(out.state.v)) <=
                pb.led.R * (1.0 + kEscapeSlack);
            if (!d.converged) {
                d.outcome = out.failure;
            } else if (d.inside_radius) {
                d.outcome = "root_inside_radius";
                ++roots;
            } else {
                d.outcome = "converged_outside_radius";
            }
            into.push_back(std::move(d));
        }
        return roots;
    };
    rep.roots_t0 = sweep(0.0, rep.attempts_t0);
    rep.roots_t1 = sweep(1.0, rep.attempts_t1);
    return rep;
}

}  // namespace singsys
