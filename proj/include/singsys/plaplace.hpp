#pragma once

#include <vector>

#include "singsys/mesh.hpp"

namespace singsys {

struct SolverOptions {
    double newton_tol = 1e-10;          // max-norm residual target
    int max_iter = 100;                 // Newton iteration cap
    double damping = 0.5;               // backtracking shrink factor in (0,1)
    double regularization_floor = 1e-12;  // floor inside |Du|^{p-2} (Jacobians and
                                          // solver fluxes); 0 disables
};

struct SolveStats {
    int iterations = 0;
    double final_residual = 0;
    std::vector<double> energies;  // energy after each accepted step
};

struct EigenPair {
    double lambda = 0;
    std::vector<double> phi;  // positive, normalized to unit L^p volume integral
    int iterations = 0;
    double residual = 0;  // max-norm of -D_p(phi) - lambda*phi^{p-1}
};

/// Signed power |s|^{p-2} s (value 0 at s = 0 for every p > 1).
double signed_power(double s, double pm1);

/// Discrete p-Laplacian in flux-difference form.  `floor` regularizes the
/// gradient factor as (Du^2 + floor^2)^{(p-2)/2}; the default 0 gives the
/// exactly (p-1)-homogeneous operator.
std::vector<double> apply_p_laplacian(const std::vector<double>& u, double p,
                                      const Mesh& mesh, double floor = 0.0);

/// Discrete energy whose gradient is the regularized operator residual
/// (interval exactly; ball up to the one-sided axis edge).
double dirichlet_energy(const std::vector<double>& u, const std::vector<double>& f,
                        double p, const Mesh& mesh, double floor);

/// Solves -D_p u = f with zero boundary values by damped Newton (single
/// tridiagonal solve when p == 2).  Converges when the max-norm residual
/// reaches newton_tol or the rounding floor of the residual evaluation,
/// whichever is larger; the floor matters on fine grids with steep fluxes.
/// Throws non_convergence / degenerate_jacobian.
std::vector<double> solve_dirichlet(const std::vector<double>& f, double p,
                                    const Mesh& mesh, const SolverOptions& opts,
                                    const std::vector<double>* initial = nullptr,
                                    SolveStats* stats = nullptr);

/// Principal Dirichlet eigenpair by inverse power iteration with L^p
/// renormalization and Rayleigh-quotient updates.  phi > 0 at every node.
EigenPair principal_eigenpair(double p, const Mesh& mesh, const SolverOptions& opts);

/// Rayleigh quotient of a nodal field (used by the eigensolver and tests).
double rayleigh_quotient(const std::vector<double>& u, double p, const Mesh& mesh);

/// Solves the shifted problem
///   -D_p u + rho * max(kink_floor, |u|^{p-2} u) = rhs
/// with zero boundary values.  `kink_floor` is a positive nodal field fixed
/// by the caller; ties in the max activate the |u|^{p-2} u branch.
std::vector<double> solve_shifted(const std::vector<double>& rhs, double p, double rho,
                                  const std::vector<double>& kink_floor, const Mesh& mesh,
                                  const SolverOptions& opts,
                                  const std::vector<double>* initial = nullptr);

/// Bands of the tridiagonal Jacobian of apply_p_laplacian at u, with the same
/// floor semantics as the operator itself.  Row i holds lower[i], diag[i],
/// upper[i]; lower[0] and upper[n-1] are zero.  Exposed so coupled-system
/// Newton solvers can assemble block matrices from the scalar stencil.
struct JacobianBands {
    std::vector<double> lower, diag, upper;
};

JacobianBands p_laplacian_jacobian(const std::vector<double>& u, double p,
                                   const Mesh& mesh, double floor = 0.0);

/// Magnitude below which the operator residual at u is indistinguishable
/// from evaluation rounding; Newton loops use it as an absolute floor on
/// their residual targets.
double residual_floor(const std::vector<double>& u, double p, const Mesh& mesh,
                      double floor = 0.0);

}  // namespace singsys
