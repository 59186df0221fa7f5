#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "singsys/barriers.hpp"
#include "singsys/exponents.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"

namespace singsys {

/// Everything the coupled-system solvers need about one configuration:
/// exponents, grid, selected constants, the envelope fields and the two
/// eigenfunctions (shape functions for truncation sources and sweep starts).
struct Problem {
    ExponentConfig cfg;
    Mesh mesh;
    ConstantLedger led;
    Envelope env;
    std::vector<double> phi_p, phi_q;
};

/// Bundles a validated configuration into a Problem.  Calls build_envelope,
/// so every envelope ordering and operator inequality is re-verified here.
Problem make_problem(const ExponentConfig& cfg, const Mesh& mesh,
                     const BarrierSet& bar, const ConstantLedger& ledger);

/// Which truncation box the homotopy right-hand sides clamp to, and which
/// t = 0 endpoint they connect the system with:
///   radius_box  clamp to [lower, R], endpoint  m * u^{p-1}   (no roots of
///               useful size: m sits above both principal eigenvalues),
///   hat_box     clamp to [lower, hat], endpoint eta*(phi+eps)^{alpha}
///               (one root, strictly below the hat pair).
enum class HomotopyVariant { radius_box, hat_box };

enum class HatClass { inside_hat, outside_hat };

struct SolutionPair {
    std::vector<double> u, v;
    double eps = 0;
    double residual_u = 0, residual_v = 0;  // max-norm operator residuals
    int iterations = 0;
    HatClass classification = HatClass::inside_hat;
};

/// Per-step bookkeeping of monotone_iterate.
struct MonotoneStats {
    int iterations = 0;
    double final_diff = 0;             // last max-norm update size
    bool monotone_every_step = true;   // ordering held at every accepted step
    double worst_step_violation = 0;   // largest relative ordering regression
};

enum class IterateStart { lower, upper };

/// Nodewise clamp of w into [lower, upper]; idempotent, and the two
/// overloads differ only in whether the upper bound is a field or a scalar.
std::vector<double> truncate(const std::vector<double>& w,
                             const std::vector<double>& lower,
                             const std::vector<double>& upper);
std::vector<double> truncate(const std::vector<double>& w,
                             const std::vector<double>& lower, double upper);

/// Homotopy right-hand sides at the (raw) state (u, v).  Both components are
/// evaluated on the truncated state and carry the monotonizing shift in its
/// integrated form rho * max(A(x) * w, w^{p-1}) with
/// A(x) = (lower(x)+eps)^{a-1} R^{b}, so each side is nondecreasing in its
/// own variable throughout the box (certified by the rho ledger family).
/// Requires eps in (0,1) and t in [0,1]; throws std::invalid_argument.
void rhs_homotopy(const Problem& pb, const std::vector<double>& u,
                  const std::vector<double>& v, double t, double eps,
                  HomotopyVariant variant, std::vector<double>& f_u,
                  std::vector<double>& f_v);

/// Fixed point of the homotopy system by Picard iteration from one corner of
/// the truncation box, both components updated simultaneously from the
/// previous state.  On the box the shift terms of operator and right-hand
/// side cancel exactly, so the iteration solves the plain Dirichlet problem
/// for the unshifted right-hand side each step; the fixed point is the same,
/// without the shift-induced damping.  Every raw iterate is required to stay
/// inside the box up to a relative slack (throws rectangle_escape), ordering
/// per step is recorded in `stats`, and convergence requires both the update
/// and the homotopy residual to come down (residual target is
/// 1e3 * newton_tol, the boundary-layer amplification of the update size).
/// Throws non_convergence when max_iter is exhausted.
SolutionPair monotone_iterate(const Problem& pb, double eps, double t,
                              HomotopyVariant variant, const SolverOptions& opts,
                              IterateStart start = IterateStart::lower,
                              MonotoneStats* stats = nullptr);

struct ContinuationEntry {
    double eps = 0;
    SolutionPair sol;
    double diff_to_previous = std::numeric_limits<double>::quiet_NaN();
};

/// Extension policy of continue_epsilon: after the prescribed schedule,
/// keep shrinking eps by `factor` until the residual of the unregularized
/// system drops below `target_residual` or eps would fall below `eps_floor`.
/// target_residual = 0 disables the extension.
struct ContinuationExtend {
    double target_residual = 0;
    double factor = 0.1;
    double eps_floor = 1e-12;
};

struct ContinuationTrace {
    std::vector<ContinuationEntry> entries;
    // Residuals of the final pair measured against the unregularized system;
    // the final entry's residual fields are overwritten with these.
    double singular_residual_u = std::numeric_limits<double>::quiet_NaN();
    double singular_residual_v = std::numeric_limits<double>::quiet_NaN();
};

/// Continuation in the regularization parameter: the first entry is the
/// monotone lower-start solve at schedule[0], every later entry warm-starts
/// the Picard iteration from the previous pair (t = 1, radius box).
/// `schedule` must be nonempty, strictly decreasing, inside (0,1).
/// diff_to_previous of the first entry stays NaN.
ContinuationTrace continue_epsilon(const Problem& pb,
                                   const std::vector<double>& schedule,
                                   const SolverOptions& opts,
                                   const ContinuationExtend& extend = {});

/// One start of a root search, with the gates it passed or failed.
struct AttemptDiagnostic {
    std::string start;         // which initial state this attempt used
    int iterations = 0;
    double final_residual = 0;
    double separation = 0;     // relative max-norm distance to the first pair
    bool converged = false;
    bool positive = false;
    bool outside_hat = false;
    bool inside_radius = false;
    std::string outcome;
};

struct SecondSearchResult {
    bool found = false;
    SolutionPair pair;  // valid only when found
    std::vector<AttemptDiagnostic> attempts;
};

/// Weight 1 + 1/dist^2 the deflated Newton multiplies its residual with;
/// dist is the volume-integral distance between (u, v) and (ru, rv).
/// Returns 1e300 when the states coincide.
double deflation_factor(const Mesh& mesh, const std::vector<double>& u,
                        const std::vector<double>& v, const std::vector<double>& ru,
                        const std::vector<double>& rv);

/// Search for a second positive solution of the regularized system at the
/// given eps, away from `first`, in two prongs: (a) deflated Newton from four
/// random multiplicative kicks around the first pair (the residual is scaled
/// by the deflation factor above, the step by the matching exact correction,
/// so the iteration cannot settle back on `first`), and (b) plain Newton
/// from the hat pair scaled by 1.5, 2, 4 and 8, where re-convergence to
/// `first` is filtered by a separation gate instead.  Both prongs run on the
/// coupled block-tridiagonal linearization with a fraction-to-boundary rule
/// keeping the components positive.  A candidate is accepted when it
/// converges, stays positive, separates from `first` by more than 10% in
/// relative max norm, exits the hat rectangle somewhere and stays below the
/// radius R.  The search stops at the first accepted candidate; every
/// attempt made is reported.
SecondSearchResult find_second_solution(const Problem& pb,
                                        const SolutionPair& first, double eps,
                                        const SolverOptions& opts,
                                        std::uint64_t seed = 1);

/// Diagnostics of the degree-argument endpoint: at t = 0 the radius-box
/// homotopy must have no roots inside the radius ball.
struct T0Report {
    bool monotone_escaped = false;   // lower-start iteration left the box
    std::string monotone_outcome;
    int roots_t0 = 0;                // converged roots with max norm <= R
    int roots_t1 = 0;                // control: same sweep at t = 1
    std::vector<AttemptDiagnostic> attempts_t0;
    std::vector<AttemptDiagnostic> attempts_t1;
};

/// Checks the t = 0 endpoint in two independent ways: the monotone iteration
/// from the lower corner (expected to escape the box, since the t = 0 source
/// scales like m >> lambda_1) and a Newton sweep over ten seeded smooth
/// starts plus the t = 1 solution as an eleventh.  The same sweep is run at
/// t = 1 as a positive control, where it must find the known solution.
T0Report verify_no_solution_t0(const Problem& pb, double eps,
                               const SolverOptions& opts,
                               std::uint64_t seed = 1);

}  // namespace singsys
