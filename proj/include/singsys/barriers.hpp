#pragma once

#include <string>
#include <vector>

#include "singsys/exponents.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"

namespace singsys {

// The six auxiliary fields the barrier construction is assembled from,
// all solved on one mesh:
//   eigen_p, eigen_q   principal eigenpairs of -D_p and -D_q,
//   xi1                -D_p xi1 = phi_p^alpha1,
//   xi2                -D_q xi2 = phi_q^beta2,
//   z1, z2             same sources with the sign flipped on the boundary
//                      strip (h1_field / h2_field),
//   w1                 -D_p w1 = w1^alpha1 (self-exponent fixed point),
//   w2                 -D_q w2 = w2^beta2.
struct BarrierSet {
    EigenPair eigen_p;
    EigenPair eigen_q;
    std::vector<double> xi1, xi2;
    std::vector<double> h1_field, h2_field;
    std::vector<double> z1, z2;
    std::vector<double> w1, w2;
};

// Envelope-fit constants: the tightest grid ratios tying each auxiliary
// field to its eigenfunction, plus the geometric quantities l, M, mu.
//   c0  * phi_p <= xi1 <= c1  * phi_p,   (c0 /2) phi_p <= z1 <= c1  phi_p
//   c0p * phi_q <= xi2 <= c1p * phi_q,   (c0p/2) phi_q <= z2 <= c1p phi_q
//   c2  * phi_p <= w1  <= c3  * phi_p
//   c2p * phi_q <= w2  <= c3p * phi_q
//   l * d(x) <= min(phi_p, phi_q),  |phi_p| + |phi_q| <= M,
//   phi_p, phi_q >= mu off the strip.
struct FittedConstants {
    double c0 = 0, c1 = 0, c0p = 0, c1p = 0;
    double c2 = 0, c3 = 0, c2p = 0, c3p = 0;
    double l = 0, M = 0, mu = 0;
};

// One verified inequality: the scalar or nodewise condition a ledger
// constant certifies, with the smallest margin seen over all nodes,
// epsilon values and t samples it was checked at.
struct CheckedInequality {
    std::string name;
    std::string constant;   // which ledger scalar this certifies
    double slack = 0.0;     // smallest margin (relative where noted)
    int worst_node = -1;    // -1 for purely scalar conditions
    bool ok = false;
};

// All selected scalars plus the inequality families they were certified
// against.  eps_schedule records the regularization values the epsilon-
// dependent families were checked for.
struct ConstantLedger {
    FittedConstants fit;
    double C = 0;        // barrier scale: lower C^{-1}(z1,z2), upper C(xi1,xi2)
    double Lambda = 0;   // hat scale: (u_hat, v_hat) = Lambda (w1, w2)
    double R = 0;        // a-priori radius for the truncated homotopy
    double rho = 0;      // shift weight making the right-hand sides monotone
    double m = 0;        // t=0 homotopy weight, above both eigenvalues
    double eta = 0;      // t=0 forcing weight of the alternative homotopy
    std::vector<double> eps_schedule;
    std::vector<CheckedInequality> checks;
};

// The barrier rectangle and hat pair built from the ledger.
struct Envelope {
    std::vector<double> u_lo, v_lo;   // C^{-1} (z1, z2)
    std::vector<double> u_hi, v_hi;   // C (xi1, xi2)
    std::vector<double> u_hat, v_hat; // Lambda (w1, w2)
};

/// Solves the two eigenproblems and the six auxiliary Dirichlet problems.
/// The self-exponent problems are solved by a geometrically under-relaxed
/// fixed point (relaxation (p-1)/(p-1+|alpha1|), superlinear near the fixed
/// point).  Throws non_convergence naming the subproblem, and
/// sign_violation if an auxiliary field loses interior positivity.
BarrierSet solve_auxiliaries(const ExponentConfig& cfg, const Mesh& mesh,
                             const SolverOptions& opts);

/// Tightest grid constants for the two-sided eigenfunction bounds above.
/// Throws fit_failure when a required ratio is non-finite or non-positive
/// (for example when z1 loses positivity because delta is too large).
FittedConstants fit_envelope_constants(const BarrierSet& bar, const Mesh& mesh);

/// Selects C, Lambda, R, rho, m, eta by doubling from 1 until every
/// inequality in each constant's family holds at all interior nodes, all
/// scheduled epsilon values and t in {0, 1/2, 1}; the strict families are
/// additionally required at epsilon = 0.  Records every verified check.
/// Throws selection_diverged when a constant passes `cap` unsatisfied.
ConstantLedger select_constants(const ExponentConfig& cfg, const BarrierSet& bar,
                                const Mesh& mesh,
                                const std::vector<double>& eps_schedule,
                                double cap = 1.8446744073709552e19);

/// Re-evaluates every inequality family at the scalar values currently in
/// the ledger (used to confirm monotonicity: doubling C must keep the
/// C-family satisfied).
std::vector<CheckedInequality> recheck_constants(const ExponentConfig& cfg,
                                                 const BarrierSet& bar,
                                                 const Mesh& mesh,
                                                 const ConstantLedger& ledger);

/// Assembles the envelope and re-verifies the defining differential
/// inequalities through the discrete operator itself:
///   -D_p u_lo <= u_lo^a1 v_lo^b1,   -D_p u_hi >= u_hi^a1 v_hi^b1,
///   -D_p u_hat >= u_lo^a1 v_hi^b1   (and the q-side analogues),
/// each within a relative sign tolerance.  Throws envelope_violation.
Envelope build_envelope(const ConstantLedger& ledger, const BarrierSet& bar,
                        const ExponentConfig& cfg, const Mesh& mesh);

}  // namespace singsys
