#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace singsys {

// Base class for every failure the solvers can raise.  Callers that only
// want a pass/fail answer can catch this; the CLI maps it to exit code 2.
struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iteration budget exhausted.  Carries the last residual so the caller can
// decide whether the result is still usable as a warm start.
struct non_convergence : solver_error {
    non_convergence(const std::string& where, int iters, double residual)
        : solver_error(where + ": no convergence after " + std::to_string(iters) +
                       " iterations, last residual " + std::to_string(residual)),
          iterations(iters),
          last_residual(residual) {}
    int iterations;
    double last_residual;
};

// The linearization lost invertibility (zero pivot in the tridiagonal
// elimination).  Only reachable when the gradient regularization floor is 0.
struct degenerate_jacobian : solver_error {
    explicit degenerate_jacobian(const std::string& msg) : solver_error(msg) {}
};

// An iterate that must stay positive picked up a non-positive node.
struct sign_violation : solver_error {
    explicit sign_violation(const std::string& msg) : solver_error(msg) {}
};

// Envelope-constant fit hit a non-finite or non-positive ratio.
struct fit_failure : solver_error {
    explicit fit_failure(const std::string& msg) : solver_error(msg) {}
};

// Doubling search for a ledger constant passed the cap without satisfying
// its inequality family.  Names the constant.
struct selection_diverged : solver_error {
    selection_diverged(const std::string& constant, const std::string& detail)
        : solver_error("selection for " + constant + " diverged: " + detail),
          constant_name(constant) {}
    std::string constant_name;
};

// A constructed barrier field failed its defining inequality.  Carries the
// offending node indices (worst first).
struct envelope_violation : solver_error {
    envelope_violation(const std::string& check, std::vector<int> bad_nodes, double worst)
        : solver_error("envelope check " + check + " violated at " +
                       std::to_string(bad_nodes.size()) + " node(s), worst excess " +
                       std::to_string(worst)),
          check_name(check),
          nodes(std::move(bad_nodes)),
          worst_excess(worst) {}
    std::string check_name;
    std::vector<int> nodes;
    double worst_excess;
};

// A monotone iterate left its truncation box by more than the tolerance.
// Signals a mis-selected constant (or, at t = 0, the expected obstruction).
struct rectangle_escape : solver_error {
    rectangle_escape(const std::string& msg, int iter, double excess)
        : solver_error(msg), iteration(iter), worst_excess(excess) {}
    int iteration;
    double worst_excess;
};

// Boundary growth-rate fit degenerated (lower rate vanished relative to the
// upper one).
struct degenerate_rate : solver_error {
    explicit degenerate_rate(const std::string& msg) : solver_error(msg) {}
};

}  // namespace singsys
