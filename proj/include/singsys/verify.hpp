#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "singsys/barriers.hpp"
#include "singsys/exponents.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"
#include "singsys/system_solver.hpp"

namespace singsys {

/// One certified condition: a stable anchor id for cross-referencing, the
/// verdict, the node where the margin was smallest and that margin itself
/// (relative where the check defines it so).
struct CertificateEntry {
    std::string name;    // human-readable condition
    std::string anchor;  // stable check id, e.g. "rect.hat.u"
    bool pass = false;
    int worst_node = -1;  // -1 for scalar or nodeless checks
    double slack = 0;
};

/// Append-only certification record with the run context echoed in.
struct CertificateReport {
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<std::pair<std::string, std::string>> mesh_echo;
    std::vector<std::pair<std::string, std::string>> ledger_echo;
    std::vector<CertificateEntry> checks;
};

/// Max-norm residuals of the pair against the coupled system, using the
/// regularized right-hand sides when sol.eps > 0 and the plain singular ones
/// at sol.eps == 0.  Requires both components strictly positive at every
/// node; throws std::invalid_argument otherwise.
std::pair<double, double> weak_residual(const SolutionPair& sol, const ExponentConfig& cfg,
                                        const Mesh& mesh);

/// Envelope membership of a pair: nodewise lower/upper rectangle bounds and
/// the strict hat domination (certified with a relative margin of 1e-12).
/// Returns six entries: rect.lower.u, rect.upper.u, rect.lower.v,
/// rect.upper.v, rect.hat.u, rect.hat.v.
std::vector<CertificateEntry> check_rectangle(const SolutionPair& sol, const Envelope& env);

/// Boundary growth rate of a positive field: (min, max) of field/distance
/// over the boundary-strip nodes.  Throws degenerate_rate when the minimum
/// ratio is not strictly positive (the field vanishes faster than the
/// distance), std::invalid_argument when the strip contains no node.
std::pair<double, double> boundary_rate(const std::vector<double>& field, const Mesh& mesh);

/// Rate of the u component of a pair (the v component can be checked through
/// the field overload).
std::pair<double, double> boundary_rate(const SolutionPair& sol, const Mesh& mesh);

/// Comparison-principle spot check: `trials` independent pairs f <= g with
/// g = f + nonnegative bump are solved and the ordering u_f <= u_g is
/// asserted nodewise with 1e-10 absolute slack.  Deterministic: trial k
/// derives its generator from (seed, k), so trials parallelize and reorder
/// freely.  Requires trials >= 1.  The entry's slack is the smallest signed
/// margin min(u_g - u_f) seen anywhere.
CertificateEntry comparison_fuzz(double p, const Mesh& mesh, int trials,
                                 const SolverOptions& opts, std::uint64_t seed = 2024);

/// Fuzzes the truncation inequality |max(a,b) - max(c,d)| <= max(|a-c|,|b-d|)
/// on `quadruples` random quadruples over mixed magnitudes.  The inequality
/// underlies the continuity of the shifted operators; rounding is monotone,
/// so zero violations are expected exactly.
CertificateEntry max_truncation_fuzz(int quadruples, std::uint64_t seed = 2024);

/// Adapter from a selection-ledger inequality to a certificate entry
/// (anchor "select.<constant>").
CertificateEntry entry_from_inequality(const CheckedInequality& chk);

/// Line-oriented serialization: '#'-prefixed echo lines, then one check per
/// line as name, anchor, pass/fail, worst-node coordinate ("-" when the
/// check is nodeless) and slack, tab-separated.  The mesh maps node indices
/// to coordinates.
std::string to_text(const CertificateReport& rep, const Mesh& mesh);

}  // namespace singsys
