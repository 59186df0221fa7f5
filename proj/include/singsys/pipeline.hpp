#pragma once

#include "singsys/config.hpp"

namespace singsys {

// The four run pipelines behind the CLI.  Each writes its artifacts into
// cfg.output_dir (created if absent), prints a short progress/summary report
// to stdout and failures to stderr, and returns the process exit code:
//   0 success, 1 usage or missing-dependency error, 2 pipeline or
//   certificate failure, 3 second solution not found.

// Solves the two principal eigenproblems; writes eigen.csv.
int cmd_eigen(const RunConfig& cfg);

// Full barrier pipeline: exponent gate, auxiliary fields, constant
// selection, envelope, continuation with extension toward the unregularized
// system, certificates.  Writes solution.csv, trace.csv, ledger.csv,
// certificate.txt.
int cmd_solve(const RunConfig& cfg);

// Second-solution search at every scheduled eps (requires a prior cmd_solve
// in the same output directory).  Writes second.csv and attempts.csv.
// Returns 0 only when a certified second pair exists at the final eps.
int cmd_second(const RunConfig& cfg);

// Re-audits a stored solve: reloads solution.csv, reconstructs the envelope
// and ledger from the config, and re-runs every certificate check against
// the stored pair.  Rewrites certificate.txt.
int cmd_certify(const RunConfig& cfg);

}  // namespace singsys
