#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "singsys/exponents.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"

namespace singsys {

// Config file rejected.  line is 1-based; 0 means the failure is not tied to
// a single line (unreadable file, missing terminator).
struct config_error : std::runtime_error {
    config_error(const std::string& origin, int line_no, const std::string& what_part)
        : std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what_part),
          line(line_no) {}
    int line;
};

// One full run description, parsed from a flat key = value file.
//
// Recognized keys and defaults (the defaults are the shipped preset, a
// symmetric square-root coupling on the unit ball in R^3):
//   p, q            operator exponents            default 2
//   N               space dimension               default 3
//   alpha1, beta1   first right-hand side         default -0.5, 0.5
//   alpha2, beta2   second right-hand side        default 0.5, -0.5
//   mesh.kind       interval | ball               default ball
//   mesh.n          interior nodes                default 129
//   mesh.L          domain radius / length        default 1
//   mesh.delta      boundary strip width          default mesh.L / 10
//   solver.tol      Newton / iteration tolerance  default 1e-10
//   solver.max_iter per-solve iteration budget    default 100
//   solver.damping  Newton step damping           default 0.5
//   eps.schedule    comma list, strictly decreasing regularization values,
//                   default 1e-1,1e-2,1e-3,1e-4
//   seed            RNG seed for fuzz checks and sweep starts, default 1
//
// output_dir is command-line state, not a file key.
struct RunConfig {
    ExponentConfig exponents;
    std::string mesh_kind = "ball";
    int mesh_n = 129;
    double mesh_L = 1.0;
    double mesh_delta = 0.0;  // 0 means "use mesh_L / 10"
    SolverOptions solver;
    std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    double delta() const { return mesh_delta > 0.0 ? mesh_delta : mesh_L / 10.0; }
};

// Parses a config stream.  Unknown keys, duplicate keys, malformed numbers
// and malformed lines all throw config_error with the offending line number.
RunConfig parse_config(std::istream& in, const std::string& origin);

// parse_config on a file; unreadable path throws config_error (line 0).
RunConfig load_config(const std::string& path);

// Builds the mesh described by the config (delta default resolved here).
Mesh make_mesh(const RunConfig& cfg);

// Every setting as ordered (key, value) text, numbers in round-trip form.
// This is the echo block written at the top of each output artifact.
std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& cfg);

}  // namespace singsys
