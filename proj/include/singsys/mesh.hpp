#pragma once

#include <cstddef>
#include <vector>

namespace singsys {

/// Uniform one-dimensional grid on (0, L), either a flat interval or the
/// radial coordinate of a ball of radius L in `dim` space dimensions.
///
/// Unknowns live at the n interior nodes x_i = i*h, i = 1..n, h = L/(n+1).
/// The trace at x = L (and at x = 0 for the interval) is zero.  For the ball
/// the origin is the symmetry axis: no unknown sits there, and the flux
/// through the first cell edge uses a one-sided even extension (see
/// plaplace.cpp).
struct Mesh {
    enum class Kind { interval, ball };

    Kind kind = Kind::interval;
    int n = 0;          // interior node count
    double length = 0;  // domain size L
    double delta = 0;   // boundary-strip width
    int dim = 1;        // ambient dimension (1 for interval, >= 2 for ball)
    double h = 0;       // node spacing L/(n+1)

    std::vector<double> node;    // interior coordinates, size n
    std::vector<double> edge_w;  // geometric edge weights, size n+1
    std::vector<double> cell_w;  // cell-averaged volume weights, size n
    double measure_scale = 1.0;  // angular factor for volume integrals

    /// Distance from node i to the Dirichlet boundary.
    double distance(int i) const;

    /// Indices of nodes with distance(i) < delta (strict).
    std::vector<int> strip_nodes() const;
    /// Complement of strip_nodes().
    std::vector<int> off_strip_nodes() const;

    /// Volume integral of a nodal field (zero boundary values assumed).
    double integrate(const std::vector<double>& f) const;
};

/// Builds the grid and precomputes edge/cell weights.
/// Requires n >= 3, L > 0, 0 < delta < L/2, and dim >= 2 for the ball kind.
/// Throws std::invalid_argument otherwise.
Mesh build_mesh(Mesh::Kind kind, int n, double L, double delta, int dim = 0);

// Small nodal-field helpers shared across the library.
double max_norm(const std::vector<double>& v);
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace singsys
