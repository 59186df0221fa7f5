#include "singsys/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace singsys {

double Mesh::distance(int i) const {
    double x = node.at(static_cast<size_t>(i));
    if (kind == Kind::interval) return std::min(x, length - x);
    return length - x;
}

std::vector<int> Mesh::strip_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (distance(i) < delta) out.push_back(i);
    return out;
}

std::vector<int> Mesh::off_strip_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (distance(i) >= delta) out.push_back(i);
    return out;
}

double Mesh::integrate(const std::vector<double>& f) const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += cell_w[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
    return measure_scale * h * s;
}

Mesh build_mesh(Mesh::Kind kind, int n, double L, double delta, int dim) {
    if (n < 3) throw std::invalid_argument("build_mesh: need n >= 3, got " + std::to_string(n));
    if (!(L > 0)) throw std::invalid_argument("build_mesh: need L > 0");
    if (!(delta > 0) || !(delta < 0.5 * L))
        throw std::invalid_argument("build_mesh: need 0 < delta < L/2");
    if (kind == Mesh::Kind::ball && dim < 2)
        throw std::invalid_argument("build_mesh: ball kind needs dim >= 2");

    Mesh m;
    m.kind = kind;
    m.n = n;
    m.length = L;
    m.delta = delta;
    m.dim = (kind == Mesh::Kind::ball) ? dim : 1;
    m.h = L / (n + 1);

    m.node.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) m.node[static_cast<size_t>(i)] = (i + 1) * m.h;

    m.edge_w.assign(static_cast<size_t>(n) + 1, 1.0);
    m.cell_w.assign(static_cast<size_t>(n), 1.0);
    m.measure_scale = 1.0;

    if (kind == Mesh::Kind::ball) {
        const double N = static_cast<double>(dim);
        // edge e sits between node e and node e+1 (0 = axis ghost, n+1 = wall)
        for (int e = 0; e <= n; ++e) {
            double r = (e + 0.5) * m.h;
            m.edge_w[static_cast<size_t>(e)] = std::pow(r, N - 1.0);
        }
        // exact cell average of r^{N-1} over [r_{i-1/2}, r_{i+1/2}]
        for (int i = 1; i <= n; ++i) {
            double rl = (i - 0.5) * m.h;
            double rr = (i + 0.5) * m.h;
            m.cell_w[static_cast<size_t>(i - 1)] =
                (std::pow(rr, N) - std::pow(rl, N)) / (N * m.h);
        }
        // surface measure of the unit sphere in N dimensions
        m.measure_scale = 2.0 * std::pow(M_PI, 0.5 * N) / std::tgamma(0.5 * N);
    }
    return m;
}

double max_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

}  // namespace singsys
