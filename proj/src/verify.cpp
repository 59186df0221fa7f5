#include "singsys/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "singsys/errors.hpp"

namespace singsys {

namespace {

constexpr double kStrictMargin = 1e-12;  // relative margin certifying strictness
constexpr double kCompareSlack = 1e-10;  // absolute ordering slack in the fuzz

// rhs <= lhs violation margin, relative to the bound's size
double rel_margin(double value, double bound) {
    return (bound - value) / (1.0 + std::abs(bound));
}

CertificateEntry nodewise_entry(const std::string& name, const std::string& anchor,
                                const std::vector<double>& value,
                                const std::vector<double>& bound, bool need_strict) {
    CertificateEntry e;
    e.name = name;
    e.anchor = anchor;
    e.slack = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < value.size(); ++i) {
        double m = rel_margin(value[i], bound[i]);
        if (m < e.slack) {
            e.slack = m;
            e.worst_node = static_cast<int>(i);
        }
    }
    double need = need_strict ? kStrictMargin : 0.0;
    e.pass = !(e.slack < need) && !std::isnan(e.slack);
    return e;
}

std::string format_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::pair<double, double> weak_residual(const SolutionPair& sol, const ExponentConfig& cfg,
                                        const Mesh& mesh) {
    if (static_cast<int>(sol.u.size()) != mesh.n || static_cast<int>(sol.v.size()) != mesh.n)
        throw std::invalid_argument("weak_residual: pair size does not match the mesh");
    for (size_t i = 0; i < sol.u.size(); ++i)
        if (!(sol.u[i] > 0.0) || !(sol.v[i] > 0.0))
            throw std::invalid_argument(
                "weak_residual: pair must be strictly positive at every interior node");

    std::vector<double> ru = apply_p_laplacian(sol.u, cfg.p, mesh);
    std::vector<double> rv = apply_p_laplacian(sol.v, cfg.q, mesh);
    double rn_u = 0.0, rn_v = 0.0;
    for (size_t i = 0; i < ru.size(); ++i) {
        double fu = std::pow(sol.u[i] + sol.eps, cfg.alpha1) * std::pow(sol.v[i], cfg.beta1);
        double fv = std::pow(sol.u[i], cfg.alpha2) * std::pow(sol.v[i] + sol.eps, cfg.beta2);
        rn_u = std::max(rn_u, std::abs(ru[i] - fu));
        rn_v = std::max(rn_v, std::abs(rv[i] - fv));
    }
    return {rn_u, rn_v};
}

std::vector<CertificateEntry> check_rectangle(const SolutionPair& sol, const Envelope& env) {
    std::vector<CertificateEntry> out;
    out.push_back(nodewise_entry("lower barrier below u", "rect.lower.u", env.u_lo, sol.u, false));
    out.push_back(nodewise_entry("u below upper barrier", "rect.upper.u", sol.u, env.u_hi, false));
    out.push_back(nodewise_entry("lower barrier below v", "rect.lower.v", env.v_lo, sol.v, false));
    out.push_back(nodewise_entry("v below upper barrier", "rect.upper.v", sol.v, env.v_hi, false));
    out.push_back(nodewise_entry("u strictly below hat", "rect.hat.u", sol.u, env.u_hat, true));
    out.push_back(nodewise_entry("v strictly below hat", "rect.hat.v", sol.v, env.v_hat, true));
    return out;
}

std::pair<double, double> boundary_rate(const std::vector<double>& field, const Mesh& mesh) {
    if (static_cast<int>(field.size()) != mesh.n)
        throw std::invalid_argument("boundary_rate: field size does not match the mesh");
    std::vector<int> strip = mesh.strip_nodes();
    if (strip.empty())
        throw std::invalid_argument("boundary_rate: the boundary strip contains no node");
    double k_lo = std::numeric_limits<double>::infinity();
    double k_hi = -std::numeric_limits<double>::infinity();
    for (int i : strip) {
        double r = field[static_cast<size_t>(i)] / mesh.distance(i);
        k_lo = std::min(k_lo, r);
        k_hi = std::max(k_hi, r);
    }
    if (!(k_lo > 0.0) || !std::isfinite(k_hi)) {
        std::ostringstream os;
        os << "boundary growth rate degenerated: min field/distance over the strip is " << k_lo;
        throw degenerate_rate(os.str());
    }
    return {k_lo, k_hi};
}

std::pair<double, double> boundary_rate(const SolutionPair& sol, const Mesh& mesh) {
    return boundary_rate(sol.u, mesh);
}

CertificateEntry comparison_fuzz(double p, const Mesh& mesh, int trials,
                                 const SolverOptions& opts, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("comparison_fuzz: trials must be >= 1");
    CertificateEntry e;
    e.name = "ordered sources give ordered solutions";
    e.anchor = "compare.fuzz";
    e.slack = std::numeric_limits<double>::infinity();
    int violations = 0;
    const size_t n = static_cast<size_t>(mesh.n);
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial) * 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> base(0.2, 2.0);
        std::uniform_real_distribution<double> bump(0.0, 0.5);
        std::vector<double> f(n), g(n);
        for (size_t i = 0; i < n; ++i) {
            f[i] = base(rng);
            g[i] = f[i] + bump(rng);
        }
        std::vector<double> uf = solve_dirichlet(f, p, mesh, opts);
        std::vector<double> ug = solve_dirichlet(g, p, mesh, opts);
        for (size_t i = 0; i < n; ++i) {
            double margin = ug[i] - uf[i];
            if (margin < e.slack) {
                e.slack = margin;
                e.worst_node = static_cast<int>(i);
            }
            if (margin < -kCompareSlack) ++violations;
        }
    }
    e.pass = violations == 0;
    return e;
}

CertificateEntry max_truncation_fuzz(int quadruples, std::uint64_t seed) {
    if (quadruples < 1) throw std::invalid_argument("max_truncation_fuzz: need >= 1 quadruple");
    CertificateEntry e;
    e.name = "max-truncation difference bound";
    e.anchor = "maxineq.fuzz";
    e.slack = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> mag(-3.0, 3.0);
    int violations = 0;
    for (int k = 0; k < quadruples; ++k) {
        double s = std::pow(10.0, mag(rng));
        double a = s * uni(rng), b = s * uni(rng), c = s * uni(rng), d = s * uni(rng);
        double lhs = std::abs(std::max(a, b) - std::max(c, d));
        double rhs = std::max(std::abs(a - c), std::abs(b - d));
        double margin = rhs - lhs;
        e.slack = std::min(e.slack, margin);
        if (margin < 0.0) ++violations;
    }
    e.pass = violations == 0;
    return e;
}

CertificateEntry entry_from_inequality(const CheckedInequality& chk) {
    CertificateEntry e;
    e.name = chk.name;
    e.anchor = "select." + chk.constant;
    e.pass = chk.ok;
    e.worst_node = chk.worst_node;
    e.slack = chk.slack;
    return e;
}

std::string to_text(const CertificateReport& rep, const Mesh& mesh) {
    std::ostringstream os;
    auto echo = [&os](const char* tag,
                      const std::vector<std::pair<std::string, std::string>>& kv) {
        for (const auto& [k, v] : kv) os << "# " << tag << "." << k << " = " << v << "\n";
    };
    echo("config", rep.config_echo);
    echo("mesh", rep.mesh_echo);
    echo("ledger", rep.ledger_echo);
    for (const auto& c : rep.checks) {
        os << c.name << "\t" << c.anchor << "\t" << (c.pass ? "pass" : "fail") << "\t";
        if (c.worst_node >= 0 && c.worst_node < mesh.n)
            os << format_g(mesh.node[static_cast<size_t>(c.worst_node)]);
        else
            os << "-";
        os << "\t" << format_g(c.slack) << "\n";
    }
    return os.str();
}

}  // namespace singsys
