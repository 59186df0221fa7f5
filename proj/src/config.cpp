#include "singsys/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace singsys {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Whole-token numeric parses; anything trailing is an error so that
// "mesh.n = 129 extra" cannot slip through.
double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& text) {
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size())
            throw config_error(origin, line, key + ": trailing characters in '" + text + "'");
        return v;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        throw config_error(origin, line, key + ": expected a number, got '" + text + "'");
    }
}

long long parse_int(const std::string& origin, int line, const std::string& key,
                    const std::string& text) {
    try {
        size_t pos = 0;
        long long v = std::stoll(text, &pos);
        if (pos != text.size())
            throw config_error(origin, line, key + ": trailing characters in '" + text + "'");
        return v;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        throw config_error(origin, line, key + ": expected an integer, got '" + text + "'");
    }
}

std::vector<double> parse_schedule(const std::string& origin, int line,
                                   const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw config_error(origin, line, "eps.schedule: empty entry");
        out.push_back(parse_double(origin, line, "eps.schedule", item));
    }
    if (out.empty())
        throw config_error(origin, line, "eps.schedule: no entries");
    return out;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw;
        size_t hash = text.find('#');
        if (hash != std::string::npos) text.erase(hash);
        text = trim(text);
        if (text.empty()) continue;

        size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw config_error(origin, line, "expected 'key = value', got '" + text + "'");
        std::string key = trim(text.substr(0, eq));
        std::string val = trim(text.substr(eq + 1));
        if (key.empty()) throw config_error(origin, line, "empty key");
        if (val.empty()) throw config_error(origin, line, key + ": empty value");
        if (!seen.insert(key).second)
            throw config_error(origin, line, "duplicate key '" + key + "'");

        if (key == "p") {
            cfg.exponents.p = parse_double(origin, line, key, val);
        } else if (key == "q") {
            cfg.exponents.q = parse_double(origin, line, key, val);
        } else if (key == "N") {
            long long n = parse_int(origin, line, key, val);
            if (n < 1) throw config_error(origin, line, "N must be positive");
            cfg.exponents.N = static_cast<int>(n);
        } else if (key == "alpha1") {
            cfg.exponents.alpha1 = parse_double(origin, line, key, val);
        } else if (key == "beta1") {
            cfg.exponents.beta1 = parse_double(origin, line, key, val);
        } else if (key == "alpha2") {
            cfg.exponents.alpha2 = parse_double(origin, line, key, val);
        } else if (key == "beta2") {
            cfg.exponents.beta2 = parse_double(origin, line, key, val);
        } else if (key == "mesh.kind") {
            if (val != "interval" && val != "ball")
                throw config_error(origin, line,
                                   "mesh.kind must be 'interval' or 'ball', got '" + val + "'");
            cfg.mesh_kind = val;
        } else if (key == "mesh.n") {
            long long n = parse_int(origin, line, key, val);
            if (n < 3) throw config_error(origin, line, "mesh.n must be at least 3");
            cfg.mesh_n = static_cast<int>(n);
        } else if (key == "mesh.L") {
            cfg.mesh_L = parse_double(origin, line, key, val);
            if (!(cfg.mesh_L > 0)) throw config_error(origin, line, "mesh.L must be positive");
        } else if (key == "mesh.delta") {
            cfg.mesh_delta = parse_double(origin, line, key, val);
            if (!(cfg.mesh_delta > 0))
                throw config_error(origin, line, "mesh.delta must be positive");
        } else if (key == "solver.tol") {
            cfg.solver.newton_tol = parse_double(origin, line, key, val);
            if (!(cfg.solver.newton_tol > 0))
                throw config_error(origin, line, "solver.tol must be positive");
        } else if (key == "solver.max_iter") {
            long long n = parse_int(origin, line, key, val);
            if (n < 1) throw config_error(origin, line, "solver.max_iter must be positive");
            cfg.solver.max_iter = static_cast<int>(n);
        } else if (key == "solver.damping") {
            cfg.solver.damping = parse_double(origin, line, key, val);
            if (!(cfg.solver.damping > 0 && cfg.solver.damping <= 1))
                throw config_error(origin, line, "solver.damping must lie in (0, 1]");
        } else if (key == "eps.schedule") {
            cfg.eps_schedule = parse_schedule(origin, line, val);
        } else if (key == "seed") {
            long long s = parse_int(origin, line, key, val);
            if (s < 0) throw config_error(origin, line, "seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else {
            throw config_error(origin, line, "unknown key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error(path, 0, "cannot open config file");
    return parse_config(in, path);
}

Mesh make_mesh(const RunConfig& cfg) {
    Mesh::Kind kind = cfg.mesh_kind == "ball" ? Mesh::Kind::ball : Mesh::Kind::interval;
    int dim = kind == Mesh::Kind::ball ? cfg.exponents.N : 0;
    return build_mesh(kind, cfg.mesh_n, cfg.mesh_L, cfg.delta(), dim);
}

std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("p", fmt(cfg.exponents.p));
    out.emplace_back("q", fmt(cfg.exponents.q));
    out.emplace_back("N", std::to_string(cfg.exponents.N));
    out.emplace_back("alpha1", fmt(cfg.exponents.alpha1));
    out.emplace_back("beta1", fmt(cfg.exponents.beta1));
    out.emplace_back("alpha2", fmt(cfg.exponents.alpha2));
    out.emplace_back("beta2", fmt(cfg.exponents.beta2));
    out.emplace_back("mesh.kind", cfg.mesh_kind);
    out.emplace_back("mesh.n", std::to_string(cfg.mesh_n));
    out.emplace_back("mesh.L", fmt(cfg.mesh_L));
    out.emplace_back("mesh.delta", fmt(cfg.delta()));
    out.emplace_back("solver.tol", fmt(cfg.solver.newton_tol));
    out.emplace_back("solver.max_iter", std::to_string(cfg.solver.max_iter));
    out.emplace_back("solver.damping", fmt(cfg.solver.damping));
    std::string sched;
    for (size_t i = 0; i < cfg.eps_schedule.size(); ++i) {
        if (i) sched += ',';
        sched += fmt(cfg.eps_schedule[i]);
    }
    out.emplace_back("eps.schedule", sched);
    out.emplace_back("seed", std::to_string(cfg.seed));
    return out;
}

}  // namespace singsys
