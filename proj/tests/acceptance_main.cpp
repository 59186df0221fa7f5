// Acceptance harness: one line per criterion, "pass" or "fail" plus the
// measured evidence.  Criteria 13 and 14 drive the command-line binary,
// whose path arrives as argv[1]; everything else runs in-process.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "singsys/barriers.hpp"
#include "singsys/csvio.hpp"
#include "singsys/errors.hpp"
#include "singsys/exponents.hpp"
#include "singsys/mesh.hpp"
#include "singsys/plaplace.hpp"
#include "singsys/system_solver.hpp"
#include "singsys/verify.hpp"

using namespace singsys;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// ---- shared golden-problem machinery -------------------------------------

ExponentConfig golden_exponents() { return ExponentConfig{}; }  // shipped defaults

Mesh golden_mesh(int n) { return build_mesh(Mesh::Kind::ball, n, 1.0, 0.05, 3); }

const std::vector<double> kSchedule = {1e-1, 1e-2, 1e-3, 1e-4};

struct GoldenRun {
    Mesh mesh;
    BarrierSet bar;
    ConstantLedger led;
    Problem pb;
};

GoldenRun make_golden(int n) {
    ExponentConfig cfg = golden_exponents();
    SolverOptions opts;
    Mesh mesh = golden_mesh(n);
    BarrierSet bar = solve_auxiliaries(cfg, mesh, opts);
    ConstantLedger led = select_constants(cfg, bar, mesh, kSchedule);
    Problem pb = make_problem(cfg, mesh, bar, led);
    return GoldenRun{std::move(mesh), std::move(bar), std::move(led), std::move(pb)};
}

// ---- criteria -------------------------------------------------------------

Outcome c01_eigen_linear() {
    auto t0 = std::chrono::steady_clock::now();
    Mesh mesh = build_mesh(Mesh::Kind::interval, 1024, 1.0, 0.05);
    EigenPair ep = principal_eigenpair(2.0, mesh, SolverOptions{});
    double dt = seconds_since(t0);
    double err = std::abs(ep.lambda - M_PI * M_PI);
    Outcome o;
    o.pass = err <= 1e-3 && dt < 5.0;
    o.detail = "lambda = " + fmt(ep.lambda) + ", |err| = " + fmt(err) +
               " (tol 1e-3), " + fmt(dt) + " s (limit 5)";
    return o;
}

Outcome c02_eigen_nonlinear() {
    // reference from an independent shooting integration of the p = 3
    // eigenproblem on (0,1): lambda = (p-1) (2 pi / (p sin(pi/p)))^p
    const double reference = 28.288761976002555;
    auto t0 = std::chrono::steady_clock::now();
    Mesh mesh = build_mesh(Mesh::Kind::interval, 1024, 1.0, 0.05);
    EigenPair ep = principal_eigenpair(3.0, mesh, SolverOptions{});
    double dt = seconds_since(t0);
    double rel = std::abs(ep.lambda - reference) / reference;
    Outcome o;
    o.pass = rel <= 1e-3 && dt < 30.0;
    o.detail = "lambda = " + fmt(ep.lambda) + ", rel err = " + fmt(rel) +
               " (tol 1e-3), " + fmt(dt) + " s (limit 30)";
    return o;
}

Outcome c03_manufactured_order() {
    // -u'' = 2 with u = x(1-x): the three-point scheme is exact on
    // quadratics, so the nodal error must sit at solver precision on every
    // grid; a measurable error instead has to contract at second order
    SolverOptions opts;
    std::vector<int> sizes = {128, 256, 512};
    std::vector<double> errs;
    for (int n : sizes) {
        Mesh mesh = build_mesh(Mesh::Kind::interval, n, 1.0, 0.01);
        std::vector<double> f(static_cast<size_t>(n), 2.0);
        std::vector<double> u = solve_dirichlet(f, 2.0, mesh, opts);
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            double x = mesh.node[static_cast<size_t>(i)];
            e = std::max(e, std::abs(u[static_cast<size_t>(i)] - x * (1.0 - x)));
        }
        errs.push_back(e);
    }
    Outcome o;
    double worst = std::max(errs[0], std::max(errs[1], errs[2]));
    if (worst <= 1e-9) {
        o.pass = true;
        o.detail = "errors " + fmt(errs[0]) + " / " + fmt(errs[1]) + " / " + fmt(errs[2]) +
                   ": exact to solver precision on all grids (order vacuously >= 1.8)";
    } else {
        double o1 = std::log2(errs[0] / errs[1]);
        double o2 = std::log2(errs[1] / errs[2]);
        o.pass = o1 >= 1.8 && o2 >= 1.8;
        o.detail = "errors " + fmt(errs[0]) + " / " + fmt(errs[1]) + " / " + fmt(errs[2]) +
                   ", observed orders " + fmt(o1) + ", " + fmt(o2) + " (need >= 1.8)";
    }
    return o;
}

Outcome c04_exponent_gate() {
    ExponentConfig golden = golden_exponents();
    ExponentReport a = check_exponents(golden);

    ExponentConfig big_beta = golden;
    big_beta.beta1 = 1.2;
    ExponentReport b = check_exponents(big_beta);

    ExponentConfig zero_alpha = golden;
    zero_alpha.alpha1 = 0.0;
    ExponentReport c = check_exponents(zero_alpha);

    bool pass_a = a.pass && a.min_slack == 0.5;
    bool beta1_upper_is_one = false;
    for (const auto& chk : a.checks)
        if (chk.name == "beta1_range" && chk.upper == 1.0 && chk.slack == 0.5)
            beta1_upper_is_one = true;

    Outcome o;
    o.pass = pass_a && beta1_upper_is_one && !b.pass && !c.pass;
    o.detail = std::string("golden pass slack ") + fmt(a.min_slack) +
               " (beta1 bound min{1,1.5} = 1), beta1=1.2 " + (b.pass ? "pass" : "fail") +
               ", alpha1=0 " + (c.pass ? "pass" : "fail") +
               " (expected pass 0.5 / fail / fail)";
    return o;
}

Outcome c05_envelope_stability() {
    Outcome o;
    GoldenRun g256 = make_golden(256);   // throws on any certification failure
    GoldenRun g512 = make_golden(512);
    const FittedConstants& a = g256.led.fit;
    const FittedConstants& b = g512.led.fit;
    const std::pair<const char*, std::pair<double, double>> fields[] = {
        {"c0", {a.c0, b.c0}},   {"c1", {a.c1, b.c1}},
        {"c0p", {a.c0p, b.c0p}}, {"c1p", {a.c1p, b.c1p}},
        {"c2", {a.c2, b.c2}},   {"c3", {a.c3, b.c3}},
        {"c2p", {a.c2p, b.c2p}}, {"c3p", {a.c3p, b.c3p}},
        {"l", {a.l, b.l}},      {"M", {a.M, b.M}},
        {"mu", {a.mu, b.mu}}};
    double worst = 0.0;
    const char* worst_name = "";
    for (const auto& [name, pair] : fields) {
        double drift = std::abs(pair.first - pair.second) / std::abs(pair.first);
        if (drift > worst) {
            worst = drift;
            worst_name = name;
        }
    }
    o.pass = worst <= 0.05;
    o.detail = "selection terminated and envelope certified at n=256 and n=512; worst fitted-constant drift " +
               fmt(100.0 * worst) + "% (" + worst_name + ", limit 5%)";
    return o;
}

Outcome c06_monotone_iteration(const GoldenRun& g, SolutionPair& out_pair,
                               MonotoneStats& out_stats) {
    SolverOptions opts;
    opts.max_iter = 500;
    MonotoneStats stats;
    SolutionPair sol = monotone_iterate(g.pb, 1e-2, 1.0, HomotopyVariant::radius_box,
                                        opts, IterateStart::lower, &stats);
    bool inside = true;
    for (size_t i = 0; i < sol.u.size(); ++i) {
        if (sol.u[i] < g.pb.env.u_lo[i] || sol.u[i] > g.pb.env.u_hi[i]) inside = false;
        if (sol.v[i] < g.pb.env.v_lo[i] || sol.v[i] > g.pb.env.v_hi[i]) inside = false;
    }
    Outcome o;
    o.pass = stats.final_diff <= 1e-8 && stats.iterations <= 500 && inside &&
             stats.monotone_every_step;
    o.detail = std::to_string(stats.iterations) + " iterations (limit 500), final diff " +
               fmt(stats.final_diff) + " (tol 1e-8), " + (inside ? "inside" : "OUTSIDE") +
               " the rectangle, " +
               (stats.monotone_every_step ? "nondecreasing at every step"
                                          : "ordering violated");
    out_pair = sol;
    out_stats = stats;
    return o;
}

Outcome c07_symmetry(const SolutionPair& sol) {
    double gap = max_abs_diff(sol.u, sol.v);
    Outcome o;
    o.pass = gap <= 10.0 * SolverOptions{}.newton_tol;
    o.detail = "max |u - v| = " + fmt(gap) + " (limit 10 * tol = 1e-9)";
    return o;
}

Outcome c08_continuation(const GoldenRun& g129) {
    SolverOptions opts;
    ContinuationTrace trace =
        continue_epsilon(g129.pb, kSchedule, opts, ContinuationExtend{1e-6, 0.1, 1e-12});
    bool decreasing = true;
    for (size_t k = 2; k < trace.entries.size(); ++k)
        if (!(trace.entries[k].diff_to_previous < trace.entries[k - 1].diff_to_previous))
            decreasing = false;
    double res = std::max(trace.singular_residual_u, trace.singular_residual_v);

    GoldenRun g256 = make_golden(256);
    GoldenRun g512 = make_golden(512);
    ContinuationTrace t256 =
        continue_epsilon(g256.pb, kSchedule, opts, ContinuationExtend{1e-6, 0.1, 1e-12});
    ContinuationTrace t512 =
        continue_epsilon(g512.pb, kSchedule, opts, ContinuationExtend{1e-6, 0.1, 1e-12});
    auto [lo256, hi256] = boundary_rate(t256.entries.back().sol, g256.mesh);
    auto [lo512, hi512] = boundary_rate(t512.entries.back().sol, g512.mesh);
    double r256 = hi256 / lo256, r512 = hi512 / lo512;
    double drift = std::abs(r256 - r512) / r256;

    Outcome o;
    o.pass = decreasing && res <= 1e-6 && drift <= 0.2;
    o.detail = std::string(decreasing ? "diffs strictly decreasing" : "diffs NOT decreasing") +
               ", singular residual " + fmt(res) + " (tol 1e-6), rate ratio " + fmt(r256) +
               " vs " + fmt(r512) + ", drift " + fmt(100.0 * drift) + "% (limit 20%)";
    return o;
}

Outcome c09_hat_domination(const GoldenRun& g, const SolutionPair& sol) {
    bool strict = true;
    double closest = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < sol.u.size(); ++i) {
        if (!(sol.u[i] < g.pb.env.u_hat[i]) || !(sol.v[i] < g.pb.env.v_hat[i]))
            strict = false;
        closest = std::min(closest, g.pb.env.u_hat[i] - sol.u[i]);
        closest = std::min(closest, g.pb.env.v_hat[i] - sol.v[i]);
    }
    Outcome o;
    o.pass = strict;
    o.detail = std::string(strict ? "u < u_hat and v < v_hat at every interior node"
                                  : "hat domination VIOLATED") +
               ", smallest gap " + fmt(closest);
    return o;
}

Outcome c10_t0_nonexistence(const GoldenRun& g) {
    T0Report rep = verify_no_solution_t0(g.pb, 1e-2, SolverOptions{}, 1);
    Outcome o;
    o.pass = rep.roots_t0 == 0 && rep.roots_t1 >= 1 && rep.monotone_escaped;
    o.detail = "t=0: " + std::to_string(rep.roots_t0) + " roots in " +
               std::to_string(rep.attempts_t0.size()) + " starts (monotone leg " +
               (rep.monotone_escaped ? "escaped the box" : "DID NOT escape") +
               "); t=1 control: " + std::to_string(rep.roots_t1) + " root(s)";
    return o;
}

Outcome c11_truncation_fuzz() {
    CertificateEntry e = max_truncation_fuzz(100000, 2024);
    Outcome o;
    o.pass = e.pass && e.slack >= 0.0;
    o.detail = "100000 quadruples, min margin " + fmt(e.slack) + ", " +
               (e.pass ? "zero violations" : "VIOLATIONS FOUND");
    return o;
}

Outcome c12_comparison_fuzz() {
    SolverOptions opts;
    Mesh mesh = build_mesh(Mesh::Kind::interval, 127, 1.0, 0.05);
    CertificateEntry p2 = comparison_fuzz(2.0, mesh, 100, opts, 2024);
    CertificateEntry p3 = comparison_fuzz(3.0, mesh, 100, opts, 2024);
    Outcome o;
    o.pass = p2.pass && p3.pass && p2.slack >= -1e-10 && p3.slack >= -1e-10;
    o.detail = "100 trials each, min margins p=2: " + fmt(p2.slack) +
               ", p=3: " + fmt(p3.slack) + " (slack floor -1e-10)";
    return o;
}

// ---- CLI-driven criteria ---------------------------------------------------

int run_cli(const std::string& cli, const std::string& args, const std::string& log) {
    std::string cmd = "\"" + cli + "\" " + args + " > \"" + log + "\" 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    if (WIFEXITED(rc)) return WEXITSTATUS(rc);
    return -1;
}

void write_golden_config(const std::string& path) {
    std::ofstream out(path);
    out << "p = 2\nq = 2\nN = 3\n"
        << "alpha1 = -0.5\nbeta1 = 0.5\nalpha2 = 0.5\nbeta2 = -0.5\n"
        << "mesh.kind = ball\nmesh.n = 129\nmesh.L = 1\nmesh.delta = 0.05\n"
        << "solver.tol = 1e-10\nsolver.max_iter = 200\nsolver.damping = 0.5\n"
        << "eps.schedule = 1e-1,1e-2,1e-3,1e-4\nseed = 1\n";
}

Outcome c13_second_solution(const std::string& cli, const fs::path& work) {
    Outcome o;
    fs::path dir = work / "second_run";
    fs::create_directories(dir);
    std::string cfg = (work / "golden.cfg").string();
    int rc_solve = run_cli(cli, "solve --config \"" + cfg + "\" --out \"" + dir.string() + "\"",
                           (work / "c13_solve.log").string());
    if (rc_solve != 0) {
        o.detail = "prerequisite solve exited " + std::to_string(rc_solve);
        return o;
    }
    int rc = run_cli(cli, "second --config \"" + cfg + "\" --out \"" + dir.string() + "\"",
                     (work / "c13_second.log").string());
    if (rc == 0) {
        CsvTable second = read_csv((dir / "second.csv").string());
        double sep = std::strtod(comment_value(second, "second.separation").c_str(), nullptr);
        bool found = comment_value(second, "second.found") == "true";
        o.pass = found && sep > 0.1 && !second.rows.empty();
        o.detail = "second solution found, separation " + fmt(sep) + " (> 0.1 required)";
        return o;
    }
    if (rc == 3) {
        // honest NotFound: diagnostics must be complete (every start of every
        // scheduled eps reported with its outcome)
        CsvTable attempts = read_csv((dir / "attempts.csv").string());
        CsvTable second = read_csv((dir / "second.csv").string());
        int oc = column_index(attempts, "outcome");
        bool outcomes_filled = oc >= 0 && !attempts.rows.empty();
        for (const auto& row : attempts.rows)
            if (row[static_cast<size_t>(oc)].empty()) outcomes_filled = false;
        bool complete = attempts.rows.size() == 32 && outcomes_filled &&
                        comment_value(second, "second.found") == "false";
        o.pass = complete;
        o.detail = "exit 3 (not found) with " + std::to_string(attempts.rows.size()) +
                   " attempt diagnostics across 4 eps values" +
                   (complete ? "" : " [INCOMPLETE]");
        return o;
    }
    o.detail = "cmd_second exited " + std::to_string(rc) + " (expected 0 or 3)";
    return o;
}

Outcome c14_determinism(const std::string& cli, const fs::path& work) {
    Outcome o;
    std::string cfg = (work / "golden.cfg").string();
    fs::path a = work / "det_a", b = work / "det_b";
    fs::create_directories(a);
    fs::create_directories(b);
    int ra = run_cli(cli, "solve --config \"" + cfg + "\" --out \"" + a.string() + "\"",
                     (work / "c14_a.log").string());
    int rb = run_cli(cli, "solve --config \"" + cfg + "\" --out \"" + b.string() + "\"",
                     (work / "c14_b.log").string());
    if (ra != 0 || rb != 0) {
        o.detail = "solve runs exited " + std::to_string(ra) + " / " + std::to_string(rb);
        return o;
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool identical = true;
    std::string diffs;
    for (const char* name : {"solution.csv", "trace.csv", "ledger.csv"}) {
        if (slurp(a / name) != slurp(b / name)) {
            identical = false;
            diffs += std::string(" ") + name;
        }
    }
    o.pass = identical;
    o.detail = identical ? "solution.csv, trace.csv, ledger.csv byte-identical across reruns"
                         : "artifacts differ:" + diffs;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    fs::path work = fs::current_path() / "acceptance_work";
    fs::create_directories(work);
    write_golden_config((work / "golden.cfg").string());

    std::vector<std::pair<std::string, Outcome>> results;
    auto record = [&results](const std::string& label, Outcome o) {
        results.emplace_back(label, std::move(o));
    };

    record("eigen accuracy, linear case", c01_eigen_linear());
    record("eigen accuracy, nonlinear case", c02_eigen_nonlinear());
    record("manufactured-solution convergence", c03_manufactured_order());
    record("exponent gate examples", c04_exponent_gate());

    try {
        record("envelope certification and stability", c05_envelope_stability());
    } catch (const std::exception& ex) {
        record("envelope certification and stability",
               Outcome{false, std::string("threw: ") + ex.what()});
    }

    SolutionPair first;
    MonotoneStats stats;
    try {
        GoldenRun g = make_golden(129);
        record("monotone iteration", c06_monotone_iteration(g, first, stats));
        record("symmetry of the golden pair", c07_symmetry(first));
        record("eps continuation and boundary rate", c08_continuation(g));
        record("hat domination", c09_hat_domination(g, first));
        record("t=0 nonexistence harness", c10_t0_nonexistence(g));
    } catch (const std::exception& ex) {
        Outcome failed{false, std::string("golden pipeline threw: ") + ex.what()};
        while (results.size() < 9) results.emplace_back("golden pipeline", failed);
        record("t=0 nonexistence harness", failed);
    }

    record("max-truncation inequality fuzz", c11_truncation_fuzz());
    record("comparison principle fuzz", c12_comparison_fuzz());

    if (cli.empty()) {
        Outcome no_cli{false, "no CLI path supplied as argv[1]"};
        record("second-solution search", no_cli);
        record("artifact determinism", no_cli);
    } else {
        try {
            record("second-solution search", c13_second_solution(cli, work));
        } catch (const std::exception& ex) {
            record("second-solution search", Outcome{false, std::string("threw: ") + ex.what()});
        }
        try {
            record("artifact determinism", c14_determinism(cli, work));
        } catch (const std::exception& ex) {
            record("artifact determinism", Outcome{false, std::string("threw: ") + ex.what()});
        }
    }

    int passed = 0;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& [label, o] = results[i];
        std::printf("criterion %02zu [%s]: %s (%s)\n", i + 1, label.c_str(),
                    o.pass ? "pass" : "fail", o.detail.c_str());
        if (o.pass) ++passed;
    }
    std::printf("RESULT: %d/%zu criteria pass\n", passed, results.size());
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}
