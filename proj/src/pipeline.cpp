#include "singsys/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singsys/barriers.hpp"
#include "singsys/csvio.hpp"
#include "singsys/errors.hpp"
#include "singsys/system_solver.hpp"
#include "singsys/verify.hpp"

namespace singsys {

namespace {

namespace fs = std::filesystem;

constexpr double kResidualTarget = 1e-6;  // interior residual goal for the
                                          // unregularized system
constexpr int kFuzzTrials = 25;           // per-operator comparison trials
constexpr int kFuzzQuadruples = 100000;   // truncation inequality samples

std::string num(double x) { return format_number(x); }

std::string joined_path(const std::string& dir, const std::string& file) {
    return (fs::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

// "# config.p = 2" style header block shared by every artifact.
std::vector<std::string> artifact_comments(const RunConfig& cfg) {
    std::vector<std::string> out;
    out.push_back(std::string("artifact.version = ") + kArtifactVersion);
    for (const auto& [k, v] : echo_config(cfg)) out.push_back("config." + k + " = " + v);
    return out;
}

std::vector<std::pair<std::string, std::string>> mesh_echo_pairs(const Mesh& mesh) {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("kind", mesh.kind == Mesh::Kind::ball ? "ball" : "interval");
    out.emplace_back("n", std::to_string(mesh.n));
    out.emplace_back("L", num(mesh.length));
    out.emplace_back("delta", num(mesh.delta));
    out.emplace_back("h", num(mesh.h));
    return out;
}

std::vector<std::pair<std::string, std::string>> ledger_echo_pairs(const BarrierSet& bar,
                                                                   const ConstantLedger& led) {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("lambda_p", num(bar.eigen_p.lambda));
    out.emplace_back("lambda_q", num(bar.eigen_q.lambda));
    out.emplace_back("C", num(led.C));
    out.emplace_back("Lambda", num(led.Lambda));
    out.emplace_back("R", num(led.R));
    out.emplace_back("rho", num(led.rho));
    out.emplace_back("m", num(led.m));
    out.emplace_back("eta", num(led.eta));
    return out;
}

void append_gate_entries(const ExponentReport& gate, std::vector<CertificateEntry>& checks) {
    for (const auto& c : gate.checks) {
        CertificateEntry e;
        e.name = "exponent range " + c.name;
        e.anchor = "gate." + c.name;
        e.pass = c.ok;
        e.worst_node = -1;
        e.slack = c.slack;
        checks.push_back(e);
    }
}

CertificateEntry bound_entry(const std::string& name, const std::string& anchor,
                             double value, double bound) {
    CertificateEntry e;
    e.name = name + " = " + num(value) + " (bound " + num(bound) + ")";
    e.anchor = anchor;
    e.slack = bound - value;
    e.pass = std::isfinite(value) && value <= bound;
    return e;
}

CertificateEntry rate_entry(double k_lo, double k_hi) {
    CertificateEntry e;
    e.name = "boundary growth rate in [" + num(k_lo) + ", " + num(k_hi) + "]";
    e.anchor = "rate.boundary";
    e.slack = k_lo;
    e.pass = k_lo > 0.0 && std::isfinite(k_hi);
    return e;
}

// Certificate checks shared by cmd_solve and cmd_certify: ledger families,
// rectangle containment, unregularized interior residual, boundary rate and
// the two fuzz suites.
void append_solution_checks(const RunConfig& cfg, const Problem& pb,
                            const SolutionPair& pair, CertificateReport& rep) {
    for (const auto& chk : pb.led.checks) rep.checks.push_back(entry_from_inequality(chk));
    for (auto& e : check_rectangle(pair, pb.env)) rep.checks.push_back(e);

    SolutionPair singular = pair;
    singular.eps = 0.0;
    auto [ru, rv] = weak_residual(singular, cfg.exponents, pb.mesh);
    rep.checks.push_back(
        bound_entry("interior residual u", "residual.singular.u", ru, kResidualTarget));
    rep.checks.push_back(
        bound_entry("interior residual v", "residual.singular.v", rv, kResidualTarget));

    auto [k_lo, k_hi] = boundary_rate(pair, pb.mesh);
    rep.checks.push_back(rate_entry(k_lo, k_hi));

    rep.checks.push_back(
        comparison_fuzz(cfg.exponents.p, pb.mesh, kFuzzTrials, cfg.solver, cfg.seed));
    if (cfg.exponents.q != cfg.exponents.p)
        rep.checks.push_back(
            comparison_fuzz(cfg.exponents.q, pb.mesh, kFuzzTrials, cfg.solver, cfg.seed));
    rep.checks.push_back(max_truncation_fuzz(kFuzzQuadruples, cfg.seed));
}

bool all_pass(const CertificateReport& rep) {
    for (const auto& c : rep.checks)
        if (!c.pass) return false;
    return true;
}

// certificate.txt = echoes + one line per check + a final RESULT line, which
// doubles as the FAILED marker for partial runs.
void write_certificate(const std::string& dir, const CertificateReport& rep,
                       const Mesh& mesh, const std::string& failed_stage,
                       const std::string& failed_message) {
    std::string path = joined_path(dir, "certificate.txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot create " + path);
    out << "# artifact.version = " << kArtifactVersion << "\n";
    out << to_text(rep, mesh);
    if (failed_stage.empty())
        out << "RESULT\t" << (all_pass(rep) ? "pass" : "fail") << "\n";
    else
        out << "RESULT\tFAILED\tstage=" << failed_stage << "\t" << failed_message << "\n";
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_ledger_csv(const RunConfig& cfg, const BarrierSet& bar,
                      const ConstantLedger& led) {
    CsvTable t;
    t.comments = artifact_comments(cfg);
    t.columns = {"constant", "value", "slack"};
    auto family_slack = [&led](const std::string& constant) {
        double worst = std::numeric_limits<double>::infinity();
        bool any = false;
        for (const auto& c : led.checks)
            if (c.constant == constant) {
                worst = std::min(worst, c.slack);
                any = true;
            }
        return any ? worst : std::numeric_limits<double>::quiet_NaN();
    };
    const std::pair<const char*, double> scalars[] = {
        {"C", led.C}, {"Lambda", led.Lambda}, {"R", led.R},
        {"rho", led.rho}, {"m", led.m}, {"eta", led.eta}};
    for (const auto& [name, value] : scalars)
        add_row(t, {name, num(value), num(family_slack(name))});
    const std::pair<const char*, double> derived[] = {
        {"lambda_p", bar.eigen_p.lambda}, {"lambda_q", bar.eigen_q.lambda},
        {"fit.c0", led.fit.c0},   {"fit.c1", led.fit.c1},
        {"fit.c0p", led.fit.c0p}, {"fit.c1p", led.fit.c1p},
        {"fit.c2", led.fit.c2},   {"fit.c3", led.fit.c3},
        {"fit.c2p", led.fit.c2p}, {"fit.c3p", led.fit.c3p},
        {"fit.l", led.fit.l},     {"fit.M", led.fit.M},
        {"fit.mu", led.fit.mu}};
    for (const auto& [name, value] : derived) add_row(t, {name, num(value), "nan"});
    write_csv(joined_path(cfg.output_dir, "ledger.csv"), t);
}

void write_trace_csv(const RunConfig& cfg, const ContinuationTrace& trace) {
    CsvTable t;
    t.comments = artifact_comments(cfg);
    t.comments.push_back("residual.singular.u = " + num(trace.singular_residual_u));
    t.comments.push_back("residual.singular.v = " + num(trace.singular_residual_v));
    t.columns = {"eps", "diff", "residual_u", "residual_v", "iters"};
    for (const auto& e : trace.entries)
        add_row(t, {num(e.eps), num(e.diff_to_previous), num(e.sol.residual_u),
                    num(e.sol.residual_v), std::to_string(e.sol.iterations)});
    write_csv(joined_path(cfg.output_dir, "trace.csv"), t);
}

void write_solution_csv(const RunConfig& cfg, const Mesh& mesh, const Envelope& env,
                        const SolutionPair& pair) {
    CsvTable t;
    t.comments = artifact_comments(cfg);
    t.comments.push_back("eps.final = " + num(pair.eps));
    t.comments.push_back("residual.u = " + num(pair.residual_u));
    t.comments.push_back("residual.v = " + num(pair.residual_v));
    t.columns = {"node", "u", "v", "u_lo", "u_hi", "u_hat", "d"};
    for (int i = 0; i < mesh.n; ++i) {
        size_t k = static_cast<size_t>(i);
        add_row(t, {num(mesh.node[k]), num(pair.u[k]), num(pair.v[k]), num(env.u_lo[k]),
                    num(env.u_hi[k]), num(env.u_hat[k]), num(mesh.distance(i))});
    }
    write_csv(joined_path(cfg.output_dir, "solution.csv"), t);
}

}  // namespace

int cmd_eigen(const RunConfig& cfg) {
    try {
        ensure_dir(cfg.output_dir);
        Mesh mesh = make_mesh(cfg);
        EigenPair ep = principal_eigenpair(cfg.exponents.p, mesh, cfg.solver);
        EigenPair eq = cfg.exponents.q == cfg.exponents.p
                           ? ep
                           : principal_eigenpair(cfg.exponents.q, mesh, cfg.solver);

        CsvTable t;
        t.comments = artifact_comments(cfg);
        t.comments.push_back("lambda_p = " + num(ep.lambda));
        t.comments.push_back("lambda_q = " + num(eq.lambda));
        t.columns = {"node_coordinate", "phi_p", "phi_q"};
        for (int i = 0; i < mesh.n; ++i) {
            size_t k = static_cast<size_t>(i);
            add_row(t, {num(mesh.node[k]), num(ep.phi[k]), num(eq.phi[k])});
        }
        write_csv(joined_path(cfg.output_dir, "eigen.csv"), t);
        std::cout << "lambda_p = " << num(ep.lambda) << "\n"
                  << "lambda_q = " << num(eq.lambda) << "\n";
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "eigen stage failed: " << ex.what() << "\n";
        return 2;
    }
}

int cmd_solve(const RunConfig& cfg) {
    std::string stage = "setup";
    CertificateReport rep;
    rep.config_echo = echo_config(cfg);
    std::optional<Mesh> mesh;
    std::optional<BarrierSet> bar;
    std::optional<ConstantLedger> led;
    try {
        ensure_dir(cfg.output_dir);
        mesh.emplace(make_mesh(cfg));
        rep.mesh_echo = mesh_echo_pairs(*mesh);

        stage = "exponent_gate";
        ExponentReport gate = check_exponents(cfg.exponents);
        append_gate_entries(gate, rep.checks);
        if (!gate.pass)
            throw solver_error("admissibility ranges violated, worst slack " +
                               num(gate.min_slack));
        std::cout << "exponent gate: pass (min slack " << num(gate.min_slack) << ")\n";

        stage = "auxiliaries";
        bar.emplace(solve_auxiliaries(cfg.exponents, *mesh, cfg.solver));
        std::cout << "auxiliary fields: solved (lambda_p = " << num(bar->eigen_p.lambda)
                  << ", lambda_q = " << num(bar->eigen_q.lambda) << ")\n";

        stage = "constants";
        led.emplace(select_constants(cfg.exponents, *bar, *mesh, cfg.eps_schedule));
        rep.ledger_echo = ledger_echo_pairs(*bar, *led);
        std::cout << "constants: C = " << num(led->C) << ", Lambda = " << num(led->Lambda)
                  << ", R = " << num(led->R) << ", rho = " << num(led->rho)
                  << ", m = " << num(led->m) << ", eta = " << num(led->eta) << "\n";

        stage = "envelope";
        Problem pb = make_problem(cfg.exponents, *mesh, *bar, *led);

        stage = "continuation";
        ContinuationTrace trace = continue_epsilon(
            pb, cfg.eps_schedule, cfg.solver,
            ContinuationExtend{kResidualTarget, 0.1, 1e-12});
        const SolutionPair& final_pair = trace.entries.back().sol;
        std::cout << "continuation: " << trace.entries.size() << " steps to eps = "
                  << num(final_pair.eps) << ", singular residual ("
                  << num(trace.singular_residual_u) << ", "
                  << num(trace.singular_residual_v) << ")\n";

        stage = "certificates";
        append_solution_checks(cfg, pb, final_pair, rep);

        stage = "artifacts";
        write_ledger_csv(cfg, *bar, *led);
        write_trace_csv(cfg, trace);
        write_solution_csv(cfg, *mesh, pb.env, final_pair);
        write_certificate(cfg.output_dir, rep, *mesh, "", "");

        int failed = 0;
        for (const auto& c : rep.checks)
            if (!c.pass) ++failed;
        if (failed) {
            std::cerr << failed << " certificate check(s) failed, see certificate.txt\n";
            return 2;
        }
        std::cout << "certificates: " << rep.checks.size() << " checks, all pass\n";
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "solve stage '" << stage << "' failed: " << ex.what() << "\n";
        // flush whatever exists so the failure is inspectable
        try {
            if (mesh) {
                if (bar && led) write_ledger_csv(cfg, *bar, *led);
                write_certificate(cfg.output_dir, rep, *mesh, stage, ex.what());
            }
        } catch (...) {
        }
        return 2;
    }
}

int cmd_second(const RunConfig& cfg) {
    if (!fs::exists(joined_path(cfg.output_dir, "solution.csv"))) {
        std::cerr << "run solve first: no solution.csv in " << cfg.output_dir << "\n";
        return 1;
    }
    try {
        Mesh mesh = make_mesh(cfg);
        ExponentReport gate = check_exponents(cfg.exponents);
        if (!gate.pass) {
            std::cerr << "exponent gate rejects this configuration\n";
            return 2;
        }
        BarrierSet bar = solve_auxiliaries(cfg.exponents, mesh, cfg.solver);
        ConstantLedger led = select_constants(cfg.exponents, bar, mesh, cfg.eps_schedule);
        Problem pb = make_problem(cfg.exponents, mesh, bar, led);
        ContinuationTrace trace = continue_epsilon(pb, cfg.eps_schedule, cfg.solver);

        CsvTable attempts;
        attempts.comments = artifact_comments(cfg);
        attempts.columns = {"eps",       "start",    "iterations",  "final_residual",
                            "separation", "converged", "positive",   "outside_hat",
                            "inside_radius", "outcome"};
        SecondSearchResult at_final;
        for (size_t k = 0; k < cfg.eps_schedule.size(); ++k) {
            double eps = cfg.eps_schedule[k];
            SecondSearchResult res = find_second_solution(pb, trace.entries[k].sol, eps,
                                                          cfg.solver, cfg.seed);
            for (const auto& a : res.attempts)
                add_row(attempts,
                        {num(eps), a.start, std::to_string(a.iterations),
                         num(a.final_residual), num(a.separation),
                         a.converged ? "1" : "0", a.positive ? "1" : "0",
                         a.outside_hat ? "1" : "0", a.inside_radius ? "1" : "0",
                         a.outcome});
            std::cout << "eps = " << num(eps) << ": "
                      << (res.found ? "second solution found" : "no second solution")
                      << " (" << res.attempts.size() << " attempts)\n";
            if (k + 1 == cfg.eps_schedule.size()) at_final = std::move(res);
        }
        write_csv(joined_path(cfg.output_dir, "attempts.csv"), attempts);

        CsvTable second;
        second.comments = artifact_comments(cfg);
        second.comments.push_back(std::string("second.found = ") +
                                  (at_final.found ? "true" : "false"));
        second.comments.push_back("second.eps = " + num(cfg.eps_schedule.back()));
        second.columns = {"node", "u2", "v2", "d"};
        if (at_final.found) {
            double separation = 0.0;
            for (const auto& a : at_final.attempts)
                if (a.outcome == "second_solution") separation = a.separation;
            second.comments.push_back("second.separation = " + num(separation));
            second.comments.push_back("second.residual.u = " + num(at_final.pair.residual_u));
            second.comments.push_back("second.residual.v = " + num(at_final.pair.residual_v));
            for (int i = 0; i < mesh.n; ++i) {
                size_t k = static_cast<size_t>(i);
                add_row(second, {num(mesh.node[k]), num(at_final.pair.u[k]),
                                 num(at_final.pair.v[k]), num(mesh.distance(i))});
            }
        }
        write_csv(joined_path(cfg.output_dir, "second.csv"), second);

        if (at_final.found) {
            std::cout << "second solution certified outside the hat rectangle at eps = "
                      << num(cfg.eps_schedule.back()) << "\n";
            return 0;
        }
        std::cerr << "no second solution at the final eps; attempt diagnostics in "
                  << joined_path(cfg.output_dir, "attempts.csv") << "\n";
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "second-solution search failed: " << ex.what() << "\n";
        return 2;
    }
}

int cmd_certify(const RunConfig& cfg) {
    std::string solution_path = joined_path(cfg.output_dir, "solution.csv");
    if (!fs::exists(solution_path)) {
        std::cerr << "run solve first: no solution.csv in " << cfg.output_dir << "\n";
        return 1;
    }
    try {
        CsvTable stored = read_csv(solution_path);
        Mesh mesh = make_mesh(cfg);
        if (static_cast<int>(stored.rows.size()) != mesh.n)
            throw std::runtime_error("stored solution has " +
                                     std::to_string(stored.rows.size()) +
                                     " rows but the mesh has " + std::to_string(mesh.n));
        int cu = column_index(stored, "u"), cv = column_index(stored, "v");
        if (cu < 0 || cv < 0) throw std::runtime_error("solution.csv lacks u/v columns");

        SolutionPair pair;
        pair.u.resize(static_cast<size_t>(mesh.n));
        pair.v.resize(static_cast<size_t>(mesh.n));
        for (int i = 0; i < mesh.n; ++i) {
            pair.u[static_cast<size_t>(i)] = cell_number(stored, static_cast<size_t>(i), cu);
            pair.v[static_cast<size_t>(i)] = cell_number(stored, static_cast<size_t>(i), cv);
        }
        std::string eps_text = comment_value(stored, "eps.final");
        pair.eps = eps_text.empty() ? 0.0 : std::strtod(eps_text.c_str(), nullptr);

        CertificateReport rep;
        rep.config_echo = echo_config(cfg);
        rep.mesh_echo = mesh_echo_pairs(mesh);
        ExponentReport gate = check_exponents(cfg.exponents);
        append_gate_entries(gate, rep.checks);
        if (!gate.pass) {
            write_certificate(cfg.output_dir, rep, mesh, "exponent_gate",
                              "admissibility ranges violated");
            std::cerr << "exponent gate rejects this configuration\n";
            return 2;
        }
        BarrierSet bar = solve_auxiliaries(cfg.exponents, mesh, cfg.solver);
        ConstantLedger led = select_constants(cfg.exponents, bar, mesh, cfg.eps_schedule);
        rep.ledger_echo = ledger_echo_pairs(bar, led);
        Problem pb = make_problem(cfg.exponents, mesh, bar, led);
        append_solution_checks(cfg, pb, pair, rep);
        write_certificate(cfg.output_dir, rep, mesh, "", "");

        int failed = 0;
        for (const auto& c : rep.checks)
            if (!c.pass) ++failed;
        if (failed) {
            std::cerr << failed << " certificate check(s) failed, see certificate.txt\n";
            return 2;
        }
        std::cout << "certificates: " << rep.checks.size() << " checks, all pass\n";
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "certify failed: " << ex.what() << "\n";
        return 2;
    }
}

}  // namespace singsys
