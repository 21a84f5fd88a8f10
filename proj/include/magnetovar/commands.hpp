#pragma once

#include <cstdlib>
#include <iostream>
#include <thread>

#include "energy.hpp"
#include "io.hpp"
#include "kernel_fields.hpp"
#include "minimize.hpp"
#include "run_config.hpp"
#include "thin_shell.hpp"

namespace magnetovar {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitIo = 4,
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"validate", "demag", "solve", "shell-study", "oracle"};
    return names;
}

// Worker cap from MAGNETOVAR_THREADS; hardware concurrency when unset.
inline unsigned threads_from_env() {
    const char* v = std::getenv("MAGNETOVAR_THREADS");
    if (!v || !*v) return std::max(1u, std::thread::hardware_concurrency());
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError(std::string("MAGNETOVAR_THREADS must be a positive integer, got `") + v + "`");
    return static_cast<unsigned>(n);
}

struct CommandContext {
    RunConfig cfg;
    OutputDir out;
    unsigned threads = 1;
    std::ostream* log = &std::cout;
    std::ostream* warn = &std::cerr;
};

namespace detail {

struct Problem {
    GridSpec grid;
    DomainMask mask;
};

inline Problem make_problem(const RunConfig& c) {
    Problem p;
    p.grid = grid_for(c.geometry, c.cells_across, c.solver);
    p.mask = build_mask(c.geometry, p.grid);
    if (p.mask.count == 0) throw ConfigError("geometry covers no cells at this resolution");
    return p;
}

// One row of the validate table. `upper` checks value <= threshold,
// otherwise value >= threshold.
struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool upper = true;
    bool pass() const { return upper ? value <= threshold : value >= threshold; }
};

inline std::vector<Check> structural_checks(const GridSpec& g, std::uint64_t seed, int samples) {
    double adj = 0, curl_adj = 0, div_curl = 0, curl_grad = 0, split = 0;
    for (int s = 0; s < samples; ++s) {
        const std::uint64_t base = seed * 1000 + 10 * s;
        const ScalarField u = random_scalar(base, g), p = random_scalar(base + 1, g, Location::Node);
        const VectorField w = random_vector(base + 2, g), e = random_vector(base + 3, g, Staggering::Edge);
        adj = std::max(adj, std::abs(inner(grad(u), w) + inner(u, div(w))) * g.h / (norm(u) * norm(w)));
        adj = std::max(adj, std::abs(inner(grad(p), e) + inner(p, div(e))) * g.h / (norm(p) * norm(e)));
        curl_adj = std::max(curl_adj, std::abs(inner(curl(e), w) - inner(e, curl(w))) * g.h / (norm(e) * norm(w)));
        div_curl = std::max({div_curl, norm(div(curl(e))) * g.h * g.h / norm(e),
                             norm(div(curl(w))) * g.h * g.h / norm(w)});
        curl_grad = std::max({curl_grad, norm(curl(grad(u))) * g.h * g.h / norm(u),
                              norm(curl(grad(p))) * g.h * g.h / norm(p)});
        for (const VectorField* v : {&w, &e}) {
            const double dv = full_gradient_norm2(*v);
            const ScalarField d = div(*v);
            const VectorField c = curl(*v);
            split = std::max(split, std::abs(dv - inner(d, d) - inner(c, c)) / dv);
        }
    }
    return {{"grad_div_adjoint", adj, 1e-12},
            {"curl_self_adjoint", curl_adj, 1e-12},
            {"div_curl_zero", div_curl, 1e-12},
            {"curl_grad_zero", curl_grad, 1e-12},
            {"full_gradient_split", split, 1e-10}};
}

inline std::vector<Check> solver_checks(const Problem& pb, const SolverConfig& cfg, std::uint64_t seed,
                                        int samples) {
    // thresholds are set for tol = 1e-8 and loosen in proportion above it
    const double scale = std::max(1.0, cfg.tol / 1e-8);
    double three_way = 0, gauge = 0, orth = 0, recip = 0, rq_min = 1, rq_max = 0;
    for (int s = 0; s < samples; ++s) {
        const std::uint64_t base = seed * 1000 + 10 * s;
        const VectorField m = random_masked(base + 5, pb.mask), mp = random_masked(base + 6, pb.mask);
        const StrayFieldSolution su = solve_scalar_potential(m, pb.mask, cfg);
        const VectorPotentialSolution un = solve_vector_potential_unconstrained(m, pb.mask, cfg);
        const VectorPotentialSolution ga = solve_vector_potential_gauged(m, pb.mask, cfg);
        three_way = std::max({three_way, detail::relative_gap(su.energy, un.energy), detail::relative_gap(su.energy, ga.energy),
                              detail::relative_gap(un.energy, ga.energy)});
        gauge = std::max({gauge, un.div_norm / norm(un.curl_a), ga.div_norm / norm(ga.curl_a)});
        orth = std::max(orth, helmholtz(m, su, un).orthogonality_defect);
        recip = std::max(recip, reciprocity_gap(m, mp, pb.mask, cfg));
        const double q = rayleigh_quotient(m, pb.mask, cfg);
        rq_min = std::min(rq_min, q);
        rq_max = std::max(rq_max, q);
    }

    // kernel and range on a fixed h = 1/24 cube, independent of the configured grid
    const GridSpec kg = cube_grid(48, 1.0, 4);
    const DomainMask kmask = build_mask(Box{{2, 2, 2}, {}}, kg);
    TestFieldSpec spec;
    spec.radius = 0.9;
    spec.xi.constant = {0.3, -0.2, 1.0};
    spec.xi.sym[0][1] = 0.5;
    spec.kind = TestFieldKind::SolenoidalBump;
    const double kernel = rayleigh_quotient(make_test_field(spec, kg), kmask, cfg);
    spec.kind = TestFieldKind::GradientBump;
    const double range = rayleigh_quotient(make_test_field(spec, kg), kmask, cfg);

    return {{"three_way_energy", three_way, std::max(1e-5, cfg.agreement())},
            {"gauge_div_ratio", gauge, 1e-6 * scale},
            {"helmholtz_orthogonality", orth, 1e-5 * scale},
            {"reciprocity_gap", recip, 1e-6 * scale},
            {"rayleigh_min", rq_min, -1e-6 * scale, false},
            {"rayleigh_max", rq_max, 1 + 1e-6 * scale},
            {"solenoidal_kernel", kernel, 1e-4},
            {"gradient_saturation", range, 1 - 1e-4, false}};
}

}  // namespace detail

inline int cmd_validate(CommandContext& ctx) {
    const RunConfig& c = ctx.cfg;
    const detail::Problem pb = detail::make_problem(c);
    std::vector<detail::Check> checks = detail::structural_checks(pb.grid, c.seed, c.validate_samples);
    const bool loose = c.solver.tol > 1e-2;
    if (loose) {
        *ctx.warn << "warning: solver.tol = " << c.solver.tol
                  << " is looser than 1e-2; only structural checks are run\n";
    } else {
        c.solver.validate();
        auto more = detail::solver_checks(pb, c.solver, c.seed, c.validate_samples);
        checks.insert(checks.end(), more.begin(), more.end());
    }

    CsvTable t({"check", "value", "threshold", "status"});
    bool ok = true;
    for (const auto& ch : checks) {
        t.add_row({ch.name, format_number(ch.value), format_number(ch.threshold), ch.pass() ? "pass" : "fail"});
        if (!ch.pass()) {
            ok = false;
            *ctx.warn << "FAILED check " << ch.name << ": " << ch.value << (ch.upper ? " > " : " < ") << ch.threshold
                      << "\n";
        }
    }
    if (loose) t.add_row({"solver_tolerance", format_number(c.solver.tol), format_number(1e-2), "warn"});
    ctx.out.write("validate.csv", t.str());
    *ctx.log << "validate: " << checks.size() << " checks, " << (ok ? "all passed" : "FAILURES") << " ("
             << pb.mask.count << " cells)\n";
    return ok ? kExitOk : kExitValidation;
}

inline int cmd_demag(CommandContext& ctx) {
    const RunConfig& c = ctx.cfg;
    const Ellipsoid* ell = std::get_if<Ellipsoid>(&c.geometry);
    if (!ell) throw ConfigError("demag needs geometry.kind = ellipsoid");
    c.solver.validate();
    const Mat3 n = demag_tensor(*ell, grid_for(c.geometry, c.cells_across, c.solver), c.solver);
    const double trace = n[0][0] + n[1][1] + n[2][2];
    CsvTable t({"row", "x", "y", "z", "trace"});
    const char* rows[3] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i)
        t.add_row({rows[i], format_number(n[i][0]), format_number(n[i][1]), format_number(n[i][2]),
                   format_number(trace)});
    ctx.out.write("demag.csv", t.str());
    *ctx.log << "demag: diagonal " << n[0][0] << " " << n[1][1] << " " << n[2][2] << ", trace " << trace << "\n";
    return kExitOk;
}

inline int cmd_solve(CommandContext& ctx) {
    const RunConfig& c = ctx.cfg;
    c.solver.validate();
    const detail::Problem pb = detail::make_problem(c);
    const CellVectorField m0 =
        c.random_init ? random_unit_field(c.seed, pb.mask) : uniform_field(pb.mask, normalized(c.init_direction));
    CellVectorField m;
    MinimizeReport rep;
    if (c.minimize.method == MinimizeMethod::JointAlternating) {
        auto res = minimize_joint(m0, VectorField(pb.grid, Staggering::Edge), c.material, pb.mask, c.minimize,
                                  c.solver, c.terms);
        m = std::move(std::get<0>(res));
        rep = std::move(std::get<2>(res));
    } else {
        std::tie(m, rep) = minimize_m(m0, c.material, pb.mask, c.minimize, c.solver, c.terms);
    }
    if (!rep.converged)
        throw ConvergenceError("minimizer did not reach grad_tol", rep.final_grad_norm, rep.iterations);

    const EnergyBreakdown e = total_energy(m, c.material, pb.mask, c.solver, c.terms);
    CsvTable trace({"step", "energy"});
    for (std::size_t i = 0; i < rep.energy_trace.size(); ++i)
        trace.add_row({std::to_string(i), format_number(rep.energy_trace[i])});
    CsvTable sum({"exchange", "anisotropy", "zeeman", "stray", "total", "volume", "iterations", "final_grad_norm"});
    sum.add_row({format_number(e.exchange), format_number(e.anisotropy), format_number(e.zeeman),
                 format_number(e.stray), format_number(e.total), format_number(pb.mask.volume()),
                 std::to_string(rep.iterations), format_number(rep.final_grad_norm)});
    ctx.out.write("energy_trace.csv", trace.str());
    ctx.out.write("solve_summary.csv", sum.str());
    if (c.write_vtk) ctx.out.write("magnetization.vtk", vtk_cell_vectors(m, "magnetization", "m"));
    *ctx.log << "solve: total energy " << format_number(e.total) << " after " << rep.iterations
             << " iterations (gradient " << rep.final_grad_norm << ")\n";
    return kExitOk;
}

inline int cmd_shell_study(CommandContext& ctx) {
    const RunConfig& c = ctx.cfg;
    c.solver.validate();
    StudyOptions opt = c.study;
    opt.threads = ctx.threads;
    const SurfaceVectorFn m0 = c.m0_fn();
    const std::vector<StudyRow> rows = convergence_study(c.surface, m0, c.eps_list, opt, c.solver);
    CsvTable t({"eps", "exchange", "stray_scaled", "total", "limit", "gap"});
    for (const auto& r : rows)
        t.add_row({format_number(r.eps), format_number(r.exchange), format_number(r.stray_scaled),
                   format_number(r.total), format_number(r.limit), format_number(r.gap)});
    ctx.out.write("shell_study.csv", t.str());
    for (const auto& r : rows) *ctx.log << "shell-study: eps " << r.eps << " total " << r.total << " gap " << r.gap << "\n";

    if (c.bounds && !rows.empty()) {
        const SurfaceMesh mesh = make_mesh(c.surface, c.study.mesh_level);
        const double target = normal_anisotropy(sample_vertices(mesh, m0), mesh);
        const GridSpec g = grid_from_policy(c.surface, c.study.grid);
        const double delta = c.recovery_delta();
        CsvTable b({"eps", "delta", "lower", "stray_scaled", "upper", "anisotropy_limit"});
        for (double eps : c.eps_list) {
            const RecoveryBounds rb = recovery_bounds(m0, c.surface, eps, delta, g, c.solver);
            b.add_row({format_number(eps), format_number(delta), format_number(rb.lower), format_number(rb.stray),
                       format_number(rb.upper), format_number(target)});
        }
        ctx.out.write("shell_bounds.csv", b.str());
    }
    return kExitOk;
}

inline int cmd_oracle(CommandContext& ctx) {
    const RunConfig& c = ctx.cfg;
    c.solver.validate();
    const detail::Problem pb = detail::make_problem(c);
    SolverConfig iterative = c.solver;
    iterative.backend = Backend::Iterative;
    const double threshold = std::max(1e-8, c.solver.agreement());
    CsvTable t({"sample", "iterative", "dense", "relative_gap", "threshold"});
    bool ok = true;
    for (int s = 0; s < c.oracle_samples; ++s) {
        const VectorField m = random_masked(c.seed * 1000 + s, pb.mask);
        const double dense = dense_oracle_energy(m, pb.mask);
        const double it = solve_scalar_potential(m, pb.mask, iterative).energy;
        const double gap = detail::relative_gap(it, dense);
        ok = ok && gap <= threshold;
        t.add_row({std::to_string(s), format_number(it), format_number(dense), format_number(gap),
                   format_number(threshold)});
    }
    ctx.out.write("oracle.csv", t.str());
    *ctx.log << "oracle: " << c.oracle_samples << " samples, " << (ok ? "agree" : "DISAGREE") << "\n";
    return ok ? kExitOk : kExitValidation;
}

// Runs one command, mapping exceptions to exit codes. Outputs of a run that
// fails are removed.
inline int run_command(const std::string& name, CommandContext& ctx) {
    int code = kExitOk;
    try {
        if (ctx.cfg.command && *ctx.cfg.command != name)
            throw ConfigError("config is for command `" + *ctx.cfg.command + "`, not `" + name + "`");
        ctx.out.prepare();
        if (name == "validate")
            code = cmd_validate(ctx);
        else if (name == "demag")
            code = cmd_demag(ctx);
        else if (name == "solve")
            code = cmd_solve(ctx);
        else if (name == "shell-study")
            code = cmd_shell_study(ctx);
        else if (name == "oracle")
            code = cmd_oracle(ctx);
        else
            throw ConfigError("unknown command `" + name + "`");
        return code;
    } catch (const ConvergenceError& e) {
        *ctx.warn << "error: " << e.what() << "\n";
        code = kExitSolver;
    } catch (const IoError& e) {
        *ctx.warn << "error: " << e.what() << "\n";
        code = kExitIo;
    } catch (const ConfigError& e) {
        *ctx.warn << "config error: " << e.what() << "\n";
        code = kExitConfig;
    } catch (const DomainError& e) {
        *ctx.warn << "config error: " << e.what() << "\n";
        code = kExitConfig;
    } catch (const std::exception& e) {
        *ctx.warn << "error: " << e.what() << "\n";
        code = kExitValidation;
    }
    ctx.out.discard();
    return code;
}

}  // namespace magnetovar
