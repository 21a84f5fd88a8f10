#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <tuple>
#include <utility>
#include <vector>

#include "energy.hpp"
#include "kernel_fields.hpp"

namespace magnetovar {

enum class MinimizeMethod { ProjectedGradient, JointAlternating };

struct MinimizeConfig {
    MinimizeMethod method = MinimizeMethod::ProjectedGradient;
    double step = 1e-2;       // first trial step
    double backtrack = 0.5;   // step shrink factor
    double grad_tol = 1e-6;   // on max_cell |(I - m m^T) H_eff|
    int max_iter = 20000;
    int max_backtracks = 60;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(step > 0)) throw ConfigError("minimizer step must be positive");
        if (!(backtrack > 0 && backtrack < 1)) throw ConfigError("backtracking factor must lie in (0,1)");
        if (!(grad_tol > 0)) throw ConfigError("grad_tol must be positive");
        if (max_iter < 0 || max_backtracks < 1) throw ConfigError("iteration limits must be positive");
    }
};

struct MinimizeReport {
    int iterations = 0;
    std::vector<double> energy_trace;
    double final_grad_norm = 0.0;
    bool converged = false;
};

// Uniform-on-sphere unit vectors on the mask.
inline CellVectorField random_unit_field(std::uint64_t seed, const DomainMask& mask) {
    return random_cells(seed, mask, true);
}

inline CellVectorField uniform_field(const DomainMask& mask, const Vec3& dir) {
    CellVectorField m(mask.grid);
    const Vec3 u = normalized(dir);
    for (std::size_t i = 0; i < m.v.size(); ++i)
        if (mask.inside[i]) m.v[i] = u;
    return m;
}

namespace detail {

// Projects f onto the tangent planes of m, in place; returns max cell norm.
inline double tangential(CellVectorField& f, const CellVectorField& m, const DomainMask& mask) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        if (!mask.inside[i]) {
            f.v[i] = {};
            continue;
        }
        f.v[i] -= dot(f.v[i], m.v[i]) * m.v[i];
        worst = std::max(worst, norm(f.v[i]));
    }
    return worst;
}

inline CellVectorField retract(const CellVectorField& m, const CellVectorField& dir, double tau,
                               const DomainMask& mask) {
    CellVectorField out(m.grid);
    for (std::size_t i = 0; i < m.v.size(); ++i)
        if (mask.inside[i]) out.v[i] = normalized(m.v[i] + tau * dir.v[i]);
    return out;
}

inline double masked_dot(const CellVectorField& a, const CellVectorField& b, const DomainMask& mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        if (mask.inside[i]) s += dot(a.v[i], b.v[i]);
    return s * a.grid.h * a.grid.h * a.grid.h;
}

// Barzilai-Borwein step from the last two iterates and descent directions.
inline double bb_step(const CellVectorField& m_old, const CellVectorField& m_new, const CellVectorField& d_old,
                      const CellVectorField& d_new, const DomainMask& mask, double fallback) {
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m_old.v.size(); ++i) {
        if (!mask.inside[i]) continue;
        const Vec3 s = m_new.v[i] - m_old.v[i];
        const Vec3 y = d_old.v[i] - d_new.v[i];  // gradient difference
        ss += norm2(s);
        sy += dot(s, y);
    }
    if (!(sy > 0.0) || !std::isfinite(ss / sy)) return fallback;
    return std::clamp(ss / sy, 1e-12, 1e12);
}

inline bool small_change(double e_new, double e_old) {
    return e_new <= e_old + 1e-12 * std::max(1.0, std::abs(e_old));
}

// Armijo line search along the retraction. energy(m) returns the objective.
// Returns false if no acceptable step was found.
template <class EnergyFn>
bool line_search(const CellVectorField& m, double e, const CellVectorField& dir, double dir_norm2,
                 const DomainMask& mask, const MinimizeConfig& cfg, EnergyFn&& energy, double& tau,
                 CellVectorField& m_out, double& e_out) {
    constexpr double c1 = 1e-4;
    for (int b = 0; b < cfg.max_backtracks; ++b) {
        CellVectorField trial = retract(m, dir, tau, mask);
        const double et = energy(trial);
        const double wanted = c1 * tau * dir_norm2;
        // below rounding the Armijo test cannot be met; plain non-increase is the best we can ask
        const bool tiny = wanted < 1e-14 * std::max(1.0, std::abs(e));
        if (et <= e - wanted || (tiny && et <= e)) {
            m_out = std::move(trial);
            e_out = et;
            return true;
        }
        tau *= cfg.backtrack;
    }
    return false;
}

inline void throw_no_descent(int it, double e, double g, double tau) {
    std::ostringstream os;
    os << "no descent after backtracking (energy " << e << ", last step " << tau << ")";
    throw ConvergenceError(os.str(), g, it);
}

}  // namespace detail

// Projected gradient descent with Barzilai-Borwein trial steps and
// Armijo backtracking; m is renormalized cellwise after every step.
inline std::pair<CellVectorField, MinimizeReport> minimize_m(const CellVectorField& m0, const MaterialParams& p,
                                                             const DomainMask& mask, const MinimizeConfig& mcfg,
                                                             const SolverConfig& scfg = {},
                                                             const EnergyTerms& terms = {}) {
    mcfg.validate();
    scfg.validate();
    p.validate();
    require_unit_on_mask(m0, mask);
    auto energy = [&](const CellVectorField& m) { return total_energy(m, p, mask, scfg, terms).total; };
    auto direction = [&](const CellVectorField& m, double& gmax) {
        CellVectorField d = effective_field(m, p, mask, scfg, terms);
        gmax = detail::tangential(d, m, mask);
        return d;
    };
    MinimizeReport rep;
    CellVectorField m = m0;
    double e = energy(m);
    double gmax = 0.0;
    CellVectorField d = direction(m, gmax);
    rep.energy_trace.push_back(e);
    double tau = mcfg.step;
    for (int it = 0; it < mcfg.max_iter && gmax > mcfg.grad_tol; ++it) {
        const double dd = detail::masked_dot(d, d, mask);
        CellVectorField m_new;
        double e_new = 0.0;
        if (!detail::line_search(m, e, d, dd, mask, mcfg, energy, tau, m_new, e_new))
            detail::throw_no_descent(it, e, gmax, tau);
        double g_new = 0.0;
        CellVectorField d_new = direction(m_new, g_new);
        tau = detail::bb_step(m, m_new, d, d_new, mask, tau / mcfg.backtrack);
        m = std::move(m_new);
        d = std::move(d_new);
        e = e_new;
        gmax = g_new;
        rep.energy_trace.push_back(e);
        rep.iterations = it + 1;
    }
    rep.final_grad_norm = gmax;
    rep.converged = gmax <= mcfg.grad_tol;
    return {std::move(m), std::move(rep)};
}

// G(m, a) = exchange + anisotropy + zeeman + V(P m, a), with P the face average.
inline double joint_energy(const CellVectorField& m, const VectorField& a, const MaterialParams& p,
                           const DomainMask& mask, const EnergyTerms& terms = {}) {
    EnergyTerms local = terms;
    local.stray = false;
    double e = total_energy(m, p, mask, {}, local).total;
    if (terms.stray) e += functional_V(face_average(m), a);
    return e;
}

// Alternates an exact a-step (minimize V(Pm, .)) with one projected gradient
// step on G(., a). The trace records G after every half step.
inline std::tuple<CellVectorField, VectorField, MinimizeReport> minimize_joint(
    const CellVectorField& m0, const VectorField& a0, const MaterialParams& p, const DomainMask& mask,
    const MinimizeConfig& mcfg, const SolverConfig& scfg = {}, const EnergyTerms& terms = {}) {
    mcfg.validate();
    scfg.validate();
    p.validate();
    require_unit_on_mask(m0, mask);
    if (a0.st != Staggering::Edge) throw DomainError("vector potential must be an edge field");
    detail::require_same(a0.grid, mask.grid);

    EnergyTerms local = terms;
    local.stray = false;
    MinimizeReport rep;
    CellVectorField m = m0;
    VectorField a = a0;
    rep.energy_trace.push_back(joint_energy(m, a, p, mask, terms));
    if (mask.count == 0) {
        rep.converged = true;
        return {std::move(m), std::move(a), std::move(rep)};
    }

    double tau = mcfg.step;
    CellVectorField m_prev, d_prev;
    bool have_prev = false;
    double gmax = 0.0;
    for (int it = 0;; ++it) {
        // a-step
        double da2 = 0.0;
        if (terms.stray) {
            a = solve_vector_potential_unconstrained(face_average(m), mask, scfg).a;
            da2 = full_gradient_norm2(a);
        }
        const VectorField curl_a = curl(a);
        auto g_energy = [&](const CellVectorField& mm) {
            double e = total_energy(mm, p, mask, scfg, local).total;
            if (terms.stray) {
                const VectorField pm = face_average(mm);
                e += 0.5 * da2 + 0.5 * inner(pm, pm) - inner(pm, curl_a);
            }
            return e;
        };
        const double e = g_energy(m);
        rep.energy_trace.push_back(e);

        // with a optimal this is also the gradient of the reduced energy
        CellVectorField d = detail::local_field(m, p, mask, local);
        if (terms.stray) {
            const VectorField r = curl_a - face_average(m);
            detail::add_on_mask(d, face_average_adjoint(r), mask);
        }
        gmax = detail::tangential(d, m, mask);
        if (have_prev) tau = detail::bb_step(m_prev, m, d_prev, d, mask, tau / mcfg.backtrack);
        if (gmax <= mcfg.grad_tol || it >= mcfg.max_iter) {
            rep.iterations = it;
            break;
        }

        // m-step
        const double dd = detail::masked_dot(d, d, mask);
        CellVectorField m_new;
        double e_new = 0.0;
        if (!detail::line_search(m, e, d, dd, mask, mcfg, g_energy, tau, m_new, e_new))
            detail::throw_no_descent(it, e, gmax, tau);
        rep.energy_trace.push_back(e_new);
        m_prev = std::move(m);
        d_prev = std::move(d);
        have_prev = true;
        m = std::move(m_new);
    }
    rep.final_grad_norm = gmax;
    rep.converged = gmax <= mcfg.grad_tol;
    return {std::move(m), std::move(a), std::move(rep)};
}

}  // namespace magnetovar
