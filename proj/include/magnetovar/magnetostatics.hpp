#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "field_grid.hpp"
#include "linear_algebra.hpp"
#include "spectral.hpp"

namespace magnetovar {

enum class Backend { Iterative, DenseOracle };
// Spectral: fast-transform inverse of the box operator. None: plain CG.
enum class Preconditioner { Spectral, None };

inline constexpr std::size_t kDenseOracleMaxUnknowns = 32768;

struct SolverConfig {
    double tol = 1e-8;
    int max_iter = 1000;
    double pad_ratio = 1.0;  // padding width / domain diameter
    Backend backend = Backend::Iterative;
    Preconditioner preconditioner = Preconditioner::Spectral;

    void validate() const {
        if (!(tol > 0.0 && tol <= 1e-2)) throw ConfigError("solver tol must lie in (0, 1e-2]");
        if (max_iter < 1) throw ConfigError("solver max_iter must be at least 1");
        if (!(pad_ratio >= 0.0) || !std::isfinite(pad_ratio))
            throw ConfigError("pad_ratio must be nonnegative");
    }
    // relative agreement expected between quantities that are equal up to solver error
    double agreement() const { return std::max(10.0 * tol, 1e-10); }
};

struct StrayFieldSolution {
    ScalarField u;
    VectorField h;  // -grad u
    VectorField b;  // h + m
    double energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

struct VectorPotentialSolution {
    VectorField a;       // edge field
    VectorField curl_a;  // face field
    double div_norm = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// Grid resolving `geom` with `cells_across` cells along its longest axis and
// padding of cfg.pad_ratio times that length on every side.
inline GridSpec grid_for(const Geometry& geom, int cells_across, const SolverConfig& cfg) {
    if (cells_across < 2) throw ConfigError("need at least 2 cells across the domain");
    Vec3 lo, hi;
    bounding_box(geom, lo, hi);
    const Vec3 ext = hi - lo;
    const double diam = std::max({ext.x, ext.y, ext.z});
    GridSpec g;
    g.h = diam / cells_across;
    const Vec3 c = 0.5 * (lo + hi);
    int n[3];
    for (int d = 0; d < 3; ++d) n[d] = std::max(2, static_cast<int>(std::ceil(ext[d] / g.h - 1e-9)));
    g.nx = n[0];
    g.ny = n[1];
    g.nz = n[2];
    g.origin = c - 0.5 * g.h * Vec3{double(n[0]), double(n[1]), double(n[2])};
    g.pad = static_cast<int>(std::ceil(cfg.pad_ratio * cells_across - 1e-9));
    g.validate();
    return g;
}

namespace detail {

// Spectral solvers are cheap to build but not free; keep a few per thread.
inline const SpectralSolver& spectral_solver(const GridSpec& g, const Stagger& s) {
    thread_local std::vector<std::unique_ptr<SpectralSolver>> cache;
    for (const auto& p : cache)
        if (p->grid() == g && p->stagger() == s) return *p;
    if (cache.size() >= 8) cache.erase(cache.begin());
    cache.push_back(std::make_unique<SpectralSolver>(g, s));
    return *cache.back();
}

inline void require_face(const VectorField& m) {
    if (m.st != Staggering::Face) throw DomainError("magnetization must be a face field");
}

inline double relative_gap(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

// D^T D u = rhs for one stagger pattern, by (P)CG.
inline CgResult solve_box(const GridSpec& g, const Stagger& s, const std::vector<double>& rhs,
                          std::vector<double>& x, const SolverConfig& cfg) {
    auto apply_a = [&](const std::vector<double>& in, std::vector<double>& out) {
        neg_laplacian(g, in, s, out);
    };
    if (cfg.preconditioner == Preconditioner::Spectral) {
        const SpectralSolver& sp = spectral_solver(g, s);
        return pcg(apply_a, [&](const std::vector<double>& r, std::vector<double>& z) { sp.solve(r, z); },
                   rhs, x, cfg.tol, cfg.max_iter);
    }
    return pcg(apply_a, [](const std::vector<double>& r, std::vector<double>& z) { z = r; }, rhs, x,
               cfg.tol, cfg.max_iter);
}

}  // namespace detail

// Direct solver for the cell Poisson problem, assembled entry by entry from
// the 7-point stencil and factored with a band Cholesky. Shares no code with
// the operator layer on purpose.
class DenseOracle {
public:
    explicit DenseOracle(const GridSpec& g) : grid_(g) {
        g.validate();
        m_ = {g.dim(0) - 2, g.dim(1) - 2, g.dim(2) - 2};
        const std::size_t n = static_cast<std::size_t>(m_[0]) * m_[1] * m_[2];
        if (n > kDenseOracleMaxUnknowns)
            throw ConfigError("dense oracle limited to " + std::to_string(kDenseOracleMaxUnknowns) +
                              " unknowns, grid has " + std::to_string(n));
        const std::size_t plane = static_cast<std::size_t>(m_[1]) * m_[2];
        band_.emplace(n, plane);
        const double w = 1.0 / (g.h * g.h);
        for (int i = 0; i < m_[0]; ++i)
            for (int j = 0; j < m_[1]; ++j)
                for (int k = 0; k < m_[2]; ++k) {
                    const std::size_t p = unknown(i, j, k);
                    band_->at(p, p) = 6.0 * w;
                    if (k > 0) band_->at(p, p - 1) = -w;
                    if (j > 0) band_->at(p, p - m_[2]) = -w;
                    if (i > 0) band_->at(p, p - plane) = -w;
                }
        band_->factor();
    }

    const GridSpec& grid() const { return grid_; }

    // Cell potential in storage layout.
    std::vector<double> potential(const VectorField& m) const {
        const GridSpec& g = grid_;
        std::vector<double> b(band_->size());
        for (int i = 0; i < m_[0]; ++i)
            for (int j = 0; j < m_[1]; ++j)
                for (int k = 0; k < m_[2]; ++k) {
                    const int si = i + 1, sj = j + 1, sk = k + 1;
                    const double flux = m.c[0][g.index(si, sj, sk)] - m.c[0][g.index(si + 1, sj, sk)] +
                                        m.c[1][g.index(si, sj, sk)] - m.c[1][g.index(si, sj + 1, sk)] +
                                        m.c[2][g.index(si, sj, sk)] - m.c[2][g.index(si, sj, sk + 1)];
                    b[unknown(i, j, k)] = flux / g.h;
                }
        band_->solve(b);
        std::vector<double> u(g.size(), 0.0);
        for (int i = 0; i < m_[0]; ++i)
            for (int j = 0; j < m_[1]; ++j)
                for (int k = 0; k < m_[2]; ++k) u[g.index(i + 1, j + 1, k + 1)] = b[unknown(i, j, k)];
        return u;
    }

    // 1/2 sum over all faces of the squared potential jump.
    double energy(const VectorField& m) const {
        const std::vector<double> u = potential(m);
        const GridSpec& g = grid_;
        const int N[3] = {g.dim(0), g.dim(1), g.dim(2)};
        double s = 0.0;
        for (int i = 0; i < N[0]; ++i)
            for (int j = 0; j < N[1]; ++j)
                for (int k = 0; k < N[2]; ++k) {
                    const double c = u[g.index(i, j, k)];
                    if (i > 0) s += sq(c - u[g.index(i - 1, j, k)]);
                    if (j > 0) s += sq(c - u[g.index(i, j - 1, k)]);
                    if (k > 0) s += sq(c - u[g.index(i, j, k - 1)]);
                }
        return 0.5 * s * g.h;  // (1/h^2) * h^3
    }

private:
    static double sq(double x) { return x * x; }
    std::size_t unknown(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * m_[1] + j) * m_[2] + k;
    }

    GridSpec grid_;
    std::array<int, 3> m_{};
    std::optional<BandedSpd> band_;
};

namespace detail {

inline const DenseOracle& dense_oracle_for(const GridSpec& g) {
    thread_local std::unique_ptr<DenseOracle> cached;
    if (!cached || !(cached->grid() == g)) {
        cached.reset();
        cached = std::make_unique<DenseOracle>(g);
    }
    return *cached;
}

inline void check_inputs(const VectorField& m, const DomainMask& mask, const SolverConfig& cfg) {
    cfg.validate();
    require_face(m);
    require_same(m.grid, mask.grid);
    require_interior_support(m);
}

}  // namespace detail

inline double dense_oracle_energy(const VectorField& m, const DomainMask& mask) {
    detail::require_face(m);
    detail::require_same(m.grid, mask.grid);
    require_interior_support(m);
    return detail::dense_oracle_for(m.grid).energy(m);
}

// W(m, u) = <grad u, m> - 1/2 ||grad u||^2
inline double functional_W(const VectorField& m, const ScalarField& u) {
    const VectorField gu = grad(u);
    return inner(gu, m) - 0.5 * inner(gu, gu);
}

// V(m, a) = 1/2 ||Da||^2 + 1/2 ||m||^2 - <m, curl a>
inline double functional_V(const VectorField& m, const VectorField& a) {
    if (a.st != Staggering::Edge) throw DomainError("vector potential must be an edge field");
    return 0.5 * full_gradient_norm2(a) + 0.5 * inner(m, m) - inner(m, curl(a));
}

// V_curl(m, a) = 1/2 ||curl a - m||^2
inline double functional_V_curl(const VectorField& m, const VectorField& a) {
    if (a.st != Staggering::Edge) throw DomainError("vector potential must be an edge field");
    const VectorField r = curl(a) - m;
    return 0.5 * inner(r, r);
}

inline StrayFieldSolution solve_scalar_potential(const VectorField& m, const DomainMask& mask,
                                                 const SolverConfig& cfg = {}) {
    detail::check_inputs(m, mask, cfg);
    const GridSpec& g = m.grid;
    StrayFieldSolution sol;
    ScalarField rhs = div(m);
    rhs *= -1.0;
    sol.u = ScalarField(g, Location::Cell);
    if (cfg.backend == Backend::DenseOracle) {
        sol.u.v = detail::dense_oracle_for(g).potential(m);
        std::vector<double> au(g.size(), 0.0);
        detail::neg_laplacian(g, sol.u.v, cell_stagger(), au);
        double rr = 0, bb = 0;
        for (std::size_t i = 0; i < au.size(); ++i) {
            rr += (rhs.v[i] - au[i]) * (rhs.v[i] - au[i]);
            bb += rhs.v[i] * rhs.v[i];
        }
        sol.residual = bb > 0 ? std::sqrt(rr / bb) : 0.0;
    } else {
        const CgResult r = detail::solve_box(g, cell_stagger(), rhs.v, sol.u.v, cfg);
        sol.residual = r.residual;
        sol.iterations = r.iterations;
        if (!r.converged)
            throw ConvergenceError("scalar potential solve did not converge", r.residual, r.iterations);
    }
    sol.h = grad(sol.u);
    sol.h *= -1.0;
    sol.b = sol.h + m;
    sol.energy = 0.5 * inner(sol.h, sol.h);
    return sol;
}

namespace detail {

inline void finish_vector_solution(VectorPotentialSolution& sol, const VectorField& m, bool gauged) {
    sol.curl_a = curl(sol.a);
    sol.div_norm = norm(div(sol.a));
    sol.energy = gauged ? functional_V_curl(m, sol.a) : functional_V(m, sol.a);
}

}  // namespace detail

// Minimizes V over all edge fields: one Poisson problem per component.
inline VectorPotentialSolution solve_vector_potential_unconstrained(const VectorField& m,
                                                                    const DomainMask& mask,
                                                                    const SolverConfig& cfg = {}) {
    detail::check_inputs(m, mask, cfg);
    const GridSpec& g = m.grid;
    const VectorField rhs = curl(m);  // curl^T m, an edge field
    VectorPotentialSolution sol;
    sol.a = VectorField(g, Staggering::Edge);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
        const CgResult r = detail::solve_box(g, edge_stagger(c), rhs.c[c], sol.a.c[c], cfg);
        worst = std::max(worst, r.residual);
        sol.iterations = std::max(sol.iterations, r.iterations);
        if (!r.converged)
            throw ConvergenceError("vector potential solve did not converge", r.residual, r.iterations);
    }
    sol.residual = worst;
    detail::finish_vector_solution(sol, m, false);
    return sol;
}

// L2 projection of an edge field onto the discretely divergence-free fields.
inline VectorField project_divergence_free(const VectorField& a) {
    if (a.st != Staggering::Edge) throw DomainError("projection expects an edge field");
    ScalarField rhs = div(a);
    rhs *= -1.0;
    ScalarField phi(a.grid, Location::Node);
    detail::spectral_solver(a.grid, node_stagger()).solve(rhs.v, phi.v);
    return a - grad(phi);
}

// Minimizes V_curl over divergence-free edge fields; CG on curl^T curl with
// the constraint re-imposed by projection at every step.
inline VectorPotentialSolution solve_vector_potential_gauged(const VectorField& m, const DomainMask& mask,
                                                             const SolverConfig& cfg = {}) {
    detail::check_inputs(m, mask, cfg);
    const GridSpec& g = m.grid;
    const std::size_t n = g.size();
    auto unpack = [&](const std::vector<double>& flat) {
        VectorField f(g, Staggering::Edge);
        for (int c = 0; c < 3; ++c) std::copy(flat.begin() + c * n, flat.begin() + (c + 1) * n, f.c[c].begin());
        return f;
    };
    auto pack = [&](const VectorField& f, std::vector<double>& flat) {
        flat.resize(3 * n);
        for (int c = 0; c < 3; ++c) std::copy(f.c[c].begin(), f.c[c].end(), flat.begin() + c * n);
    };
    auto apply_a = [&](const std::vector<double>& x, std::vector<double>& y) {
        pack(project_divergence_free(curl(curl(unpack(x)))), y);
    };
    auto apply_m = [&](const std::vector<double>& r, std::vector<double>& z) {
        VectorField rf = unpack(r);
        if (cfg.preconditioner == Preconditioner::Spectral) {
            VectorField zf(g, Staggering::Edge);
            for (int c = 0; c < 3; ++c) detail::spectral_solver(g, edge_stagger(c)).solve(rf.c[c], zf.c[c]);
            rf = std::move(zf);
        }
        pack(project_divergence_free(rf), z);
    };
    std::vector<double> b, x(3 * n, 0.0);
    pack(project_divergence_free(curl(m)), b);
    const CgResult r = pcg(apply_a, apply_m, b, x, cfg.tol, cfg.max_iter);
    if (!r.converged)
        throw ConvergenceError("gauged vector potential solve did not converge", r.residual, r.iterations);
    VectorPotentialSolution sol;
    sol.a = project_divergence_free(unpack(x));
    sol.residual = r.residual;
    sol.iterations = r.iterations;
    detail::finish_vector_solution(sol, m, true);
    return sol;
}

// The operator H: m -> h_m.
inline VectorField stray_field(const VectorField& m, const DomainMask& mask, const SolverConfig& cfg = {}) {
    return solve_scalar_potential(m, mask, cfg).h;
}

struct ReciprocityReport {
    double gap = 0.0;        // |<Hm, m'> - <m, Hm'>| / (||m|| ||m'||)
    double hh = 0.0;         // <h_m, h_m'>
    double m_hprime = 0.0;   // -<m, h_m'>
    double h_mprime = 0.0;   // -<h_m, m'>
    double three_way = 0.0;  // largest pairwise difference of the three, same scaling as gap
};

inline ReciprocityReport reciprocity(const VectorField& m, const VectorField& mp, const DomainMask& mask,
                                     const SolverConfig& cfg = {}) {
    ReciprocityReport rep;
    const double scale = norm(m) * norm(mp);
    if (scale == 0.0) return rep;
    const VectorField h = stray_field(m, mask, cfg);
    const VectorField hp = stray_field(mp, mask, cfg);
    const double a = inner(h, mp), b = inner(m, hp);
    rep.gap = std::abs(a - b) / scale;
    rep.hh = inner(h, hp);
    rep.m_hprime = -b;
    rep.h_mprime = -a;
    rep.three_way = std::max({std::abs(rep.hh - rep.m_hprime), std::abs(rep.hh - rep.h_mprime),
                              std::abs(rep.m_hprime - rep.h_mprime)}) /
                    scale;
    return rep;
}

inline double reciprocity_gap(const VectorField& m, const VectorField& mp, const DomainMask& mask,
                              const SolverConfig& cfg = {}) {
    return reciprocity(m, mp, mask, cfg).gap;
}

// 2 E_s(m) / ||m||^2
inline double rayleigh_quotient(const VectorField& m, const DomainMask& mask, const SolverConfig& cfg = {}) {
    const double mm = inner(m, m);
    if (mm == 0.0) throw DomainError("rayleigh quotient of the zero field");
    return 2.0 * solve_scalar_potential(m, mask, cfg).energy / mm;
}

struct HelmholtzReport {
    double residual = 0.0;               // ||m - curl a - grad u|| / ||m||
    double orthogonality_defect = 0.0;   // |1/2||m||^2 - E_s - 1/2||curl a||^2| / ||m||^2
};

inline HelmholtzReport helmholtz(const VectorField& m, const StrayFieldSolution& su,
                                 const VectorPotentialSolution& sa) {
    detail::require_same(m.grid, su.u.grid);
    detail::require_same(m.grid, sa.a.grid);
    HelmholtzReport rep;
    const double mm = inner(m, m);
    if (mm == 0.0) return rep;
    const VectorField r = m - sa.curl_a - grad(su.u);
    rep.residual = norm(r) / std::sqrt(mm);
    rep.orthogonality_defect = std::abs(0.5 * mm - su.energy - 0.5 * inner(sa.curl_a, sa.curl_a)) / mm;
    return rep;
}

inline double helmholtz_residual(const VectorField& m, const StrayFieldSolution& su,
                                 const VectorPotentialSolution& sa) {
    return helmholtz(m, su, sa).residual;
}

// N_ij = -<e_i chi, H(e_j chi)> / |Omega|, with chi sampled at face centers.
inline Mat3 demag_tensor(const Ellipsoid& ell, const GridSpec& grid, const SolverConfig& cfg = {}) {
    const Geometry geom = ell;
    const DomainMask mask = build_mask(geom, grid);
    std::array<VectorField, 3> m, h;
    std::array<double, 3> mm{};
    for (int j = 0; j < 3; ++j) {
        m[j] = indicator_faces(geom, grid, unit(j));
        mm[j] = inner(m[j], m[j]);
        if (mm[j] == 0.0) throw DomainError("ellipsoid is not resolved by the grid");
        h[j] = stray_field(m[j], mask, cfg);
    }
    Mat3 n{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) n[i][j] = -inner(m[i], h[j]) / std::sqrt(mm[i] * mm[j]);
    return n;
}

}  // namespace magnetovar
