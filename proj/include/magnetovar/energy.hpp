#pragma once

#include <cmath>
#include <sstream>
#include <variant>

#include "magnetostatics.hpp"

namespace magnetovar {

// Dimensionless parameters; lengths in exchange lengths, fields in units of
// the saturation magnetization.
struct MaterialParams {
    double Q = 0.0;
    Vec3 easy_axis{0, 0, 1};
    std::variant<Vec3, CellVectorField> h_applied = Vec3{};

    void validate() const {
        if (!(Q >= 0.0) || !std::isfinite(Q)) throw ConfigError("quality factor Q must be >= 0");
        if (std::abs(norm(easy_axis) - 1.0) > 1e-12) throw ConfigError("easy axis must be a unit vector");
    }
    Vec3 applied_at(std::size_t idx) const {
        if (const Vec3* c = std::get_if<Vec3>(&h_applied)) return *c;
        return std::get<CellVectorField>(h_applied).v[idx];
    }
};

// Which terms take part; the stray term is the expensive one.
struct EnergyTerms {
    bool exchange = true;
    bool anisotropy = true;
    bool zeeman = true;
    bool stray = true;
};

struct EnergyBreakdown {
    double exchange = 0.0;
    double anisotropy = 0.0;
    double zeeman = 0.0;
    double stray = 0.0;
    double total = 0.0;
};

// |m| = 1 on the mask and m = 0 off it, or DomainError naming the worst cell.
inline void require_unit_on_mask(const CellVectorField& m, const DomainMask& mask, double tol = 1e-12) {
    detail::require_same(m.grid, mask.grid);
    const GridSpec& g = m.grid;
    double worst = 0.0;
    int wi = -1, wj = -1, wk = -1;
    for (int i = 0; i < g.dim(0); ++i)
        for (int j = 0; j < g.dim(1); ++j)
            for (int k = 0; k < g.dim(2); ++k) {
                const std::size_t idx = g.index(i, j, k);
                const double err = mask.inside[idx] ? std::abs(norm(m.v[idx]) - 1.0) : norm(m.v[idx]);
                if (!(err <= worst)) {
                    worst = err;
                    wi = i, wj = j, wk = k;
                }
            }
    if (!(worst <= tol)) {
        std::ostringstream os;
        os << "magnetization norm violated at cell (" << wi << "," << wj << "," << wk << "), error " << worst;
        throw DomainError(os.str());
    }
}

// 1/2 sum |Dm|^2 h^3 over pairs of neighbouring mask cells.
inline double exchange_energy(const CellVectorField& m, const DomainMask& mask) {
    require_unit_on_mask(m, mask);
    const GridSpec& g = m.grid;
    double s = 0.0;
    for_active(g, cell_stagger(), [&](int, int, int, std::size_t idx) {
        if (!mask.inside[idx]) return;
        for (int d = 0; d < 3; ++d) {
            const std::size_t q = idx + g.stride(d);
            if (mask.inside[q]) s += norm2(m.v[idx] - m.v[q]);
        }
    });
    return 0.5 * s * g.h;  // |dm/h|^2 h^3
}

// (Q/2) sum (1 - (m.e)^2) h^3
inline double anisotropy_energy(const CellVectorField& m, const MaterialParams& p, const DomainMask& mask) {
    require_unit_on_mask(m, mask);
    p.validate();
    if (p.Q == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t idx = 0; idx < m.v.size(); ++idx)
        if (mask.inside[idx]) {
            const double c = dot(m.v[idx], p.easy_axis);
            s += 1.0 - c * c;
        }
    const double h3 = m.grid.h * m.grid.h * m.grid.h;
    return 0.5 * p.Q * s * h3;
}

inline double zeeman_energy(const CellVectorField& m, const MaterialParams& p, const DomainMask& mask) {
    require_unit_on_mask(m, mask);
    double s = 0.0;
    for (std::size_t idx = 0; idx < m.v.size(); ++idx)
        if (mask.inside[idx]) s += dot(p.applied_at(idx), m.v[idx]);
    const double h3 = m.grid.h * m.grid.h * m.grid.h;
    return -s * h3;
}

inline double stray_energy(const CellVectorField& m, const DomainMask& mask, const SolverConfig& cfg) {
    require_unit_on_mask(m, mask);
    return solve_scalar_potential(face_average(m), mask, cfg).energy;
}

inline EnergyBreakdown total_energy(const CellVectorField& m, const MaterialParams& p, const DomainMask& mask,
                                    const SolverConfig& cfg = {}, const EnergyTerms& terms = {}) {
    require_unit_on_mask(m, mask);
    EnergyBreakdown e;
    if (terms.exchange) e.exchange = exchange_energy(m, mask);
    if (terms.anisotropy) e.anisotropy = anisotropy_energy(m, p, mask);
    if (terms.zeeman) e.zeeman = zeeman_energy(m, p, mask);
    if (terms.stray && mask.count > 0) e.stray = stray_energy(m, mask, cfg);
    e.total = e.exchange + e.anisotropy + e.zeeman + e.stray;
    return e;
}

namespace detail {

// Everything but the stray contribution, per unit cell volume.
inline CellVectorField local_field(const CellVectorField& m, const MaterialParams& p, const DomainMask& mask,
                                   const EnergyTerms& terms) {
    const GridSpec& g = m.grid;
    CellVectorField out(g);
    const double w = 1.0 / (g.h * g.h);
    for_active(g, cell_stagger(), [&](int, int, int, std::size_t idx) {
        if (!mask.inside[idx]) return;
        Vec3 f;
        if (terms.exchange)
            for (int d = 0; d < 3; ++d)
                for (const std::size_t q : {idx - g.stride(d), idx + g.stride(d)})
                    if (mask.inside[q]) f += w * (m.v[q] - m.v[idx]);
        if (terms.anisotropy && p.Q != 0.0) f += p.Q * dot(m.v[idx], p.easy_axis) * p.easy_axis;
        if (terms.zeeman) f += p.applied_at(idx);
        out.v[idx] = f;
    });
    return out;
}

inline void add_on_mask(CellVectorField& a, const CellVectorField& b, const DomainMask& mask) {
    for (std::size_t idx = 0; idx < a.v.size(); ++idx)
        if (mask.inside[idx]) a.v[idx] += b.v[idx];
}

}  // namespace detail

// -dE/dm per unit cell volume. The stray part is the adjoint face average of
// H applied to the face-averaged magnetization.
inline CellVectorField effective_field(const CellVectorField& m, const MaterialParams& p, const DomainMask& mask,
                                       const SolverConfig& cfg = {}, const EnergyTerms& terms = {}) {
    require_unit_on_mask(m, mask);
    p.validate();
    CellVectorField f = detail::local_field(m, p, mask, terms);
    if (terms.stray && mask.count > 0) {
        const VectorField h = solve_scalar_potential(face_average(m), mask, cfg).h;
        detail::add_on_mask(f, face_average_adjoint(h), mask);
    }
    return f;
}

}  // namespace magnetovar
