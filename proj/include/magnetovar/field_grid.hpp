#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "surface.hpp"
#include "vec3.hpp"

namespace magnetovar {

// Uniform grid of nx*ny*nz interior cells, surrounded by `pad` empty cells
// per side. Storage adds one more ghost layer on each side that is always
// zero; that layer carries the homogeneous far-field condition.
struct GridSpec {
    int nx = 2, ny = 2, nz = 2;
    double h = 1.0;
    Vec3 origin{};  // lower corner of the interior block
    int pad = 0;

    std::array<int, 3> cells() const { return {nx, ny, nz}; }
    int cells(int d) const { return d == 0 ? nx : (d == 1 ? ny : nz); }
    // storage extent per dimension, ghosts included
    int dim(int d) const { return cells(d) + 2 * pad + 2; }
    std::array<int, 3> dims() const { return {dim(0), dim(1), dim(2)}; }
    std::size_t size() const {
        return static_cast<std::size_t>(dim(0)) * dim(1) * dim(2);
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k;
    }
    std::size_t stride(int d) const {
        return d == 0 ? static_cast<std::size_t>(dim(1)) * dim(2)
                      : (d == 1 ? static_cast<std::size_t>(dim(2)) : 1u);
    }
    // coordinate of storage node index i along d
    double node_coord(int d, double i) const { return origin[d] + (i - 1 - pad) * h; }
    Vec3 cell_center(int i, int j, int k) const {
        return {node_coord(0, i + 0.5), node_coord(1, j + 0.5), node_coord(2, k + 0.5)};
    }
    Vec3 interior_lo() const { return origin; }
    Vec3 interior_hi() const { return origin + Vec3{nx * h, ny * h, nz * h}; }

    void validate() const {
        if (!(h > 0) || !std::isfinite(h)) throw DomainError("grid spacing must be positive");
        if (nx < 2 || ny < 2 || nz < 2) throw DomainError("grid needs at least 2 cells per axis");
        if (pad < 0) throw DomainError("padding must be nonnegative");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Grid with n interior cells per axis covering [-half, half]^3 around
// `center`, plus `pad` padding cells.
inline GridSpec cube_grid(int n, double half, int pad, Vec3 center = {}) {
    GridSpec g;
    g.nx = g.ny = g.nz = n;
    g.h = 2.0 * half / n;
    g.origin = center - Vec3{half, half, half};
    g.pad = pad;
    g.validate();
    return g;
}

// Each degree of freedom sits, along each axis, either at a cell center or
// at a node. Along an axis, a Center entity is active on storage indices
// [1, N-2] and a Node entity on [1, N-1].
enum class Pos : std::uint8_t { Center, Node };
using Stagger = std::array<Pos, 3>;

constexpr Stagger cell_stagger() { return {Pos::Center, Pos::Center, Pos::Center}; }
constexpr Stagger node_stagger() { return {Pos::Node, Pos::Node, Pos::Node}; }
constexpr Stagger face_stagger(int c) {
    Stagger s = cell_stagger();
    s[c] = Pos::Node;
    return s;
}
constexpr Stagger edge_stagger(int c) {
    Stagger s = node_stagger();
    s[c] = Pos::Center;
    return s;
}
constexpr Pos flip(Pos p) { return p == Pos::Center ? Pos::Node : Pos::Center; }

struct IndexRange {
    int lo, hi;  // inclusive
};
inline IndexRange active_range(const GridSpec& g, Pos p, int d) {
    return {1, p == Pos::Center ? g.dim(d) - 2 : g.dim(d) - 1};
}

inline Vec3 position(const GridSpec& g, const Stagger& s, int i, int j, int k) {
    const int idx[3] = {i, j, k};
    Vec3 x;
    for (int d = 0; d < 3; ++d)
        x[d] = g.node_coord(d, idx[d] + (s[d] == Pos::Center ? 0.5 : 0.0));
    return x;
}

// Calls f(i, j, k, flat_index) for every active entity of stagger s.
template <class F>
void for_active(const GridSpec& g, const Stagger& s, F&& f) {
    const IndexRange r0 = active_range(g, s[0], 0), r1 = active_range(g, s[1], 1),
                     r2 = active_range(g, s[2], 2);
    for (int i = r0.lo; i <= r0.hi; ++i)
        for (int j = r1.lo; j <= r1.hi; ++j) {
            std::size_t idx = g.index(i, j, r2.lo);
            for (int k = r2.lo; k <= r2.hi; ++k, ++idx) f(i, j, k, idx);
        }
}

enum class Location { Cell, Node };
enum class Staggering { Face, Edge };

inline Stagger stagger_of(Location l) {
    return l == Location::Cell ? cell_stagger() : node_stagger();
}
inline Stagger stagger_of(Staggering s, int c) {
    return s == Staggering::Face ? face_stagger(c) : edge_stagger(c);
}

struct ScalarField {
    GridSpec grid;
    Location loc = Location::Cell;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, Location l = Location::Cell)
        : grid(g), loc(l), v(g.size(), 0.0) {}

    Stagger stagger() const { return stagger_of(loc); }
    double& operator()(int i, int j, int k) { return v[grid.index(i, j, k)]; }
    double operator()(int i, int j, int k) const { return v[grid.index(i, j, k)]; }
};

// Face fields live on cell faces (component c on the faces normal to c);
// edge fields on cell edges (component c on the edges parallel to c).
struct VectorField {
    GridSpec grid;
    Staggering st = Staggering::Face;
    std::array<std::vector<double>, 3> c;

    VectorField() = default;
    explicit VectorField(const GridSpec& g, Staggering s = Staggering::Face) : grid(g), st(s) {
        for (auto& a : c) a.assign(g.size(), 0.0);
    }

    Stagger stagger(int comp) const { return stagger_of(st, comp); }
};

namespace detail {

inline void require_same(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw DomainError("fields live on different grids");
}

// out += coef * (one-sided difference of `in` along d). The input has stagger
// s; the output has s with axis d flipped. Center->Node differences are
// backward, Node->Center differences forward, and values outside the active
// set are the stored zeros.
inline void difference(const GridSpec& g, const std::vector<double>& in, const Stagger& s, int d,
                       double coef, std::vector<double>& out) {
    Stagger so = s;
    so[d] = flip(s[d]);
    const std::size_t st = g.stride(d);
    const double* pin = in.data();
    double* pout = out.data();
    if (s[d] == Pos::Center) {
        for_active(g, so, [&](int, int, int, std::size_t idx) {
            pout[idx] += coef * (pin[idx] - pin[idx - st]);
        });
    } else {
        for_active(g, so, [&](int, int, int, std::size_t idx) {
            pout[idx] += coef * (pin[idx + st] - pin[idx]);
        });
    }
}

inline double dot_raw(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// out = D^T D in, for the full difference gradient D of a field with stagger
// s: Center axes see zero neighbours past the active set (Dirichlet), Node
// axes only couple active neighbours (Neumann).
inline void neg_laplacian(const GridSpec& g, const std::vector<double>& in, const Stagger& s,
                          std::vector<double>& out) {
    const double w = 1.0 / (g.h * g.h);
    const std::array<int, 3> N = g.dims();
    const std::array<std::size_t, 3> st = {g.stride(0), g.stride(1), g.stride(2)};
    for_active(g, s, [&](int i, int j, int k, std::size_t idx) {
        const int ii[3] = {i, j, k};
        double acc = 0.0;
        const double x = in[idx];
        for (int d = 0; d < 3; ++d) {
            if (s[d] == Pos::Center) {
                acc += 2.0 * x - in[idx - st[d]] - in[idx + st[d]];
            } else {
                if (ii[d] > 1) acc += x - in[idx - st[d]];
                if (ii[d] < N[d] - 1) acc += x - in[idx + st[d]];
            }
        }
        out[idx] = w * acc;
    });
}

}  // namespace detail

// ---- arithmetic ----------------------------------------------------------

inline ScalarField& operator+=(ScalarField& a, const ScalarField& b) {
    detail::require_same(a.grid, b.grid);
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
    return a;
}
inline ScalarField& operator*=(ScalarField& a, double s) {
    for (auto& x : a.v) x *= s;
    return a;
}
inline VectorField& operator+=(VectorField& a, const VectorField& b) {
    detail::require_same(a.grid, b.grid);
    if (a.st != b.st) throw DomainError("mixing face and edge fields");
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a.c[c].size(); ++i) a.c[c][i] += b.c[c][i];
    return a;
}
inline VectorField& operator-=(VectorField& a, const VectorField& b) {
    detail::require_same(a.grid, b.grid);
    if (a.st != b.st) throw DomainError("mixing face and edge fields");
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a.c[c].size(); ++i) a.c[c][i] -= b.c[c][i];
    return a;
}
inline VectorField& operator*=(VectorField& a, double s) {
    for (auto& comp : a.c)
        for (auto& x : comp) x *= s;
    return a;
}
inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }

// ---- inner products --------------------------------------------------------

inline double inner(const ScalarField& f, const ScalarField& g) {
    detail::require_same(f.grid, g.grid);
    if (f.loc != g.loc) throw DomainError("inner product of fields at different locations");
    const double h3 = f.grid.h * f.grid.h * f.grid.h;
    return detail::dot_raw(f.v, g.v) * h3;
}

inline double inner(const VectorField& f, const VectorField& g) {
    detail::require_same(f.grid, g.grid);
    if (f.st != g.st) throw DomainError("inner product of face and edge fields");
    const double h3 = f.grid.h * f.grid.h * f.grid.h;
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += detail::dot_raw(f.c[c], g.c[c]);
    return s * h3;
}

inline double norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
inline double norm(const VectorField& f) { return std::sqrt(inner(f, f)); }

// ---- operators ---------------------------------------------------------------

// Cell potentials give face fields, node potentials give edge fields.
inline VectorField grad(const ScalarField& u) {
    const Staggering st = u.loc == Location::Cell ? Staggering::Face : Staggering::Edge;
    VectorField out(u.grid, st);
    const double w = 1.0 / u.grid.h;
    for (int c = 0; c < 3; ++c) detail::difference(u.grid, u.v, u.stagger(), c, w, out.c[c]);
    return out;
}

// Face fields give cell values, edge fields give node values.
inline ScalarField div(const VectorField& v) {
    ScalarField out(v.grid, v.st == Staggering::Face ? Location::Cell : Location::Node);
    const double w = 1.0 / v.grid.h;
    for (int c = 0; c < 3; ++c) detail::difference(v.grid, v.c[c], v.stagger(c), c, w, out.v);
    return out;
}

// Face fields give edge fields and vice versa; the two are adjoint.
inline VectorField curl(const VectorField& v) {
    VectorField out(v.grid, v.st == Staggering::Face ? Staggering::Edge : Staggering::Face);
    const double w = 1.0 / v.grid.h;
    for (int c = 0; c < 3; ++c) {
        const int a = (c + 1) % 3, b = (c + 2) % 3;
        detail::difference(v.grid, v.c[b], v.stagger(b), a, w, out.c[c]);
        detail::difference(v.grid, v.c[a], v.stagger(a), b, -w, out.c[c]);
    }
    return out;
}

// ||Dv||^2 for the full difference gradient (all nine partials).
inline double full_gradient_norm2(const VectorField& v) {
    const GridSpec& g = v.grid;
    const double w = 1.0 / g.h, h3 = g.h * g.h * g.h;
    std::vector<double> tmp(g.size());
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            detail::difference(g, v.c[c], v.stagger(c), d, w, tmp);
            s += detail::dot_raw(tmp, tmp);
        }
    return s * h3;
}

// ---- geometry --------------------------------------------------------------

struct Box {
    Vec3 extents{1, 1, 1};  // full side lengths
    Vec3 center{};
};
struct Ellipsoid {
    Vec3 semi_axes{1, 1, 1};
    Vec3 center{};
};
struct Shell {
    Surface surface = Sphere{};
    double eps = 0.1;  // half thickness
};
using Geometry = std::variant<Box, Ellipsoid, Shell>;

inline void validate(const Geometry& geom) {
    std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Box>) {
                if (!(g.extents.x > 0 && g.extents.y > 0 && g.extents.z > 0))
                    throw DomainError("box extents must be positive");
            } else if constexpr (std::is_same_v<T, Ellipsoid>) {
                if (!(g.semi_axes.x > 0 && g.semi_axes.y > 0 && g.semi_axes.z > 0))
                    throw DomainError("ellipsoid semi-axes must be positive");
            } else {
                validate(g.surface);
                if (!(g.eps > 0)) throw DomainError("shell half-thickness must be positive");
                if (!(g.eps < min_curvature_radius(g.surface)))
                    throw DomainError("shell half-thickness exceeds the curvature radius");
            }
        },
        geom);
}

inline bool contains(const Geometry& geom, const Vec3& x) {
    return std::visit(
        [&](const auto& g) -> bool {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Box>) {
                const Vec3 r = x - g.center;
                return std::abs(r.x) < 0.5 * g.extents.x && std::abs(r.y) < 0.5 * g.extents.y &&
                       std::abs(r.z) < 0.5 * g.extents.z;
            } else if constexpr (std::is_same_v<T, Ellipsoid>) {
                const Vec3 r = x - g.center;
                const double q = r.x * r.x / (g.semi_axes.x * g.semi_axes.x) +
                                 r.y * r.y / (g.semi_axes.y * g.semi_axes.y) +
                                 r.z * r.z / (g.semi_axes.z * g.semi_axes.z);
                return q < 1.0;
            } else {
                return std::abs(locate(g.surface, x).distance) < g.eps;
            }
        },
        geom);
}

inline void bounding_box(const Geometry& geom, Vec3& lo, Vec3& hi) {
    std::visit(
        [&](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            Vec3 c, r;
            if constexpr (std::is_same_v<T, Box>) {
                c = g.center;
                r = 0.5 * g.extents;
            } else if constexpr (std::is_same_v<T, Ellipsoid>) {
                c = g.center;
                r = g.semi_axes;
            } else {
                c = center_of(g.surface);
                r = half_extent(g.surface) + Vec3{g.eps, g.eps, g.eps};
            }
            lo = c - r;
            hi = c + r;
        },
        geom);
}

struct DomainMask {
    GridSpec grid;
    std::vector<std::uint8_t> inside;  // per storage cell
    std::size_t count = 0;

    DomainMask() = default;
    explicit DomainMask(const GridSpec& g) : grid(g), inside(g.size(), 0) {}

    bool operator()(int i, int j, int k) const { return inside[grid.index(i, j, k)] != 0; }
    double volume() const { return static_cast<double>(count) * grid.h * grid.h * grid.h; }
};

inline bool in_interior_block(const GridSpec& g, int i, int j, int k) {
    const int ii[3] = {i, j, k};
    for (int d = 0; d < 3; ++d)
        if (ii[d] < g.pad + 1 || ii[d] > g.pad + g.cells(d)) return false;
    return true;
}

inline DomainMask build_mask(const Geometry& geom, const GridSpec& grid) {
    grid.validate();
    validate(geom);
    Vec3 lo, hi;
    bounding_box(geom, lo, hi);
    const Vec3 glo = grid.interior_lo(), ghi = grid.interior_hi();
    const double slack = 1e-12 * grid.h;
    for (int d = 0; d < 3; ++d)
        if (lo[d] < glo[d] - slack || hi[d] > ghi[d] + slack)
            throw DomainError("geometry exceeds the interior block of the grid");
    DomainMask m(grid);
    for_active(grid, cell_stagger(), [&](int i, int j, int k, std::size_t idx) {
        if (in_interior_block(grid, i, j, k) && contains(geom, grid.cell_center(i, j, k))) {
            m.inside[idx] = 1;
            ++m.count;
        }
    });
    return m;
}

// ---- sampling --------------------------------------------------------------

inline ScalarField sample_cells(const GridSpec& g, const std::function<double(const Vec3&)>& f) {
    ScalarField out(g, Location::Cell);
    for_active(g, cell_stagger(), [&](int i, int j, int k, std::size_t idx) {
        out.v[idx] = f(g.cell_center(i, j, k));
    });
    return out;
}

inline ScalarField sample_nodes(const GridSpec& g, const std::function<double(const Vec3&)>& f) {
    ScalarField out(g, Location::Node);
    for_active(g, node_stagger(), [&](int i, int j, int k, std::size_t idx) {
        out.v[idx] = f(position(g, node_stagger(), i, j, k));
    });
    return out;
}

// f(x, c) gives component c at point x.
inline VectorField sample_vector(const GridSpec& g, Staggering st,
                                 const std::function<double(const Vec3&, int)>& f) {
    VectorField out(g, st);
    for (int c = 0; c < 3; ++c) {
        const Stagger s = stagger_of(st, c);
        for_active(g, s, [&](int i, int j, int k, std::size_t idx) {
            out.c[c][idx] = f(position(g, s, i, j, k), c);
        });
    }
    return out;
}

// Uniform magnetization `dir` on the geometry, sampled at face centers.
inline VectorField indicator_faces(const Geometry& geom, const GridSpec& g, const Vec3& dir) {
    return sample_vector(g, Staggering::Face, [&](const Vec3& x, int c) {
        return contains(geom, x) ? dir[c] : 0.0;
    });
}

// Throws if a face field has nonzero values outside the faces that bound
// interior-block cells.
inline void require_interior_support(const VectorField& m) {
    const GridSpec& g = m.grid;
    for (int c = 0; c < 3; ++c) {
        const Stagger s = m.stagger(c);
        bool bad = false;
        for_active(g, s, [&](int i, int j, int k, std::size_t idx) {
            if (m.c[c][idx] == 0.0 || bad) return;
            const int ii[3] = {i, j, k};
            for (int d = 0; d < 3; ++d) {
                const int hi = g.pad + g.cells(d) + (s[d] == Pos::Node ? 1 : 0);
                if (ii[d] < g.pad + 1 || ii[d] > hi) bad = true;
            }
        });
        if (bad) throw DomainError("magnetization is nonzero on padding cells");
    }
    for (const auto& comp : m.c)
        for (double x : comp)
            if (!std::isfinite(x)) throw DomainError("magnetization has non-finite values");
}

// ---- cell-centered vector fields -------------------------------------------

// One 3-vector per cell; used for micromagnetic magnetizations.
struct CellVectorField {
    GridSpec grid;
    std::vector<Vec3> v;

    CellVectorField() = default;
    explicit CellVectorField(const GridSpec& g) : grid(g), v(g.size()) {}

    Vec3& operator()(int i, int j, int k) { return v[grid.index(i, j, k)]; }
    const Vec3& operator()(int i, int j, int k) const { return v[grid.index(i, j, k)]; }
};

inline double inner(const CellVectorField& a, const CellVectorField& b) {
    detail::require_same(a.grid, b.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += dot(a.v[i], b.v[i]);
    return s * a.grid.h * a.grid.h * a.grid.h;
}

// Face value = mean of the two adjacent cells (zero beyond the active set).
inline VectorField face_average(const CellVectorField& m) {
    const GridSpec& g = m.grid;
    VectorField out(g, Staggering::Face);
    for (int c = 0; c < 3; ++c) {
        const std::size_t st = g.stride(c);
        for_active(g, face_stagger(c), [&](int, int, int, std::size_t idx) {
            out.c[c][idx] = 0.5 * (m.v[idx - st][c] + m.v[idx][c]);
        });
    }
    return out;
}

// Adjoint of face_average: cell value = mean of its two faces.
inline CellVectorField face_average_adjoint(const VectorField& f) {
    if (f.st != Staggering::Face) throw DomainError("expected a face field");
    const GridSpec& g = f.grid;
    CellVectorField out(g);
    for_active(g, cell_stagger(), [&](int, int, int, std::size_t idx) {
        Vec3 s;
        for (int c = 0; c < 3; ++c) s[c] = 0.5 * (f.c[c][idx] + f.c[c][idx + g.stride(c)]);
        out.v[idx] = s;
    });
    return out;
}

}  // namespace magnetovar
