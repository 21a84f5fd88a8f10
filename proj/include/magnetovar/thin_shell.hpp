#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

#include "magnetostatics.hpp"
#include "surface.hpp"

namespace magnetovar {

// ---- meshes ------------------------------------------------------------------

struct SurfaceMesh {
    Surface surface = Sphere{};
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise seen from outside
    std::vector<Vec3> normals;
    std::vector<double> mean_curvature, gauss_curvature;
    std::vector<double> area_weights;  // one third of the adjacent flat triangle areas
    std::vector<SurfaceFrame> frames;  // per vertex

    // per triangle
    std::vector<double> tri_area;
    std::vector<SurfaceFrame> tri_frame;  // at the centroid projected onto S
    std::vector<std::array<Vec3, 3>> tri_grad;  // gradients of the barycentric hat functions

    double max_abs_curvature() const {
        double k = 0.0;
        for (const auto& f : frames) k = std::max({k, std::abs(f.kappa1), std::abs(f.kappa2)});
        for (const auto& f : tri_frame) k = std::max({k, std::abs(f.kappa1), std::abs(f.kappa2)});
        return k;
    }
    double area() const {
        double a = 0.0;
        for (double t : tri_area) a += t;
        return a;
    }
};

namespace detail {

inline void finish_mesh(SurfaceMesh& m) {
    const std::size_t nv = m.vertices.size();
    m.normals.resize(nv);
    m.frames.resize(nv);
    m.mean_curvature.resize(nv);
    m.gauss_curvature.resize(nv);
    m.area_weights.assign(nv, 0.0);
    for (std::size_t i = 0; i < nv; ++i) {
        const SurfacePoint p = locate(m.surface, m.vertices[i]);
        m.frames[i] = p.frame;
        m.normals[i] = p.frame.n;
        m.mean_curvature[i] = p.frame.mean();
        m.gauss_curvature[i] = p.frame.gauss();
    }
    const std::size_t nt = m.triangles.size();
    m.tri_area.resize(nt);
    m.tri_frame.resize(nt);
    m.tri_grad.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        auto& tri = m.triangles[t];
        Vec3 p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
        const Vec3 c = (p0 + p1 + p2) / 3.0;
        const SurfacePoint sp = locate(m.surface, c);
        Vec3 nn = cross(p1 - p0, p2 - p0);
        if (dot(nn, sp.frame.n) < 0) {  // enforce outward orientation
            std::swap(tri[1], tri[2]);
            std::swap(p1, p2);
            nn = -nn;
        }
        const double a2 = norm(nn);
        const Vec3 un = nn / a2;
        m.tri_area[t] = 0.5 * a2;
        m.tri_frame[t] = sp.frame;
        m.tri_grad[t] = {cross(un, p2 - p1) / a2, cross(un, p0 - p2) / a2, cross(un, p1 - p0) / a2};
        for (int k = 0; k < 3; ++k) m.area_weights[tri[k]] += m.tri_area[t] / 3.0;
    }
}

inline SurfaceMesh icosphere(const Sphere& s, int level) {
    SurfaceMesh m;
    m.surface = s;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi},  {0, 1, phi},
                           {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p = normalized(p);
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back(normalized(v[a] + v[b]));
            const int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> nf;
        nf.reserve(f.size() * 4);
        for (const auto& t : f) {
            const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            nf.push_back({t[0], a, c});
            nf.push_back({t[1], b, a});
            nf.push_back({t[2], c, b});
            nf.push_back({a, b, c});
        }
        f = std::move(nf);
    }
    m.vertices.reserve(v.size());
    for (const auto& p : v) m.vertices.push_back(s.center + s.radius * p);
    m.triangles = std::move(f);
    finish_mesh(m);
    return m;
}

inline SurfaceMesh torus_mesh(const Torus& t, int level) {
    SurfaceMesh m;
    m.surface = t;
    const int nphi = 8 << level, ntheta = 4 << level;
    for (int i = 0; i < nphi; ++i)
        for (int j = 0; j < ntheta; ++j)
            m.vertices.push_back(torus_point(t, 2 * std::numbers::pi * i / nphi, 2 * std::numbers::pi * j / ntheta));
    auto id = [&](int i, int j) { return ((i + nphi) % nphi) * ntheta + (j + ntheta) % ntheta; };
    for (int i = 0; i < nphi; ++i)
        for (int j = 0; j < ntheta; ++j) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    finish_mesh(m);
    return m;
}

}  // namespace detail

// Level L: icosphere subdivided L times; torus with (8, 4) * 2^L quads.
inline SurfaceMesh make_mesh(const Surface& s, int level) {
    validate(s);
    if (level < 0 || level > 9) throw DomainError("mesh level must lie in [0, 9]");
    return std::visit(
        [&](const auto& g) -> SurfaceMesh {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Sphere>)
                return detail::icosphere(g, level);
            else
                return detail::torus_mesh(g, level);
        },
        s);
}

// Every undirected edge used by exactly two triangles, once in each direction.
inline bool is_closed_oriented(const SurfaceMesh& m) {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
    for (const auto& [e, n] : directed) {
        if (n != 1) return false;
        auto it = directed.find({e.second, e.first});
        if (it == directed.end() || it->second != 1) return false;
    }
    return true;
}

// ---- metric ------------------------------------------------------------------

struct MetricFactors {
    double sqrt_g = 1.0;
    double h1 = 1.0, h2 = 1.0;
};

inline MetricFactors metric_factors(const SurfaceFrame& f, double t, double eps) {
    if (!(eps >= 0.0)) throw DomainError("shell thickness must be nonnegative");
    if (std::abs(t) > 1.0 + 1e-12) throw DomainError("thickness coordinate outside [-1, 1]");
    const double s1 = 1.0 + eps * t * f.kappa1, s2 = 1.0 + eps * t * f.kappa2;
    if (eps * std::max(std::abs(f.kappa1), std::abs(f.kappa2)) >= 1.0)
        throw DomainError("shell thickness violates the tubular neighbourhood condition");
    MetricFactors m;
    m.sqrt_g = std::abs(1.0 + 2.0 * eps * t * f.mean() + eps * eps * t * t * f.gauss());
    m.h1 = 1.0 / s1;
    m.h2 = 1.0 / s2;
    return m;
}

inline MetricFactors metric_factors(const SurfaceMesh& mesh, int vertex, double t, double eps) {
    return metric_factors(mesh.frames.at(vertex), t, eps);
}

// ---- thickness quadrature ------------------------------------------------------

struct GaussLegendre {
    std::vector<double> nodes, weights;
};

inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
    GaussLegendre q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double p = std::legendre(n, x);
            const double pm = n > 0 ? std::legendre(n - 1, x) : 0.0;
            dp = n * (x * p - pm) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double p = std::legendre(n, x), pm = std::legendre(n - 1, x);
        dp = n * (x * p - pm) / (x * x - 1.0);
        q.nodes[n - 1 - i] = x;
        q.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return q;
}

// D[k][j] = derivative at node k of the j-th Lagrange basis polynomial.
inline std::vector<std::vector<double>> differentiation_matrix(const std::vector<double>& t) {
    const std::size_t n = t.size();
    std::vector<double> w(n, 1.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (k != j) w[j] /= (t[j] - t[k]);
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        double diag = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != k) {
                d[k][j] = (w[j] / w[k]) / (t[k] - t[j]);
                diag -= d[k][j];
            }
        d[k][k] = diag;
    }
    return d;
}

// m(xi, t) at (vertex, t_k).
struct ShellField {
    GaussLegendre rule;
    std::vector<std::vector<Vec3>> values;  // [node][vertex]
};

// Surface magnetizations as functions of the surface point.
using SurfaceVectorFn = std::function<Vec3(const SurfacePoint&)>;

inline SurfaceVectorFn constant_direction(const Vec3& e) {
    const Vec3 u = normalized(e);
    return [u](const SurfacePoint&) { return u; };
}
inline SurfaceVectorFn hedgehog() {
    return [](const SurfacePoint& p) { return p.frame.n; };
}
// First principal direction; on a torus the toroidal unit vector.
inline SurfaceVectorFn principal_tangent() {
    return [](const SurfacePoint& p) { return p.frame.tau1; };
}

inline std::vector<Vec3> sample_vertices(const SurfaceMesh& mesh, const SurfaceVectorFn& m0) {
    std::vector<Vec3> out(mesh.vertices.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m0(locate(mesh.surface, mesh.vertices[i]));
    return out;
}

inline ShellField make_shell_field(const SurfaceMesh& mesh, const std::function<Vec3(int, double)>& f,
                                   int nodes = 4) {
    if (nodes < 2) throw DomainError("shell field needs at least 2 thickness nodes");
    ShellField s;
    s.rule = gauss_legendre(nodes);
    s.values.assign(nodes, std::vector<Vec3>(mesh.vertices.size()));
    for (int k = 0; k < nodes; ++k)
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) s.values[k][v] = f(static_cast<int>(v), s.rule.nodes[k]);
    return s;
}

// m(xi, t) = m0(xi).
inline ShellField extend_constant_in_t(const SurfaceMesh& mesh, const std::vector<Vec3>& m0, int nodes = 4) {
    return make_shell_field(mesh, [&](int v, double) { return m0[v]; }, nodes);
}

namespace detail {

// Tangential derivative of per-vertex values along `dir` on triangle t.
inline Vec3 directional(const SurfaceMesh& mesh, std::size_t t, const std::vector<Vec3>& f, const Vec3& dir) {
    const auto& tri = mesh.triangles[t];
    const auto& g = mesh.tri_grad[t];
    return dot(g[0], dir) * f[tri[0]] + dot(g[1], dir) * f[tri[1]] + dot(g[2], dir) * f[tri[2]];
}

// sum over components of |grad_T f|^2 on triangle t
inline double grad_norm2(const SurfaceMesh& mesh, std::size_t t, const std::vector<Vec3>& f) {
    const auto& tri = mesh.triangles[t];
    const auto& g = mesh.tri_grad[t];
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Vec3 gc = f[tri[0]][c] * g[0] + f[tri[1]][c] * g[1] + f[tri[2]][c] * g[2];
        s += norm2(gc);
    }
    return s;
}

inline Vec3 centroid_value(const SurfaceMesh& mesh, std::size_t t, const std::vector<Vec3>& f) {
    const auto& tri = mesh.triangles[t];
    return (f[tri[0]] + f[tri[1]] + f[tri[2]]) / 3.0;
}

}  // namespace detail

// 1/2 int_M sum_i |h_i d_tau_i m|^2 sqrt_g + 1/(2 eps^2) int_M |d_t m|^2 sqrt_g
inline double shell_dirichlet_energy(const ShellField& m, const SurfaceMesh& mesh, double eps) {
    const std::size_t nk = m.rule.nodes.size();
    if (nk < 2) throw DomainError("shell energy needs at least 2 thickness nodes");
    if (!(eps > 0)) throw DomainError("shell thickness must be positive");
    if (eps * mesh.max_abs_curvature() >= 1.0)
        throw DomainError("shell thickness violates the tubular neighbourhood condition");
    const auto dmat = differentiation_matrix(m.rule.nodes);
    const std::size_t nv = mesh.vertices.size();
    std::vector<std::vector<Vec3>> dt(nk, std::vector<Vec3>(nv));
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t v = 0; v < nv; ++v) {
            Vec3 s;
            for (std::size_t j = 0; j < nk; ++j) s += dmat[k][j] * m.values[j][v];
            dt[k][v] = s;
        }
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const SurfaceFrame& f = mesh.tri_frame[t];
        for (std::size_t k = 0; k < nk; ++k) {
            const MetricFactors mf = metric_factors(f, m.rule.nodes[k], eps);
            const Vec3 d1 = detail::directional(mesh, t, m.values[k], f.tau1);
            const Vec3 d2 = detail::directional(mesh, t, m.values[k], f.tau2);
            const Vec3 dtm = detail::centroid_value(mesh, t, dt[k]);
            const double dens = 0.5 * (mf.h1 * mf.h1 * norm2(d1) + mf.h2 * mf.h2 * norm2(d2)) +
                                norm2(dtm) / (2.0 * eps * eps);
            e += m.rule.weights[k] * mesh.tri_area[t] * mf.sqrt_g * dens;
        }
    }
    return e;
}

namespace detail {

// (m0 . n)^2 averaged over the triangle's vertices with the exact vertex
// normals; vanishes identically for tangential fields.
inline double normal_component2(const SurfaceMesh& mesh, std::size_t t, const std::vector<Vec3>& m0) {
    const auto& tri = mesh.triangles[t];
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double mn = dot(m0[tri[k]], mesh.normals[tri[k]]);
        s += mn * mn;
    }
    return s / 3.0;
}

}  // namespace detail

// int_S (m0 . n)^2
inline double normal_anisotropy(const std::vector<Vec3>& m0, const SurfaceMesh& mesh) {
    if (m0.size() != mesh.vertices.size()) throw DomainError("one value per vertex expected");
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        e += mesh.tri_area[t] * detail::normal_component2(mesh, t, m0);
    return e;
}

// int_S |grad m0|^2 + (m0 . n)^2; the gradient of the linear interpolant is
// constant per triangle.
inline double limit_energy(const std::vector<Vec3>& m0, const SurfaceMesh& mesh) {
    if (m0.size() != mesh.vertices.size()) throw DomainError("one value per vertex expected");
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        e += mesh.tri_area[t] * (detail::grad_norm2(mesh, t, m0) + detail::normal_component2(mesh, t, m0));
    return e;
}

// ---- recovery profiles ------------------------------------------------------------

struct EtaProfile {
    double eps = 0.1, delta = 0.4;

    EtaProfile(double e, double d) : eps(e), delta(d) {
        if (!(eps > 0) || !(delta > eps)) throw DomainError("profile needs 0 < eps < delta");
    }
    double t_max() const { return delta / eps; }

    // Odd in t: linear inside the shell, linear decay to 0 at |t| = delta/eps.
    double operator()(double t) const {
        const double a = std::abs(t);
        if (a < 1.0) return t;
        if (a < t_max()) return std::copysign((delta - eps * a) / (delta - eps), t);
        return 0.0;
    }
    double derivative(double t) const {
        const double a = std::abs(t);
        if (a < 1.0) return 1.0;
        if (a < t_max()) return -eps / (delta - eps);
        return 0.0;
    }

    // int over [-delta/eps, delta/eps] of g(t), Gauss-Legendre on each linear piece.
    double integrate(const std::function<double(double)>& g, int nodes = 8) const {
        const GaussLegendre q = gauss_legendre(nodes);
        const double cuts[4] = {-t_max(), -1.0, 1.0, t_max()};
        double s = 0.0;
        for (int p = 0; p < 3; ++p) {
            const double a = cuts[p], b = cuts[p + 1], half = 0.5 * (b - a), mid = 0.5 * (a + b);
            for (int i = 0; i < nodes; ++i) s += half * q.weights[i] * g(mid + half * q.nodes[i]);
        }
        return s;
    }
};

inline double eta_profile(double t, double eps, double delta) { return EtaProfile(eps, delta)(t); }

// u(xi, t) = eps eta(t) (m0 . n), a(xi, t) = eps eta(t) (m0 x n), evaluated in
// space through the closest-point map, t = signed distance / eps.
class RecoveryPotential {
public:
    enum class Kind { Scalar, Vector };

    RecoveryPotential(Kind kind, SurfaceVectorFn m0, Surface s, double eps, double delta)
        : kind_(kind), m0_(std::move(m0)), surface_(std::move(s)), eta_(eps, delta) {
        if (!(delta < min_curvature_radius(surface_)))
            throw DomainError("extended shell violates the tubular neighbourhood condition");
    }

    const EtaProfile& profile() const { return eta_; }

    double scalar_at(const Vec3& x) const {
        const SurfacePoint p = locate(surface_, x);
        const double e = eta_(p.distance / eta_.eps);
        return e == 0.0 ? 0.0 : eta_.eps * e * dot(m0_(p), p.frame.n);
    }
    Vec3 vector_at(const Vec3& x) const {
        const SurfacePoint p = locate(surface_, x);
        const double e = eta_(p.distance / eta_.eps);
        return e == 0.0 ? Vec3{} : eta_.eps * e * cross(m0_(p), p.frame.n);
    }

    ScalarField sample_cells(const GridSpec& g) const {
        if (kind_ != Kind::Scalar) throw DomainError("vector potential sampled as scalar");
        return magnetovar::sample_cells(g, [&](const Vec3& x) { return scalar_at(x); });
    }
    VectorField sample_edges(const GridSpec& g) const {
        if (kind_ != Kind::Vector) throw DomainError("scalar potential sampled as vector");
        return sample_vector(g, Staggering::Edge, [&](const Vec3& x, int c) { return vector_at(x)[c]; });
    }

private:
    Kind kind_;
    SurfaceVectorFn m0_;
    Surface surface_;
    EtaProfile eta_;
};

// Fixed fraction of the smallest curvature radius, independent of eps.
// Scaling delta with eps would keep the profile tails from vanishing.
inline double default_recovery_delta(const Surface& s) { return 0.8 * min_curvature_radius(s); }

inline RecoveryPotential recovery_scalar_potential(SurfaceVectorFn m0, const Surface& s, double eps, double delta) {
    return {RecoveryPotential::Kind::Scalar, std::move(m0), s, eps, delta};
}
inline RecoveryPotential recovery_vector_potential(SurfaceVectorFn m0, const Surface& s, double eps, double delta) {
    return {RecoveryPotential::Kind::Vector, std::move(m0), s, eps, delta};
}

// int over M_{delta/eps} of f(xi) g(t), flat measure, f given per vertex.
inline double extended_shell_integral(const SurfaceMesh& mesh, const std::vector<double>& f, const EtaProfile& eta,
                                      const std::function<double(double)>& g) {
    double fs = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        fs += mesh.tri_area[t] * (f[tri[0]] + f[tri[1]] + f[tri[2]]) / 3.0;
    }
    return fs * eta.integrate(g);
}

// ||grad_xi a*||^2 over M_{delta/eps} = eps^2 int eta^2 dt * int_S |grad (m0 x n)|^2
inline double recovery_tangential_gradient_norm2(const SurfaceMesh& mesh, const std::vector<Vec3>& m0,
                                                 const EtaProfile& eta) {
    std::vector<Vec3> w(m0.size());
    for (std::size_t v = 0; v < w.size(); ++v) w[v] = cross(m0[v], mesh.normals[v]);
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) s += mesh.tri_area[t] * detail::grad_norm2(mesh, t, w);
    return eta.eps * eta.eps * eta.integrate([&](double t) { return eta(t) * eta(t); }) * s;
}

// ---- three-dimensional shell problems ----------------------------------------------

// m0 o pi on |dist| < eps, zero elsewhere, at face centers.
inline VectorField shell_magnetization(const SurfaceVectorFn& m0, const Surface& s, double eps, const GridSpec& g) {
    return sample_vector(g, Staggering::Face, [&](const Vec3& x, int c) {
        const SurfacePoint p = locate(s, x);
        return std::abs(p.distance) < eps ? m0(p)[c] : 0.0;
    });
}

namespace detail {

inline DomainMask shell_mask(const Surface& s, double eps, const GridSpec& g) {
    if (2.0 * eps / g.h < 3.0) throw DomainError("shell is thinner than 3 cells");
    return build_mask(Shell{s, eps}, g);
}

}  // namespace detail

// E_s / eps = (1 / 2 eps) ||grad u||^2
inline double shell_stray_energy_scaled(const SurfaceVectorFn& m0, const Surface& s, double eps, const GridSpec& g,
                                        const SolverConfig& cfg = {}) {
    const DomainMask mask = detail::shell_mask(s, eps, g);
    return solve_scalar_potential(shell_magnetization(m0, s, eps, g), mask, cfg).energy / eps;
}

struct RecoveryBounds {
    double lower = 0.0;  // W(m, u_eps) / eps
    double stray = 0.0;  // E_s / eps
    double upper = 0.0;  // V(m, a*_eps) / eps
};

inline RecoveryBounds recovery_bounds(const SurfaceVectorFn& m0, const Surface& s, double eps, double delta,
                                      const GridSpec& g, const SolverConfig& cfg = {}) {
    const DomainMask mask = detail::shell_mask(s, eps, g);
    const VectorField m = shell_magnetization(m0, s, eps, g);
    RecoveryBounds b;
    b.stray = solve_scalar_potential(m, mask, cfg).energy / eps;
    b.lower = functional_W(m, recovery_scalar_potential(m0, s, eps, delta).sample_cells(g)) / eps;
    b.upper = functional_V(m, recovery_vector_potential(m0, s, eps, delta).sample_edges(g)) / eps;
    return b;
}

// ---- convergence study ---------------------------------------------------------

// One grid for every eps: `total_cells` cells along the longest axis, `pad_cells`
// of them padding, interior block = surface box grown by `margin`.
struct GridPolicy {
    int total_cells = 96;
    int pad_cells = 12;
    double margin = 0.2;
};

inline GridSpec grid_from_policy(const Surface& s, const GridPolicy& p) {
    const int interior = p.total_cells - 2 * p.pad_cells;
    if (interior < 2 || p.pad_cells < 0) throw ConfigError("grid policy leaves no interior cells");
    const Vec3 half = half_extent(s) + Vec3{p.margin, p.margin, p.margin};
    const double hmax = std::max({half.x, half.y, half.z});
    GridSpec g;
    g.h = 2.0 * hmax / interior;
    int n[3];
    for (int d = 0; d < 3; ++d) n[d] = std::max(2, static_cast<int>(std::ceil(2.0 * half[d] / g.h - 1e-9)));
    g.nx = n[0];
    g.ny = n[1];
    g.nz = n[2];
    g.origin = center_of(s) - 0.5 * g.h * Vec3{double(n[0]), double(n[1]), double(n[2])};
    g.pad = p.pad_cells;
    g.validate();
    return g;
}

struct StudyRow {
    double eps = 0.0;
    double exchange = 0.0;      // shell Dirichlet energy of m0 extended constantly in t
    double stray_scaled = 0.0;  // E_s / eps
    double total = 0.0;
    double limit = 0.0;  // limit_energy(m0)
    double gap = 0.0;    // |total - limit| / |limit| (absolute if limit == 0)
};

struct StudyOptions {
    GridPolicy grid;
    int mesh_level = 4;
    int t_nodes = 4;
    unsigned threads = 1;
};

inline std::vector<StudyRow> convergence_study(const Surface& s, const SurfaceVectorFn& m0,
                                               const std::vector<double>& eps_list, const StudyOptions& opt,
                                               const SolverConfig& cfg = {}) {
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps list must be strictly decreasing");
    std::vector<StudyRow> rows(eps_list.size());
    if (eps_list.empty()) return rows;
    cfg.validate();
    const SurfaceMesh mesh = make_mesh(s, opt.mesh_level);
    const std::vector<Vec3> mv = sample_vertices(mesh, m0);
    const double limit = limit_energy(mv, mesh);
    const ShellField field = extend_constant_in_t(mesh, mv, opt.t_nodes);
    const GridSpec g = grid_from_policy(s, opt.grid);

    auto work = [&](std::size_t i) {
        StudyRow& r = rows[i];
        r.eps = eps_list[i];
        r.exchange = shell_dirichlet_energy(field, mesh, r.eps);
        r.stray_scaled = shell_stray_energy_scaled(m0, s, r.eps, g, cfg);
        r.total = r.exchange + r.stray_scaled;
        r.limit = limit;
        r.gap = limit != 0.0 ? std::abs(r.total - limit) / std::abs(limit) : std::abs(r.total - limit);
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(rows.size())));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) work(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nthreads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard lock(fail_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace magnetovar
