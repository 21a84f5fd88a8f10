#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

#include "errors.hpp"
#include "vec3.hpp"

namespace magnetovar {

struct Sphere {
    double radius = 1.0;
    Vec3 center{};
};

// Torus around the z axis through `center`.
struct Torus {
    double major = 1.0;
    double minor = 0.4;
    Vec3 center{};
};

using Surface = std::variant<Sphere, Torus>;

// Outward normal, principal directions and curvatures at a surface point.
// Curvatures are signed so that offsetting by s along n stretches the
// tau_i direction by (1 + s * kappa_i).
struct SurfaceFrame {
    Vec3 n, tau1, tau2;
    double kappa1 = 0.0, kappa2 = 0.0;

    double mean() const { return 0.5 * (kappa1 + kappa2); }
    double gauss() const { return kappa1 * kappa2; }
};

struct SurfacePoint {
    Vec3 xi;              // closest point on S
    double distance = 0;  // signed, positive outside
    SurfaceFrame frame;
};

inline void validate(const Surface& s) {
    std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                if (!(g.radius > 0)) throw DomainError("sphere radius must be positive");
            } else {
                if (!(g.minor > 0) || !(g.major > g.minor))
                    throw DomainError("torus needs 0 < minor < major");
            }
        },
        s);
}

namespace detail {

inline void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
    const Vec3 helper = std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    t1 = normalized(cross(helper, n));
    t2 = cross(n, t1);
}

inline SurfaceFrame torus_frame(const Torus& t, double phi, double theta) {
    SurfaceFrame f;
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double ct = std::cos(theta), st = std::sin(theta);
    f.n = {ct * cp, ct * sp, st};
    f.tau1 = {-sp, cp, 0.0};
    f.tau2 = {-st * cp, -st * sp, ct};
    f.kappa1 = ct / (t.major + t.minor * ct);
    f.kappa2 = 1.0 / t.minor;
    return f;
}

}  // namespace detail

inline Vec3 torus_point(const Torus& t, double phi, double theta) {
    const double rho = t.major + t.minor * std::cos(theta);
    return t.center + Vec3{rho * std::cos(phi), rho * std::sin(phi), t.minor * std::sin(theta)};
}

inline SurfacePoint locate(const Surface& s, const Vec3& x) {
    return std::visit(
        [&](const auto& g) -> SurfacePoint {
            using T = std::decay_t<decltype(g)>;
            SurfacePoint p;
            if constexpr (std::is_same_v<T, Sphere>) {
                const Vec3 r = x - g.center;
                const double len = norm(r);
                const Vec3 n = len > 0 ? r / len : Vec3{0, 0, 1};
                p.xi = g.center + g.radius * n;
                p.distance = len - g.radius;
                p.frame.n = n;
                detail::tangent_basis(n, p.frame.tau1, p.frame.tau2);
                p.frame.kappa1 = p.frame.kappa2 = 1.0 / g.radius;
            } else {
                const Vec3 r = x - g.center;
                const double rho = std::hypot(r.x, r.y);
                const double phi = rho > 0 ? std::atan2(r.y, r.x) : 0.0;
                const double dr = rho - g.major;
                const double tube = std::hypot(dr, r.z);
                const double theta = tube > 0 ? std::atan2(r.z, dr) : 0.0;
                p.xi = torus_point(g, phi, theta);
                p.distance = tube - g.minor;
                p.frame = detail::torus_frame(g, phi, theta);
            }
            return p;
        },
        s);
}

// Smallest radius of curvature; shells must be thinner than this.
inline double min_curvature_radius(const Surface& s) {
    return std::visit(
        [](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Sphere>) {
                return g.radius;
            } else {
                // |kappa_phi| peaks on the inner equator at 1/(R-r)
                return std::min(g.minor, g.major - g.minor);
            }
        },
        s);
}

inline double surface_area(const Surface& s) {
    using std::numbers::pi;
    return std::visit(
        [](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Sphere>)
                return 4.0 * pi * g.radius * g.radius;
            else
                return 4.0 * pi * pi * g.major * g.minor;
        },
        s);
}

// Half widths of the axis-aligned bounding box, and its center.
inline Vec3 half_extent(const Surface& s) {
    return std::visit(
        [](const auto& g) -> Vec3 {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Sphere>)
                return {g.radius, g.radius, g.radius};
            else
                return {g.major + g.minor, g.major + g.minor, g.minor};
        },
        s);
}

inline Vec3 center_of(const Surface& s) {
    return std::visit([](const auto& g) { return g.center; }, s);
}

}  // namespace magnetovar
