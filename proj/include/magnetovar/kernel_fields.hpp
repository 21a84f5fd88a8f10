#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "field_grid.hpp"

namespace magnetovar {

enum class TestFieldKind { SolenoidalBump, GradientBump, Random };

// Curl-free generator xi(x) = constant + sym * (x - center), sym symmetric,
// i.e. the gradient of a quadratic.
struct CurlFreeGenerator {
    Vec3 constant{0, 0, 1};
    Mat3 sym{};  // only the symmetric part is used

    Vec3 operator()(const Vec3& r) const {
        Vec3 out = constant;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out[i] += 0.5 * (sym[i][j] + sym[j][i]) * r[j];
        return out;
    }
};

struct TestFieldSpec {
    TestFieldKind kind = TestFieldKind::SolenoidalBump;
    double radius = 1.0;  // cutoff radius r0
    Vec3 center{};
    CurlFreeGenerator xi;
    double amplitude = 1.0;  // gradient bump: v = amplitude * gaussian * cutoff
    double width = 0.35;     // gaussian standard deviation
    std::uint64_t seed = 0;
};

// Quintic smoothstep: 1 on [0, r0/2], 0 beyond r0, C2 in between.
inline double cutoff(double r, double r0) {
    double s = (r0 - r) / (0.5 * r0);
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

namespace detail {

inline void require_ball_inside(const TestFieldSpec& spec, const GridSpec& g, double margin) {
    if (!(spec.radius > 0)) throw DomainError("bump radius must be positive");
    const Vec3 lo = g.interior_lo(), hi = g.interior_hi();
    for (int d = 0; d < 3; ++d)
        if (spec.center[d] - spec.radius - margin < lo[d] || spec.center[d] + spec.radius + margin > hi[d])
            throw DomainError("bump support leaves the interior block");
}

}  // namespace detail

// rho(|x|) (xi(x) x x) sampled at face centers: divergence-free in the
// continuum, O(h^2) discretely.
inline VectorField solenoidal_bump(const TestFieldSpec& spec, const GridSpec& g) {
    detail::require_ball_inside(spec, g, 0.0);
    return sample_vector(g, Staggering::Face, [&](const Vec3& x, int c) {
        const Vec3 r = x - spec.center;
        const double rho = cutoff(norm(r), spec.radius);
        if (rho == 0.0) return 0.0;
        return rho * cross(spec.xi(r), r)[c];
    });
}

inline double bump_potential(const TestFieldSpec& spec, const Vec3& x) {
    const Vec3 r = x - spec.center;
    const double rr = norm2(r);
    return spec.amplitude * std::exp(-0.5 * rr / (spec.width * spec.width)) * cutoff(std::sqrt(rr), spec.radius);
}

// Discrete gradient of the bump potential sampled at cell centers, so the
// result is a gradient field exactly, not just to truncation order.
inline VectorField gradient_bump(const TestFieldSpec& spec, const GridSpec& g) {
    detail::require_ball_inside(spec, g, g.h);
    const ScalarField v = sample_cells(g, [&](const Vec3& x) { return bump_potential(spec, x); });
    return grad(v);
}

// Gaussian 3-vectors per mask cell, optionally normalized; zero elsewhere.
inline CellVectorField random_cells(std::uint64_t seed, const DomainMask& mask, bool normalize = true) {
    const GridSpec& g = mask.grid;
    CellVectorField m(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for_active(g, cell_stagger(), [&](int, int, int, std::size_t idx) {
        if (!mask.inside[idx]) return;
        Vec3 v;
        do {
            v = {gauss(rng), gauss(rng), gauss(rng)};
        } while (norm2(v) < 1e-20);
        m.v[idx] = normalize ? normalized(v) : v;
    });
    return m;
}

// Gaussian values on every active entry of the grid, padding included.
inline ScalarField random_scalar(std::uint64_t seed, const GridSpec& g, Location loc = Location::Cell) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    ScalarField f(g, loc);
    for_active(g, f.stagger(), [&](int, int, int, std::size_t idx) { f.v[idx] = n(rng); });
    return f;
}

inline VectorField random_vector(std::uint64_t seed, const GridSpec& g, Staggering st = Staggering::Face) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    VectorField f(g, st);
    for (int c = 0; c < 3; ++c)
        for_active(g, f.stagger(c), [&](int, int, int, std::size_t idx) { f.c[c][idx] = n(rng); });
    return f;
}

// Random cell field mapped to faces by averaging.
inline VectorField random_masked(std::uint64_t seed, const DomainMask& mask, bool normalize = true) {
    return face_average(random_cells(seed, mask, normalize));
}

inline VectorField make_test_field(const TestFieldSpec& spec, const GridSpec& g, const DomainMask* mask = nullptr) {
    switch (spec.kind) {
        case TestFieldKind::SolenoidalBump: return solenoidal_bump(spec, g);
        case TestFieldKind::GradientBump: return gradient_bump(spec, g);
        case TestFieldKind::Random:
            if (!mask) throw DomainError("random test field needs a mask");
            return random_masked(spec.seed, *mask);
    }
    throw DomainError("unknown test field kind");
}

}  // namespace magnetovar
