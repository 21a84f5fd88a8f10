#pragma once

#include <cstdint>
#include <random>

#include <magnetovar/energy.hpp>
#include <magnetovar/kernel_fields.hpp>
#include <magnetovar/minimize.hpp>

namespace mvtest {

using namespace magnetovar;

inline ScalarField random_scalar(const GridSpec& g, Location loc, std::uint64_t seed) {
    return magnetovar::random_scalar(seed, g, loc);
}

inline VectorField random_vector(const GridSpec& g, Staggering st, std::uint64_t seed) {
    return magnetovar::random_vector(seed, g, st);
}

struct Ball {
    Geometry geom;
    GridSpec grid;
    DomainMask mask;
};

inline Ball unit_ball(int cells_across, double pad_ratio, double radius = 1.0) {
    SolverConfig cfg;
    cfg.pad_ratio = pad_ratio;
    Ball b;
    b.geom = Ellipsoid{{radius, radius, radius}, {}};
    b.grid = grid_for(b.geom, cells_across, cfg);
    b.mask = build_mask(b.geom, b.grid);
    return b;
}

inline double rel(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace mvtest
