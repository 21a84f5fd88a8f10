#include <catch_amalgamated.hpp>

#include <numbers>

#include "support.hpp"

using namespace magnetovar;
using Catch::Approx;

namespace {

CellVectorField on_mask(const DomainMask& mask, const std::function<Vec3(const Vec3&)>& f) {
    CellVectorField m(mask.grid);
    for_active(mask.grid, cell_stagger(), [&](int i, int j, int k, std::size_t idx) {
        if (mask.inside[idx]) m.v[idx] = normalized(f(mask.grid.cell_center(i, j, k)));
    });
    return m;
}

EnergyTerms only(bool ex, bool an, bool ze, bool st) { return {ex, an, ze, st}; }

// Maps cell (i,j,k) to (j,i,k) and swaps the x/y components: a symmetry of
// a cube grid.
CellVectorField swap_xy(const CellVectorField& m) {
    CellVectorField out(m.grid);
    const GridSpec& g = m.grid;
    for (int i = 0; i < g.dim(0); ++i)
        for (int j = 0; j < g.dim(1); ++j)
            for (int k = 0; k < g.dim(2); ++k) {
                const Vec3 v = m.v[g.index(i, j, k)];
                out.v[g.index(j, i, k)] = {v.y, v.x, v.z};
            }
    return out;
}

}  // namespace

TEST_CASE("material parameters", "[energy]") {
    MaterialParams p;
    CHECK_NOTHROW(p.validate());
    p.Q = -1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.Q = 1;
    p.easy_axis = {1, 1, 0};
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("unit norm precondition names the cell", "[energy]") {
    const auto b = mvtest::unit_ball(6, 0.5);
    CellVectorField m = uniform_field(b.mask, {0, 0, 1});
    CHECK_NOTHROW(require_unit_on_mask(m, b.mask));
    const std::size_t c = b.grid.index(b.grid.pad + 3, b.grid.pad + 3, b.grid.pad + 3);
    REQUIRE(b.mask.inside[c]);
    m.v[c] = {0, 0, 1.1};
    try {
        exchange_energy(m, b.mask);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        const std::string w = e.what();
        const std::string at = std::to_string(b.grid.pad + 3);
        CHECK(w.find("(" + at + "," + at + "," + at + ")") != std::string::npos);
    }
    m = uniform_field(b.mask, {0, 0, 1});
    m.v[0] = {1, 0, 0};  // nonzero outside the mask
    CHECK_THROWS_AS(zeeman_energy(m, MaterialParams{}, b.mask), DomainError);
}

TEST_CASE("exchange energy", "[energy]") {
    const GridSpec g = cube_grid(16, 4.0, 1);
    const DomainMask mask = build_mask(Box{{8, 8, 8}, {}}, g);
    CHECK(exchange_energy(uniform_field(mask, {1, 2, 3}), mask) == 0.0);

    const double q = std::numbers::pi / 4;
    const CellVectorField helix = on_mask(mask, [&](const Vec3& x) { return Vec3{std::cos(q * x.x), std::sin(q * x.x), 0}; });
    // density 1/2 q^2 over the region spanned by interior links (15 of 16 per row)
    const double per_link = 0.5 * q * q * g.h * g.h * g.h * 15 * 16 * 16;
    CHECK(exchange_energy(helix, mask) == Approx(per_link).epsilon(0.02));

    CellVectorField flip = uniform_field(mask, {0, 0, 1});
    flip.v[g.index(8, 8, 8)] = {0, 0, -1};
    CHECK(exchange_energy(flip, mask) > 0.0);
}

TEST_CASE("anisotropy and zeeman", "[energy]") {
    const auto b = mvtest::unit_ball(8, 0.5);
    MaterialParams p;
    p.Q = 2.0;
    p.easy_axis = {0, 0, 1};
    CHECK(anisotropy_energy(uniform_field(b.mask, {0, 0, -1}), p, b.mask) == 0.0);
    CHECK(anisotropy_energy(uniform_field(b.mask, {1, 0, 0}), p, b.mask) == Approx(0.5 * p.Q * b.mask.volume()));
    const CellVectorField r = random_cells(4, b.mask);
    const double ea = anisotropy_energy(r, p, b.mask);
    CHECK(ea >= 0.0);
    CHECK(ea <= 0.5 * p.Q * b.mask.volume());
    p.Q = 0;
    CHECK(anisotropy_energy(r, p, b.mask) == 0.0);

    MaterialParams z;
    CHECK(zeeman_energy(r, z, b.mask) == 0.0);
    z.h_applied = Vec3{0, 0, 0.7};
    CHECK(zeeman_energy(uniform_field(b.mask, {0, 0, 1}), z, b.mask) == Approx(-0.7 * b.mask.volume()));
    CHECK(zeeman_energy(uniform_field(b.mask, {1, 0, 0}), z, b.mask) == Approx(0.0).margin(1e-15));

    // field-valued applied field
    CellVectorField ha(b.grid);
    for (auto& v : ha.v) v = {0, 0, 0.7};
    z.h_applied = ha;
    CHECK(zeeman_energy(uniform_field(b.mask, {0, 0, 1}), z, b.mask) == Approx(-0.7 * b.mask.volume()));
}

TEST_CASE("total energy examples", "[energy]") {
    SECTION("uniform ball is pure stray energy") {
        const auto b = mvtest::unit_ball(16, 2.0);
        const CellVectorField m = uniform_field(b.mask, {0, 0, 1});
        const EnergyBreakdown e = total_energy(m, MaterialParams{}, b.mask);
        CHECK(e.exchange == 0.0);
        CHECK(e.anisotropy == 0.0);
        CHECK(e.zeeman == 0.0);
        CHECK(e.total == e.stray);
        // face averaging smears the boundary; coarse grid tolerance
        CHECK(std::abs(e.stray / b.mask.volume() * 6.0 - 1.0) <= 0.1);
        // stray term equals -1/2 <h_m, m> too
        const VectorField pm = face_average(m);
        CHECK(e.stray == Approx(-0.5 * inner(stray_field(pm, b.mask), pm)).epsilon(1e-8));
    }
    SECTION("aligned zeeman with stray disabled") {
        const auto b = mvtest::unit_ball(8, 0.5);
        MaterialParams p;
        p.h_applied = Vec3{0, 2, 0};
        const EnergyBreakdown e = total_energy(uniform_field(b.mask, {0, 1, 0}), p, b.mask, {}, only(true, true, true, false));
        CHECK(e.total == Approx(-2.0 * b.mask.volume()));
    }
    SECTION("empty mask") {
        const GridSpec g = cube_grid(4, 1.0, 1);
        DomainMask empty(g);
        const EnergyBreakdown e = total_energy(CellVectorField(g), MaterialParams{}, empty);
        CHECK(e.total == 0.0);
        CHECK(e.stray == 0.0);
    }
}

TEST_CASE("effective field examples", "[energy]") {
    const auto b = mvtest::unit_ball(8, 0.5);
    MaterialParams p;
    const CellVectorField u = uniform_field(b.mask, {1, 0, 0});
    const CellVectorField f0 = effective_field(u, p, b.mask, {}, only(true, true, true, false));
    for (const Vec3& v : f0.v) CHECK(norm(v) == 0.0);

    p.h_applied = Vec3{0.3, -0.1, 0.2};
    const CellVectorField r = random_cells(2, b.mask);
    const CellVectorField fz = effective_field(r, p, b.mask, {}, only(false, false, true, false));
    for (std::size_t i = 0; i < fz.v.size(); ++i)
        if (b.mask.inside[i]) {
            CHECK(fz.v[i].x == 0.3);
            CHECK(fz.v[i].y == -0.1);
            CHECK(fz.v[i].z == 0.2);
        }
}

TEST_CASE("effective field matches central differences", "[energy]") {
    const auto b = mvtest::unit_ball(8, 1.0, 2.0);
    MaterialParams p;
    p.Q = 0.7;
    p.easy_axis = normalized(Vec3{1, 1, 1});
    p.h_applied = Vec3{0.1, 0.2, -0.3};
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const CellVectorField m = random_cells(17, b.mask);
    const CellVectorField f = effective_field(m, p, b.mask, cfg);
    auto energy = [&](const CellVectorField& x) { return total_energy(x, p, b.mask, cfg).total; };
    for (std::uint64_t s = 0; s < 4; ++s) {
        CellVectorField d = random_cells(100 + s, b.mask, false);
        for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] -= dot(d.v[i], m.v[i]) * m.v[i];
        const double exact = -inner(f, d);
        auto fd = [&](double t) {
            return (energy(detail::retract(m, d, t, b.mask)) - energy(detail::retract(m, d, -t, b.mask))) / (2 * t);
        };
        CHECK(std::abs(fd(1e-4) - exact) <= 1e-5 * std::abs(exact));
        const double e1 = std::abs(fd(2e-3) - exact), e2 = std::abs(fd(1e-3) - exact);
        CHECK(e1 / e2 == Approx(4.0).epsilon(0.2));
    }
}

TEST_CASE("energies are invariant under grid symmetries", "[energy]") {
    const auto b = mvtest::unit_ball(8, 0.5);
    MaterialParams p, ps;
    p.Q = 1.3;
    p.easy_axis = normalized(Vec3{1, 0.5, 0.2});
    p.h_applied = Vec3{0.4, -0.2, 0.1};
    ps.Q = p.Q;
    ps.easy_axis = normalized(Vec3{0.5, 1, 0.2});
    ps.h_applied = Vec3{-0.2, 0.4, 0.1};
    const CellVectorField m = random_cells(33, b.mask);
    const EnergyBreakdown a = total_energy(m, p, b.mask);
    const EnergyBreakdown c = total_energy(swap_xy(m), ps, b.mask);
    CHECK(a.exchange == Approx(c.exchange).epsilon(1e-12));
    CHECK(a.anisotropy == Approx(c.anisotropy).epsilon(1e-12));
    CHECK(a.zeeman == Approx(c.zeeman).epsilon(1e-12));
    CHECK(a.stray == Approx(c.stray).epsilon(1e-8));
}
