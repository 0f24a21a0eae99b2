#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fracdyn/analysis.hpp"
#include "fracdyn/fmi.hpp"
#include "fracdyn/maps.hpp"

using namespace fracdyn;

namespace {
constexpr auto kBoth = EscapeCriterion::BothSimultaneous;
const CarpetScheme kModTent{ModTent2D{}};

std::vector<Point2> halton_points(long n, const RectDomain& d = RectDomain::unit_square()) {
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long s = 1; s <= n; ++s)
        pts.push_back({d.x_min + d.width() * halton(static_cast<unsigned long>(s), 2),
                       d.y_min + d.height() * halton(static_cast<unsigned long>(s), 3)});
    return pts;
}
}  // namespace

TEST_CASE("forward evaluation of the registry maps") {
    const auto sumsq = make_sumsq_diff();
    auto q = apply_forward(sumsq, {0.8, 0.6});
    CHECK(q.x == Catch::Approx(1.0));
    CHECK(q.y == Catch::Approx(0.2));

    const auto id = make_identity();
    q = apply_forward(id, {0.37, -0.22});
    CHECK(q.x == 0.37);
    CHECK(q.y == -0.22);

    const auto shear = make_sin_shear();
    q = apply_forward(shear, {0.0, 1.0});
    CHECK(q.x == Catch::Approx(1.0));
    CHECK(q.y == Catch::Approx(1.0));

    const auto root = make_shear_root();
    q = apply_forward(root, {0.5, 1.0});
    CHECK(q.x == Catch::Approx(1.5));
    CHECK(q.y == Catch::Approx(-1.5));
    // negative y is legal through the real cube root
    q = apply_forward(root, {0.0, -1.0});
    CHECK(q.y == Catch::Approx(-2.0));
}

TEST_CASE("inverse evaluation and its soft failures") {
    const auto sumsq = make_sumsq_diff();
    auto p = apply_inverse(sumsq, {1.0, 0.2});
    REQUIRE(p.has_value());
    CHECK(p->x == Catch::Approx(0.8));
    CHECK(p->y == Catch::Approx(0.6));

    CHECK_FALSE(apply_inverse(sumsq, {0.0, 1.0}).has_value());  // 2 xi - eta^2 < 0

    const auto id = make_identity();
    p = apply_inverse(id, {0.1, 0.9});
    REQUIRE(p.has_value());
    CHECK(p->x == 0.1);

    const auto fwd_only = make_cross_poly();
    CHECK_FALSE(fwd_only.has_inverse());
    CHECK_THROWS_AS(apply_inverse(fwd_only, {0.0, 0.0}), std::logic_error);
}

TEST_CASE("round trip: inverse of forward is the identity on the domain") {
    const auto maps = {make_identity(), make_affine(0.5, 0, 0.1, 0, 0.5, 0.2),
                       make_affine(1.2, 0.3, -0.1, -0.2, 0.9, 0.4), make_sumsq_diff(),
                       make_sin_shear()};
    for (const auto& map : maps) {
        REQUIRE(map.has_inverse());
        for (const auto& u : halton_points(1000)) {
            const auto back = apply_inverse(map, apply_forward(map, u));
            REQUIRE(back.has_value());
            CHECK(dist(*back, u) < 1e-9);
        }
    }
}

TEST_CASE("degenerate affine maps are forward-only") {
    const auto flat = make_affine(1, 0, 0, 2, 0, 0);  // det = 0
    CHECK_FALSE(flat.has_inverse());
}

TEST_CASE("expression-defined maps agree with their native twins") {
    struct Pair {
        const char* text;
        PlaneMap native;
    };
    const Pair pairs[] = {
        {"x^2+y^2, x-y", make_sumsq_diff()},
        {"sin(x)+y, cos(x)", make_sin_shear()},
        {"x^2-y, x+y^2", make_cross_poly()},
        {"x+y^2, x-2*cbrt(y^2)", make_shear_root()},
    };
    for (const auto& [text, native] : pairs) {
        const PlaneMap parsed = from_mapdef(mapexpr::parse_map(text), "parsed");
        for (const auto& u : halton_points(1000)) {
            const auto a = apply_forward(parsed, u);
            const auto b = apply_forward(native, u);
            CHECK(std::fabs(a.x - b.x) < 1e-12);
            CHECK(std::fabs(a.y - b.y) < 1e-12);
        }
    }
}

TEST_CASE("parsed inverse branch matches the native sumsq-diff inverse") {
    const PlaneMap parsed = from_mapdef(
        mapexpr::parse_map("x^2+y^2, x-y | (y+sqrt(2*x-y^2))/2, (-y+sqrt(2*x-y^2))/2"),
        "parsed");
    const PlaneMap native = make_sumsq_diff();
    for (const auto& u : halton_points(1000)) {
        const auto q = apply_forward(native, u);
        const auto a = apply_inverse(parsed, q);
        const auto b = apply_inverse(native, q);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(dist(*a, *b) < 1e-12);
    }
    // domain failure in the expression inverse surfaces as "not in D'"
    CHECK_FALSE(apply_inverse(parsed, {0.0, 1.0}).has_value());
}

TEST_CASE("mapped escape index") {
    const auto id = make_identity();
    auto e = mapped_escape_index(id, kModTent, kBoth, {0.5, 0.5}, 6);
    CHECK_FALSE(e.outside);
    CHECK(e.stage == 1);

    const auto affine = make_affine(0.5, 0, 0.1, 0, 0.5, 0.2);
    e = mapped_escape_index(affine, kModTent, kBoth, {0.35, 0.45}, 6);
    CHECK_FALSE(e.outside);
    CHECK(e.stage == 1);  // preimage is the center hole

    const auto sumsq = make_sumsq_diff();
    e = mapped_escape_index(sumsq, kModTent, kBoth, {0.0, 1.0}, 4);
    CHECK(e.outside);  // no preimage exists
}

TEST_CASE("identity-mapped grid equals the unmapped grid cell-exactly") {
    const GridSpec spec{RectDomain::unit_square(), 81, 81};
    const auto plain = membership_grid(kModTent, kBoth, spec, 4);
    const auto mapped = mapped_membership_grid(make_identity(), kModTent, kBoth, spec, 4);
    CHECK(plain.cells() == mapped.cells());
}

TEST_CASE("affine pullback reproduces the unmapped grid on the matched lattice") {
    const auto affine = make_affine(0.5, 0, 0.1, 0, 0.5, 0.2);
    const GridSpec source{RectDomain::unit_square(), 81, 81};
    const GridSpec target{{0.1, 0.6, 0.2, 0.7}, 81, 81};
    const auto plain = membership_grid(kModTent, kBoth, source, 4);
    const auto mapped = mapped_membership_grid(affine, kModTent, kBoth, target, 4);
    for (int j = 0; j < 81; ++j)
        for (int i = 0; i < 81; ++i) CHECK(plain.at(i, j) == mapped.at(i, j));
}

TEST_CASE("mapped grids mark unreachable cells with the sentinel") {
    const auto sumsq = make_sumsq_diff();
    const GridSpec target{{-1.0, 3.0, -2.0, 2.0}, 40, 40};
    const auto grid = mapped_membership_grid(sumsq, kModTent, kBoth, target, 3);
    long sentinels = 0;
    for (int j = 0; j < 40; ++j)
        for (int i = 0; i < 40; ++i)
            if (grid.is_sentinel(i, j)) ++sentinels;
    CHECK(sentinels > 0);
    CHECK(sentinels < grid.spec().cell_count());
    // single-cell shape check
    const auto tiny = mapped_membership_grid(make_identity(), kModTent, kBoth,
                                             {RectDomain::unit_square(), 1, 1}, 1);
    CHECK((tiny.at(0, 0) == 0 || tiny.at(0, 0) == 1));
}

TEST_CASE("default mapped domain covers the image with padding") {
    const auto sumsq = make_sumsq_diff();
    const auto box = default_mapped_domain(sumsq, RectDomain::unit_square());
    CHECK(box.x_min == Catch::Approx(-0.1));
    CHECK(box.x_max == Catch::Approx(2.1));
    CHECK(box.y_min == Catch::Approx(-1.1));
    CHECK(box.y_max == Catch::Approx(1.1));
}

TEST_CASE("forward image points walk member cells in row-major order") {
    MembershipGrid grid({RectDomain::unit_square(), 2, 2}, 1);
    grid.set(0, 0, 1);  // members: (1,0), (0,1), (1,1)
    const auto id_result = forward_image_points(make_identity(), grid);
    REQUIRE(id_result.points.size() == 3);
    CHECK(id_result.errors.empty());
    CHECK(id_result.points[0].x == Catch::Approx(0.75));  // (1,0) first
    CHECK(id_result.points[0].y == Catch::Approx(0.25));
    CHECK(id_result.points[1].x == Catch::Approx(0.25));  // then row j=1
    CHECK(id_result.points[1].y == Catch::Approx(0.75));

    const auto cross = make_cross_poly();
    MembershipGrid origin_grid({{-0.5, 0.5, -0.5, 0.5}, 1, 1}, 1);
    const auto r = forward_image_points(cross, origin_grid);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].x == Catch::Approx(0.0).margin(1e-15));  // origin is fixed
    CHECK(r.points[0].y == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("forward image collects per-point errors without failing") {
    // log(x - 0.5) fails on the left half of the domain
    const PlaneMap partial = from_mapdef(mapexpr::parse_map("log(x-0.5), y"), "partial");
    MembershipGrid grid({RectDomain::unit_square(), 2, 1}, 1);
    const auto r = forward_image_points(partial, grid);
    CHECK(r.points.size() == 1);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].member_index == 0);
    CHECK(r.errors[0].source.x == Catch::Approx(0.25));
}

TEST_CASE("discrete orbits") {
    const auto id = make_identity();
    const std::vector<Point2> s0{{0.1, 0.2}, {0.3, 0.4}};
    auto orbit = discrete_orbit(id, s0, 0);
    CHECK(orbit.sets.size() == 1);

    orbit = discrete_orbit(id, s0, 3);
    REQUIRE(orbit.sets.size() == 4);
    for (const auto& set : orbit.sets) {
        REQUIRE(set.size() == 2);
        CHECK(set[0].x == 0.1);
        CHECK(set[1].y == 0.4);
    }

    const auto halve = make_affine(0.5, 0, 0, 0, 0.5, 0);
    orbit = discrete_orbit(halve, {{1.0, 1.0}}, 2);
    REQUIRE(orbit.sets.size() == 3);
    CHECK(orbit.sets[1][0].x == Catch::Approx(0.5));
    CHECK(orbit.sets[2][0].x == Catch::Approx(0.25));
    CHECK_THROWS_AS(discrete_orbit(id, s0, -1), std::invalid_argument);
}

TEST_CASE("pushforward verification: exact for affine at matched lattices") {
    const auto affine = make_affine(0.5, 0, 0.1, 0, 0.5, 0.2);
    const GridSpec source{RectDomain::unit_square(), 81, 81};
    const GridSpec target{{0.1, 0.6, 0.2, 0.7}, 81, 81};
    const auto report = verify_pushforward(affine, kModTent, kBoth, source, target, 4);
    CHECK(report.agreement == 1.0);
    CHECK(report.mapped_members == 4096);
    CHECK(report.image_only == 0);

    const auto id_report = verify_pushforward(make_identity(), kModTent, kBoth, source, source, 4);
    CHECK(id_report.agreement == 1.0);
    CHECK(id_report.image_only == 0);
}

TEST_CASE("pushforward verification: nonlinear invertible registry maps") {
    // 3x source oversampling guards against forward images skipping target cells
    const GridSpec source{RectDomain::unit_square(), 729, 729};
    for (const auto& name : {"sumsq-diff", "sin-shear"}) {
        const auto map = *find_map(name);
        const GridSpec target{default_mapped_domain(map, RectDomain::unit_square()), 243, 243};
        const auto report = verify_pushforward(map, kModTent, kBoth, source, target, 4);
        INFO("map: " << name << " agreement: " << report.agreement);
        CHECK(report.agreement >= 0.99);
    }
}

TEST_CASE("pushforward also holds for the sine scheme") {
    const GridSpec source{RectDomain::unit_square(), 729, 729};
    const auto map = make_sumsq_diff();
    const GridSpec target{default_mapped_domain(map, RectDomain::unit_square()), 243, 243};
    const auto report = verify_pushforward(map, CarpetScheme{SineScheme{3.0, 3.0}}, kBoth,
                                           source, target, 4);
    CHECK(report.agreement >= 0.99);
}

TEST_CASE("rasterize_points bins by nearest cell and ignores strays") {
    const GridSpec spec{RectDomain::unit_square(), 4, 4};
    const auto grid = rasterize_points({{0.1, 0.1}, {0.9, 0.9}, {2.0, 2.0}}, spec);
    CHECK(grid.is_member(0, 0));
    CHECK(grid.is_member(3, 3));
    CHECK(grid.member_count() == 2);
}
