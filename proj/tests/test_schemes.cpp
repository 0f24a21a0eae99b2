#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fracdyn/analysis.hpp"
#include "fracdyn/schemes.hpp"

using namespace fracdyn;

namespace {
const CarpetScheme kTent{Tent2D{}};
const CarpetScheme kModTent{ModTent2D{}};
const CarpetScheme kSine33{SineScheme{3.0, 3.0}};
const CarpetScheme kAuto33{AutoSine{3.0, 3.0}};
constexpr auto kBoth = EscapeCriterion::BothSimultaneous;

GridSpec unit_grid(int n) { return {RectDomain::unit_square(), n, n}; }
}  // namespace

TEST_CASE("tent map step") {
    auto p = step_tent2d({0.0, 0.0});
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
    p = step_tent2d({0.5, 0.5});
    CHECK(p.x == Catch::Approx(1.5));
    p = step_tent2d({0.2, 0.7});
    CHECK(p.x == Catch::Approx(0.6));
    CHECK(p.y == Catch::Approx(0.9));
}

TEST_CASE("modified tent map branches") {
    auto p = step_mod_tent2d({0.4, 0.7});
    CHECK(p.x == Catch::Approx(1.2));
    CHECK(p.y == Catch::Approx(0.9));
    p = step_mod_tent2d({1.5, 1.5});  // escaped values are absorbed
    CHECK(p.x == Catch::Approx(1.5));
    CHECK(p.y == Catch::Approx(1.5));
    p = step_mod_tent2d({0.5, 1.0});  // boundary branch checks
    CHECK(p.x == Catch::Approx(1.5));
    CHECK(p.y == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("psi terms of the sine scheme") {
    const SineScheme s{3.0, 3.0};
    auto p = psi_term(s, {0.5, 0.5}, 1);
    CHECK(p.x == Catch::Approx(1.1547005).epsilon(1e-6));
    CHECK(p.y == Catch::Approx(1.1547005).epsilon(1e-6));
    p = psi_term(s, {1.0 / 6, 1.0 / 6}, 1);
    CHECK(p.x == Catch::Approx(0.5773503).epsilon(1e-6));
    for (int n : {1, 3, 7}) {
        p = psi_term(s, {0.0, 0.0}, n);
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
    }
    CHECK_THROWS_AS(psi_term(s, {0.5, 0.5}, 0), std::invalid_argument);
}

TEST_CASE("autonomous sine step matches the cubic closed form for a = b = 3") {
    const AutoSine s{3.0, 3.0};
    auto p = step_auto_sine(s, {0.5, 0.0});
    CHECK(p.x == Catch::Approx(1.125).margin(1e-12));
    CHECK(p.y == 0.0);
    // triple-angle identity: step(x) = 3x(1 - x^2) exactly
    for (int i = 0; i <= 40; ++i) {
        const double x = -1.1 + 2.2 * i / 40.0;
        const double stepped = step_auto_sine(s, {x, 0.0}).x;
        CHECK(stepped == Catch::Approx(3.0 * x * (1.0 - x * x)).margin(1e-12));
    }
    CHECK_THROWS_AS(step_auto_sine(s, {1.2, 0.0}), std::domain_error);
}

TEST_CASE("psi identity: the autonomous step advances the term sequence (odd a)") {
    for (double a : {3.0, 5.0}) {
        const SineScheme s{a, 3.0};
        const AutoSine as{a, 3.0};
        const double B = sine_amplitude(s.b);
        for (double x0 : {0.013, 0.27, 0.482, 0.655, 0.91}) {
            for (int n = 1; n <= 5; ++n) {
                const double pn = psi_term(s, {x0, x0}, n).x;
                if (std::fabs(pn) > B) continue;
                const double next = step_auto_sine(as, {pn, 0.0}).x;
                const double expected = psi_term(s, {x0, x0}, n + 1).x;
                CHECK(next == Catch::Approx(expected).margin(1e-9));
            }
        }
    }
}

TEST_CASE("gasket projection triple") {
    auto t = gasket_project({0.0, 0.0});
    CHECK(t.xp == 0.0);
    CHECK(t.xpp == 0.0);
    t = gasket_project({0.0, 0.5773503});
    CHECK(t.xp == Catch::Approx(0.2886751).epsilon(1e-6));
    CHECK(t.xpp == Catch::Approx(0.2886751).epsilon(1e-6));
    CHECK(t.y == Catch::Approx(0.5773503));
    t = gasket_project({0.5, 0.8660254});
    CHECK(t.xp == Catch::Approx(0.8660254).epsilon(1e-6));
    CHECK(t.xpp == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("gasket recursion terms (classical scheme)") {
    const GasketScheme g = GasketScheme::classical();
    auto t = gasket_term(g, {0.0, tri::kSqrt3 / 3.0}, 1);
    CHECK(t.xp == Catch::Approx(0.8660254).epsilon(1e-6));
    CHECK(t.xpp == Catch::Approx(0.8660254).epsilon(1e-6));
    CHECK(t.y == Catch::Approx(-0.8660254).epsilon(1e-6));
    t = gasket_term(g, {0.0, 0.0}, 4);
    CHECK(t.xp == 0.0);
    CHECK(t.y == 0.0);
    t = gasket_term(g, {0.0, tri::kSqrt3 / 6.0}, 2);
    CHECK(t.xp == Catch::Approx(0.8660254).epsilon(1e-6));
    CHECK(t.y == Catch::Approx(-0.8660254).epsilon(1e-6));
}

TEST_CASE("escape indices match the worked examples") {
    CHECK(escape_index(kModTent, kBoth, {0.5, 0.5}, 6) == 1);
    CHECK(escape_index(kModTent, kBoth, {1.0 / 6, 0.5}, 6) == 2);
    CHECK(escape_index(kSine33, kBoth, {1.0 / 6, 1.0 / 6}, 6) == 2);
    const GasketScheme g = GasketScheme::classical();
    CHECK_FALSE(escape_index(g, {0.0, 0.0}, 10).has_value());
    CHECK(escape_index(g, {0.0, tri::kSqrt3 / 3.0}, 10) == 1);
}

TEST_CASE("gasket vertices stay members (strict inequalities)") {
    const GasketScheme g = GasketScheme::classical();
    CHECK_FALSE(escape_index(g, {0.0, 0.0}, 12).has_value());
    CHECK_FALSE(escape_index(g, {-0.5, tri::kHeight}, 12).has_value());
    CHECK_FALSE(escape_index(g, {0.5, tri::kHeight}, 12).has_value());
}

TEST_CASE("level-1 membership patterns on a 3x3 grid") {
    // carpet: only the center cell is excluded, at stage 1
    auto grid = membership_grid(kModTent, kBoth, unit_grid(3), 1);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            CHECK(grid.at(i, j) == ((i == 1 && j == 1) ? 1 : 0));

    // Cantor dust: middle row and column excluded, 4 corner cells survive
    grid = membership_grid(kTent, EscapeCriterion::AnyCoordinate, unit_grid(3), 1);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            CHECK(grid.is_member(i, j) == (i != 1 && j != 1));
}

TEST_CASE("single-cell grid shape check") {
    for (const auto& scheme : {kTent, kModTent, kSine33, kAuto33}) {
        auto grid = membership_grid(scheme, kBoth, unit_grid(1), 1);
        CHECK((grid.at(0, 0) == 0 || grid.at(0, 0) == 1));
    }
}

TEST_CASE("depth monotonicity: a finite escape index is stable under deeper runs") {
    for (const auto& scheme : {kTent, kModTent, kSine33, kAuto33}) {
        for (auto crit : {EscapeCriterion::AnyCoordinate, EscapeCriterion::BothEventually,
                          EscapeCriterion::BothSimultaneous}) {
            for (int s = 1; s <= 60; ++s) {
                const Point2 p{halton(static_cast<unsigned long>(s), 2),
                               halton(static_cast<unsigned long>(s), 3)};
                const auto at4 = escape_index(scheme, crit, p, 4);
                const auto at9 = escape_index(scheme, crit, p, 9);
                if (at4.has_value()) {
                    REQUIRE(at9.has_value());
                    CHECK(*at9 == *at4);
                } else if (at9.has_value()) {
                    CHECK(*at9 > 4);
                }
            }
        }
    }
}

TEST_CASE("criterion ordering: member sets nest") {
    for (const auto& scheme : {kTent, kModTent}) {
        auto any = membership_grid(scheme, EscapeCriterion::AnyCoordinate, unit_grid(81), 4);
        auto bev = membership_grid(scheme, EscapeCriterion::BothEventually, unit_grid(81), 4);
        auto bsim = membership_grid(scheme, EscapeCriterion::BothSimultaneous, unit_grid(81), 4);
        for (int j = 0; j < 81; ++j)
            for (int i = 0; i < 81; ++i) {
                if (any.is_member(i, j)) REQUIRE(bev.is_member(i, j));
                if (bev.is_member(i, j)) REQUIRE(bsim.is_member(i, j));
            }
    }
}

TEST_CASE("symmetry: carpet grids are invariant under swapping x and y") {
    for (const auto& scheme : {kTent, kModTent, kSine33, kAuto33}) {
        auto grid = membership_grid(scheme, kBoth, unit_grid(27), 3);
        for (int j = 0; j < 27; ++j)
            for (int i = 0; i < 27; ++i) CHECK(grid.at(i, j) == grid.at(j, i));
    }
}

TEST_CASE("symmetry: gasket raster is invariant under x -> -x") {
    const GridSpec spec{TriangleDomain::bounding_box(), 64, 55};
    auto grid = membership_grid(GasketScheme::classical(), spec, 4);
    for (int j = 0; j < spec.height; ++j)
        for (int i = 0; i < spec.width; ++i)
            CHECK(grid.at(i, j) == grid.at(spec.width - 1 - i, j));
}

TEST_CASE("gasket raster marks out-of-triangle cells with the sentinel") {
    const GridSpec spec{TriangleDomain::bounding_box(), 32, 28};
    auto grid = membership_grid(GasketScheme::classical(), spec, 3);
    CHECK(grid.is_sentinel(0, 0));               // bottom-left corner is outside
    CHECK(grid.is_sentinel(spec.width - 1, 0));  // bottom-right too
    long sentinels = 0;
    for (int j = 0; j < spec.height; ++j)
        for (int i = 0; i < spec.width; ++i)
            if (grid.is_sentinel(i, j)) ++sentinels;
    // the triangle covers half the bounding box
    CHECK(sentinels > spec.cell_count() / 3);
    CHECK(sentinels < 2 * spec.cell_count() / 3);
}

TEST_CASE("membership grids are identical for any thread count") {
    const auto one = membership_grid(kSine33, kBoth, unit_grid(64), 5, 1);
    const auto four = membership_grid(kSine33, kBoth, unit_grid(64), 5, 4);
    CHECK(one.cells() == four.cells());
}

TEST_CASE("scheme parameter validation") {
    CHECK_THROWS_AS(validate(SineScheme{0.5, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(SineScheme{3.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(AutoSine{3.0, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(validate(SineScheme{2.0, 3.5}));
    CHECK_THROWS_AS(escape_index(kModTent, kBoth, {0.5, 0.5}, 0), std::invalid_argument);
}

TEST_CASE("profile builder accepts names and expressions") {
    auto f = make_profile("sin");
    auto g = make_profile("sin(x)");
    for (double v : {0.0, 0.3, 1.7, -2.2}) CHECK(f(v) == g(v));
    CHECK_THROWS_AS(make_profile("sin(q)"), mapexpr::ParseError);
    CHECK_THROWS_AS(make_profile("sin(y)"), mapexpr::ParseError);  // y not allowed
}
