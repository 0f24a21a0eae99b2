#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "fracdyn/geometry.hpp"
#include "fracdyn/mapexpr.hpp"
#include "fracdyn/parallel.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Carpet iteration schemes over D = [0,1]^2 and the gasket recursion over the
// unit triangle. Escape criteria group the sampled points into the kth
// approximation of the set.
// ---------------------------------------------------------------------------

struct Tent2D {};

struct ModTent2D {};

/// Stage terms psi_n(p) = (B sin(A_n x), B sin(A_n y)), A_n = pi * a^(n-1),
/// B = 1 / sin(pi / b). Non-iterative: each stage depends only on p and n.
struct SineScheme {
    double a = 3.0;
    double b = 3.0;
};

/// The autonomous form v' = B sin(a asin(v / B)), applied per coordinate.
struct AutoSine {
    double a = 3.0;
    double b = 3.0;
};

using CarpetScheme = std::variant<Tent2D, ModTent2D, SineScheme, AutoSine>;

enum class EscapeCriterion {
    AnyCoordinate,     // either coordinate has violated at some stage <= n
    BothEventually,    // both coordinates have violated, possibly at different stages
    BothSimultaneous,  // both raw stage-n values violate at the same n
};

/// Latched per-axis escape record. Latches are monotone: under the tent map a
/// coordinate exceeds 1 once and then diverges negative, so eventual-escape
/// criteria need memory.
struct EscapeState {
    Point2 value{};
    bool x_escaped = false;
    bool y_escaped = false;
    int stage = 0;
};

inline double sine_amplitude(double b) {
    const double s = std::sin(M_PI / b);
    if (s == 0.0 || !std::isfinite(s))
        throw std::domain_error("sine scheme: sin(pi/b) vanishes for b = " + std::to_string(b));
    return 1.0 / s;
}

inline void validate(const SineScheme& s) {
    if (!(s.a > 1.0) || !(s.b > 1.0))
        throw std::invalid_argument("sine scheme: parameters a, b must be > 1");
    sine_amplitude(s.b);
}

inline void validate(const AutoSine& s) {
    if (!(s.a > 1.0) || !(s.b > 1.0))
        throw std::invalid_argument("auto-sine scheme: parameters a, b must be > 1");
    sine_amplitude(s.b);
}

inline Point2 step_tent2d(const Point2& p) {
    return {1.5 - 3.0 * std::fabs(p.x - 0.5), 1.5 - 3.0 * std::fabs(p.y - 0.5)};
}

namespace detail {
inline double mod_tent_axis(double v) {
    if (v <= 0.5 || v > 1.0) return 3.0 * (v - std::floor(v));
    return 3.0 * (1.0 - v);
}
}  // namespace detail

inline Point2 step_mod_tent2d(const Point2& p) {
    return {detail::mod_tent_axis(p.x), detail::mod_tent_axis(p.y)};
}

/// Stage-n term of the sine scheme; n >= 1.
inline Point2 psi_term(const SineScheme& s, const Point2& p0, int n) {
    if (n < 1) throw std::invalid_argument("psi_term: stage must be >= 1");
    const double B = sine_amplitude(s.b);
    const double An = M_PI * std::pow(s.a, n - 1);
    return {B * std::sin(An * p0.x), B * std::sin(An * p0.y)};
}

/// One autonomous step. Throws std::domain_error when a coordinate lies
/// outside [-B, B]: the point has left the scheme's invariant region.
inline Point2 step_auto_sine(const AutoSine& s, const Point2& p) {
    const double B = sine_amplitude(s.b);
    auto axis = [&](double v) {
        if (std::fabs(v) > B)
            throw std::domain_error("auto-sine step: |" + std::to_string(v) + "| exceeds B = " +
                                    std::to_string(B));
        return B * std::sin(s.a * std::asin(v / B));
    };
    return {axis(p.x), axis(p.y)};
}

struct GasketTriple {
    double xp = 0.0;   // projection on the axis at +60 degrees
    double xpp = 0.0;  // projection on the axis at -60 degrees
    double y = 0.0;
};

/// Orthogonal projections onto the two slanted gasket axes through the origin.
inline GasketTriple gasket_project(const Point2& p) {
    return {(tri::kSqrt3 * p.x + p.y) / 2.0, (-tri::kSqrt3 * p.x + p.y) / 2.0, p.y};
}

/// Gasket recursion: profile functions applied to the scaled triple,
/// A_n = (2/sqrt3) * pi * a^n. Exclusion is the strict three-sign rule
/// (x'_n > 0, x''_n > 0, y_n < 0), not a coordinate-escape criterion.
struct GasketScheme {
    std::function<double(double)> alpha;
    std::function<double(double)> beta;
    std::function<double(double)> gamma;
    double a = 2.0;

    static GasketScheme classical() {
        auto s = [](double v) { return std::sin(v); };
        return {s, s, s, 2.0};
    }
};

inline void validate(const GasketScheme& s) {
    if (!(s.a > 1.0)) throw std::invalid_argument("gasket scheme: parameter a must be > 1");
    if (!s.alpha || !s.beta || !s.gamma)
        throw std::invalid_argument("gasket scheme: alpha, beta, gamma must all be set");
}

inline GasketTriple gasket_term(const GasketScheme& s, const Point2& p, int n) {
    if (n < 1) throw std::invalid_argument("gasket_term: stage must be >= 1");
    const GasketTriple t = gasket_project(p);
    const double An = 2.0 / tri::kSqrt3 * M_PI * std::pow(s.a, n);
    return {s.alpha(An * t.xp), s.beta(An * t.xpp), s.gamma(An * t.y)};
}

namespace detail {

struct CriterionTracker {
    EscapeCriterion criterion;
    bool lx = false;
    bool ly = false;

    /// Feeds the stage-n violation pair; true when the criterion fires.
    bool feed(bool vx, bool vy) {
        lx = lx || vx;
        ly = ly || vy;
        switch (criterion) {
            case EscapeCriterion::AnyCoordinate: return lx || ly;
            case EscapeCriterion::BothEventually: return lx && ly;
            case EscapeCriterion::BothSimultaneous: return vx && vy;
        }
        return false;
    }
};

/// Auto-sine axis with domain-exit absorption: once a value leaves [-B, B]
/// it is treated as escaped for every later stage.
inline double auto_sine_axis(double v, double a, double B) {
    if (std::fabs(v) > B) return std::numeric_limits<double>::infinity();
    return B * std::sin(a * std::asin(v / B));
}

}  // namespace detail

/// Smallest stage n <= k at which the criterion fires, or nullopt (member of
/// the kth approximation). Tent schemes use the coordinate condition v > 1;
/// sine schemes use |v| > 1.
inline std::optional<int> escape_index(const CarpetScheme& scheme, EscapeCriterion criterion,
                                       const Point2& p0, int k) {
    if (k < 1) throw std::invalid_argument("escape_index: depth must be >= 1");
    detail::CriterionTracker tracker{criterion};

    if (std::holds_alternative<Tent2D>(scheme) || std::holds_alternative<ModTent2D>(scheme)) {
        const bool modified = std::holds_alternative<ModTent2D>(scheme);
        Point2 p = p0;
        for (int n = 1; n <= k; ++n) {
            p = modified ? step_mod_tent2d(p) : step_tent2d(p);
            if (tracker.feed(p.x > 1.0, p.y > 1.0)) return n;
        }
        return std::nullopt;
    }

    if (const auto* s = std::get_if<SineScheme>(&scheme)) {
        const double B = sine_amplitude(s->b);
        for (int n = 1; n <= k; ++n) {
            const double An = M_PI * std::pow(s->a, n - 1);
            const double vx = B * std::sin(An * p0.x);
            const double vy = B * std::sin(An * p0.y);
            if (tracker.feed(std::fabs(vx) > 1.0, std::fabs(vy) > 1.0)) return n;
        }
        return std::nullopt;
    }

    const auto& s = std::get<AutoSine>(scheme);
    const double B = sine_amplitude(s.b);
    double vx = p0.x;
    double vy = p0.y;
    for (int n = 1; n <= k; ++n) {
        vx = detail::auto_sine_axis(vx, s.a, B);
        vy = detail::auto_sine_axis(vy, s.a, B);
        if (tracker.feed(std::fabs(vx) > 1.0, std::fabs(vy) > 1.0)) return n;
    }
    return std::nullopt;
}

/// Gasket exclusion: first n <= k with the strict sign triple (+, +, -).
inline std::optional<int> escape_index(const GasketScheme& scheme, const Point2& p0, int k) {
    if (k < 1) throw std::invalid_argument("escape_index: depth must be >= 1");
    const GasketTriple base = gasket_project(p0);
    for (int n = 1; n <= k; ++n) {
        const double An = 2.0 / tri::kSqrt3 * M_PI * std::pow(scheme.a, n);
        const double t1 = scheme.alpha(An * base.xp);
        const double t2 = scheme.beta(An * base.xpp);
        const double t3 = scheme.gamma(An * base.y);
        if (t1 > 0.0 && t2 > 0.0 && t3 < 0.0) return n;
    }
    return std::nullopt;
}

/// Raster of escape_index over the cell centers of spec; "member" encoded 0.
inline MembershipGrid membership_grid(const CarpetScheme& scheme, EscapeCriterion criterion,
                                      const GridSpec& spec, int k, int threads = 0) {
    spec.validate();
    MembershipGrid grid(spec, k);
    auto* cells = grid.cells().data();
    parallel_chunks(spec.cell_count(), threads, [&](long lo, long hi) {
        for (long idx = lo; idx < hi; ++idx) {
            const int i = static_cast<int>(idx % spec.width);
            const int j = static_cast<int>(idx / spec.width);
            const auto stage = escape_index(scheme, criterion, cell_center(spec, i, j), k);
            cells[idx] = static_cast<std::uint16_t>(stage.value_or(0));
        }
    });
    return grid;
}

/// Gasket raster over spec (normally the triangle's bounding box); cells whose
/// centers fall outside the triangle hold the sentinel k+1.
inline MembershipGrid membership_grid(const GasketScheme& scheme, const GridSpec& spec, int k,
                                      int threads = 0) {
    spec.validate();
    validate(scheme);
    MembershipGrid grid(spec, k);
    const std::uint16_t sentinel = grid.sentinel();
    auto* cells = grid.cells().data();
    parallel_chunks(spec.cell_count(), threads, [&](long lo, long hi) {
        for (long idx = lo; idx < hi; ++idx) {
            const int i = static_cast<int>(idx % spec.width);
            const int j = static_cast<int>(idx / spec.width);
            const Point2 c = cell_center(spec, i, j);
            if (!in_triangle(c)) {
                cells[idx] = sentinel;
                continue;
            }
            const auto stage = escape_index(scheme, c, k);
            cells[idx] = static_cast<std::uint16_t>(stage.value_or(0));
        }
    });
    return grid;
}

/// Builds a gasket profile from either a built-in function name or an
/// expression in x (e.g. "sin" or "sin(2*x)").
inline std::function<double(double)> make_profile(const std::string& text) {
    if (text == "sin") return [](double v) { return std::sin(v); };
    if (text == "cos") return [](double v) { return std::cos(v); };
    if (text == "tan") return [](double v) { return std::tan(v); };
    if (text == "atan") return [](double v) { return std::atan(v); };
    mapexpr::Expr e = mapexpr::parse_func(text);
    return [e](double v) { return mapexpr::eval_expr(e, mapexpr::env_x(v)); };
}

}  // namespace fracdyn
