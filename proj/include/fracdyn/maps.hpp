#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdyn/geometry.hpp"
#include "fracdyn/mapexpr.hpp"

namespace fracdyn {

/// An invertible (or forward-only) plane map. The inverse returns nullopt for
/// points outside the image of the declared domain.
struct PlaneMap {
    std::string name;
    std::function<Point2(const Point2&)> forward;
    std::function<std::optional<Point2>(const Point2&)> inverse;  // empty when forward-only

    bool has_inverse() const { return static_cast<bool>(inverse); }
};

struct MapEvalError : std::runtime_error {
    Point2 point;
    MapEvalError(const Point2& p, const std::string& msg)
        : std::runtime_error(msg + " at point (" + std::to_string(p.x) + ", " +
                             std::to_string(p.y) + ")"),
          point(p) {}
};

inline Point2 apply_forward(const PlaneMap& map, const Point2& p) {
    try {
        return map.forward(p);
    } catch (const mapexpr::EvalError& e) {
        throw MapEvalError(p, std::string("map '") + map.name + "': " + e.what());
    }
}

/// Throws std::logic_error when the map has no inverse; nullopt when q is not
/// in the image ("not in D'").
inline std::optional<Point2> apply_inverse(const PlaneMap& map, const Point2& q) {
    if (!map.has_inverse())
        throw std::logic_error("map '" + map.name + "' has no inverse");
    try {
        return map.inverse(q);
    } catch (const mapexpr::EvalError&) {
        return std::nullopt;  // domain error while inverting = outside the image
    }
}

inline PlaneMap make_identity() {
    return {"identity", [](const Point2& p) { return p; },
            [](const Point2& q) { return std::optional<Point2>(q); }};
}

/// (a x + b y + c, d x + e y + f); invertible when the determinant is nonzero.
inline PlaneMap make_affine(double a, double b, double c, double d, double e, double f) {
    PlaneMap m;
    m.name = "affine";
    m.forward = [=](const Point2& p) {
        return Point2{a * p.x + b * p.y + c, d * p.x + e * p.y + f};
    };
    const double det = a * e - b * d;
    if (det != 0.0) {
        m.inverse = [=](const Point2& q) {
            const double u = q.x - c;
            const double v = q.y - f;
            return std::optional<Point2>{{(e * u - b * v) / det, (a * v - d * u) / det}};
        };
    }
    return m;
}

/// (x^2 + y^2, x - y). Inverse branch: y = (-eta + sqrt(2 xi - eta^2)) / 2,
/// x = y + eta; the unique in-domain preimage on the interior of [0,1]^2.
inline PlaneMap make_sumsq_diff() {
    PlaneMap m;
    m.name = "sumsq-diff";
    m.forward = [](const Point2& p) {
        return Point2{p.x * p.x + p.y * p.y, p.x - p.y};
    };
    m.inverse = [](const Point2& q) -> std::optional<Point2> {
        const double disc = 2.0 * q.x - q.y * q.y;
        if (disc < 0.0) return std::nullopt;
        const double y = (-q.y + std::sqrt(disc)) / 2.0;
        return Point2{y + q.y, y};
    };
    return m;
}

/// (sin x + y, cos x). Inverse takes x = acos(eta) (the [0, pi] branch that
/// covers x in [0,1]) and y = xi - sin x.
inline PlaneMap make_sin_shear() {
    PlaneMap m;
    m.name = "sin-shear";
    m.forward = [](const Point2& p) {
        return Point2{std::sin(p.x) + p.y, std::cos(p.x)};
    };
    m.inverse = [](const Point2& q) -> std::optional<Point2> {
        if (q.y < -1.0 || q.y > 1.0) return std::nullopt;
        const double x = std::acos(q.y);
        return Point2{x, q.x - std::sin(x)};
    };
    return m;
}

/// (x^2 - y, x + y^2); forward-only.
inline PlaneMap make_cross_poly() {
    PlaneMap m;
    m.name = "cross-poly";
    m.forward = [](const Point2& p) {
        return Point2{p.x * p.x - p.y, p.x + p.y * p.y};
    };
    return m;
}

/// (x + y^2, x - 2 y^(2/3)); forward-only. The fractional power is evaluated
/// as cbrt(y^2), the real branch, so negative y is legal.
inline PlaneMap make_shear_root() {
    PlaneMap m;
    m.name = "shear-root";
    m.forward = [](const Point2& p) {
        return Point2{p.x + p.y * p.y, p.x - 2.0 * std::cbrt(p.y * p.y)};
    };
    return m;
}

inline std::vector<std::string> registry_names() {
    return {"identity", "sumsq-diff", "sin-shear", "cross-poly", "shear-root"};
}

inline std::optional<PlaneMap> find_map(const std::string& name) {
    if (name == "identity") return make_identity();
    if (name == "sumsq-diff") return make_sumsq_diff();
    if (name == "sin-shear") return make_sin_shear();
    if (name == "cross-poly") return make_cross_poly();
    if (name == "shear-root") return make_shear_root();
    return std::nullopt;
}

/// Wraps a parsed map definition into a PlaneMap.
inline PlaneMap from_mapdef(const mapexpr::MapDef& def, std::string name = "expr") {
    PlaneMap m;
    m.name = std::move(name);
    const mapexpr::Expr fx = def.forward_x;
    const mapexpr::Expr fy = def.forward_y;
    m.forward = [fx, fy](const Point2& p) {
        const auto env = mapexpr::env_xy(p.x, p.y);
        return Point2{mapexpr::eval_expr(fx, env), mapexpr::eval_expr(fy, env)};
    };
    if (def.inverse) {
        const mapexpr::Expr gx = (*def.inverse)[0];
        const mapexpr::Expr gy = (*def.inverse)[1];
        m.inverse = [gx, gy](const Point2& q) -> std::optional<Point2> {
            const auto env = mapexpr::env_xy(q.x, q.y);
            return Point2{mapexpr::eval_expr(gx, env), mapexpr::eval_expr(gy, env)};
        };
    }
    return m;
}

}  // namespace fracdyn
