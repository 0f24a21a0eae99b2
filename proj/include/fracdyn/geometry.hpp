#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracdyn {

/// A point of the plane. The universal currency of schemes, maps and flows.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool finite(const Point2& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

inline double norm(const Point2& p) { return std::hypot(p.x, p.y); }

inline double dist(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Axis-aligned rectangle, the sampling window of carpet schemes.
struct RectDomain {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw std::invalid_argument("RectDomain: require x_min < x_max and y_min < y_max");
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }

    bool contains(const Point2& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    static RectDomain unit_square() { return {0.0, 1.0, 0.0, 1.0}; }
};

namespace tri {
inline const double kHeight = std::sqrt(3.0) / 2.0;  // apex height of the unit triangle
inline const double kSqrt3 = std::sqrt(3.0);
}  // namespace tri

/// The fixed unit equilateral triangle with vertices (0,0), (-1/2, sqrt3/2), (1/2, sqrt3/2).
/// Membership: -y/sqrt3 <= x <= y/sqrt3 and 0 <= y <= sqrt3/2 (boundary closed).
struct TriangleDomain {
    bool contains(const Point2& p) const {
        return p.y >= 0.0 && p.y <= tri::kHeight && p.x >= -p.y / tri::kSqrt3 &&
               p.x <= p.y / tri::kSqrt3;
    }

    /// Bounding box used when rasterizing gaskets.
    static RectDomain bounding_box() { return {-0.5, 0.5, 0.0, tri::kHeight}; }
};

inline bool in_triangle(const Point2& p) { return TriangleDomain{}.contains(p); }

/// Raster sampling of a rectangular domain: width x height cells, one sample
/// at each cell center. Row j = 0 sits at the domain's minimal y.
struct GridSpec {
    RectDomain domain;
    int width = 1;
    int height = 1;

    void validate() const {
        domain.validate();
        if (width < 1 || height < 1)
            throw std::invalid_argument("GridSpec: width and height must be >= 1");
    }

    long cell_count() const { return static_cast<long>(width) * height; }
    double cell_width() const { return domain.width() / width; }
    double cell_height() const { return domain.height() / height; }
};

inline Point2 cell_center(const GridSpec& spec, int i, int j) {
    if (i < 0 || i >= spec.width || j < 0 || j >= spec.height)
        throw std::out_of_range("cell_center: index (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside " + std::to_string(spec.width) +
                                "x" + std::to_string(spec.height) + " grid");
    return {spec.domain.x_min + (i + 0.5) * spec.domain.width() / spec.width,
            spec.domain.y_min + (j + 0.5) * spec.domain.height() / spec.height};
}

/// Cell indices containing p, or {-1,-1} when p falls outside the domain.
struct CellIndex {
    int i = -1;
    int j = -1;
    bool valid() const { return i >= 0; }
};

inline CellIndex cell_of(const GridSpec& spec, const Point2& p) {
    const int i = static_cast<int>(std::floor((p.x - spec.domain.x_min) / spec.domain.width() *
                                              spec.width));
    const int j = static_cast<int>(std::floor((p.y - spec.domain.y_min) / spec.domain.height() *
                                              spec.height));
    if (i < 0 || i >= spec.width || j < 0 || j >= spec.height) return {};
    return {i, j};
}

/// The kth approximation of a fractal as a raster of escape indices.
/// Cell value 0: member up to depth k. Value n in [1..k]: excluded at stage n.
/// Value k+1 (sentinel): outside the scheme's domain (gasket background, or no
/// preimage under a mapped scheme).
class MembershipGrid {
public:
    MembershipGrid() = default;

    MembershipGrid(GridSpec spec, int depth)
        : spec_(spec), depth_(depth), cells_(spec.cell_count(), 0) {
        spec.validate();
        if (depth < 1) throw std::invalid_argument("MembershipGrid: depth must be >= 1");
        if (depth > 0xFFFE) throw std::invalid_argument("MembershipGrid: depth too large");
    }

    const GridSpec& spec() const { return spec_; }
    int depth() const { return depth_; }
    int width() const { return spec_.width; }
    int height() const { return spec_.height; }
    std::uint16_t sentinel() const { return static_cast<std::uint16_t>(depth_ + 1); }

    std::uint16_t at(int i, int j) const { return cells_[index(i, j)]; }

    void set(int i, int j, std::uint16_t value) {
        if (value > sentinel())
            throw std::invalid_argument("MembershipGrid: value exceeds depth + 1");
        cells_[index(i, j)] = value;
    }

    bool is_member(int i, int j) const { return at(i, j) == 0; }
    bool is_sentinel(int i, int j) const { return at(i, j) == sentinel(); }

    long member_count() const {
        long n = 0;
        for (auto v : cells_)
            if (v == 0) ++n;
        return n;
    }

    const std::vector<std::uint16_t>& cells() const { return cells_; }
    std::vector<std::uint16_t>& cells() { return cells_; }

private:
    std::size_t index(int i, int j) const {
        if (i < 0 || i >= spec_.width || j < 0 || j >= spec_.height)
            throw std::out_of_range("MembershipGrid: cell index out of range");
        return static_cast<std::size_t>(j) * spec_.width + i;
    }

    GridSpec spec_{};
    int depth_ = 1;
    std::vector<std::uint16_t> cells_;
};

}  // namespace fracdyn
