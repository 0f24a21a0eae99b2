#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracdyn/geometry.hpp"
#include "fracdyn/maps.hpp"
#include "fracdyn/parallel.hpp"
#include "fracdyn/schemes.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Fractal mapping iteration: membership of the mapped set is decided by
// pulling each target point back through the inverse map and running the
// unmapped scheme on the preimage. Forward point-cloud images and discrete
// orbits cover the forward-only maps.
// ---------------------------------------------------------------------------

/// Target raster for the mapped domain D'.
using MappedGridSpec = GridSpec;

struct MappedEscape {
    bool outside = false;       // no preimage, or preimage not in the scheme's domain
    std::optional<int> stage;   // meaningful when !outside; nullopt = member
};

inline MappedEscape mapped_escape_index(const PlaneMap& map, const CarpetScheme& scheme,
                                        EscapeCriterion criterion, const Point2& q0, int k,
                                        const RectDomain& domain = RectDomain::unit_square()) {
    const auto p = apply_inverse(map, q0);
    if (!p || !finite(*p) || !domain.contains(*p)) return {true, std::nullopt};
    return {false, escape_index(scheme, criterion, *p, k)};
}

inline MappedEscape mapped_escape_index(const PlaneMap& map, const GasketScheme& scheme,
                                        const Point2& q0, int k) {
    const auto p = apply_inverse(map, q0);
    if (!p || !finite(*p) || !in_triangle(*p)) return {true, std::nullopt};
    return {false, escape_index(scheme, *p, k)};
}

namespace detail {
template <typename EscapeFn>
MembershipGrid mapped_grid_impl(const MappedGridSpec& spec, int k, int threads, EscapeFn&& fn) {
    spec.validate();
    MembershipGrid grid(spec, k);
    const std::uint16_t sentinel = grid.sentinel();
    auto* cells = grid.cells().data();
    parallel_chunks(spec.cell_count(), threads, [&](long lo, long hi) {
        for (long idx = lo; idx < hi; ++idx) {
            const int i = static_cast<int>(idx % spec.width);
            const int j = static_cast<int>(idx / spec.width);
            const MappedEscape e = fn(cell_center(spec, i, j));
            cells[idx] = e.outside ? sentinel : static_cast<std::uint16_t>(e.stage.value_or(0));
        }
    });
    return grid;
}
}  // namespace detail

/// Raster of mapped_escape_index over D' cell centers; "outside" cells hold
/// the sentinel k+1.
inline MembershipGrid mapped_membership_grid(const PlaneMap& map, const CarpetScheme& scheme,
                                             EscapeCriterion criterion,
                                             const MappedGridSpec& spec, int k, int threads = 0,
                                             const RectDomain& domain =
                                                 RectDomain::unit_square()) {
    return detail::mapped_grid_impl(spec, k, threads, [&](const Point2& q) {
        return mapped_escape_index(map, scheme, criterion, q, k, domain);
    });
}

inline MembershipGrid mapped_membership_grid(const PlaneMap& map, const GasketScheme& scheme,
                                             const MappedGridSpec& spec, int k,
                                             int threads = 0) {
    return detail::mapped_grid_impl(spec, k, threads, [&](const Point2& q) {
        return mapped_escape_index(map, scheme, q, k);
    });
}

/// Default D': axis-aligned bounding box of forward images of a boundary-
/// inclusive lattice on the source domain, padded by 5% per axis.
inline RectDomain default_mapped_domain(const PlaneMap& map, const RectDomain& source,
                                        int lattice = 64, double pad = 0.05) {
    source.validate();
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool any = false;
    for (int j = 0; j < lattice; ++j) {
        for (int i = 0; i < lattice; ++i) {
            const Point2 p{source.x_min + source.width() * i / (lattice - 1),
                           source.y_min + source.height() * j / (lattice - 1)};
            Point2 q;
            try {
                q = apply_forward(map, p);
            } catch (const MapEvalError&) {
                continue;
            }
            if (!finite(q)) continue;
            if (!any) {
                x0 = x1 = q.x;
                y0 = y1 = q.y;
                any = true;
            } else {
                x0 = std::min(x0, q.x);
                x1 = std::max(x1, q.x);
                y0 = std::min(y0, q.y);
                y1 = std::max(y1, q.y);
            }
        }
    }
    if (!any)
        throw std::runtime_error("default_mapped_domain: map '" + map.name +
                                 "' failed on the whole lattice");
    const double px = (x1 > x0) ? pad * (x1 - x0) : 0.5;
    const double py = (y1 > y0) ? pad * (y1 - y0) : 0.5;
    return {x0 - px, x1 + px, y0 - py, y1 + py};
}

struct ForwardImageResult {
    std::vector<Point2> points;  // images of member-cell centers, row-major source order
    struct PointError {
        std::size_t member_index;  // position in the row-major member sequence
        Point2 source;
        std::string message;
    };
    std::vector<PointError> errors;
};

/// Applies the forward map to the center of every member cell (value 0).
/// Per-point evaluation errors are collected, not fatal.
inline ForwardImageResult forward_image_points(const PlaneMap& map, const MembershipGrid& grid) {
    ForwardImageResult result;
    std::size_t member_index = 0;
    for (int j = 0; j < grid.height(); ++j) {
        for (int i = 0; i < grid.width(); ++i) {
            if (!grid.is_member(i, j)) continue;
            const Point2 c = cell_center(grid.spec(), i, j);
            try {
                result.points.push_back(apply_forward(map, c));
            } catch (const MapEvalError& e) {
                result.errors.push_back({member_index, c, e.what()});
            }
            ++member_index;
        }
    }
    return result;
}

struct OrbitResult {
    std::vector<std::vector<Point2>> sets;  // [S_0, S_1, ..., S_m]
    struct OrbitError {
        int iterate;        // the S_i being built when the evaluation failed
        std::size_t index;  // index within S_{i-1}
        std::string message;
    };
    std::vector<OrbitError> errors;
};

/// S_0 = points, S_{i+1} = forward(S_i). Failing points drop out of later sets.
inline OrbitResult discrete_orbit(const PlaneMap& map, const std::vector<Point2>& points,
                                  int m) {
    if (m < 0) throw std::invalid_argument("discrete_orbit: iterate count must be >= 0");
    OrbitResult result;
    result.sets.reserve(static_cast<std::size_t>(m) + 1);
    result.sets.push_back(points);
    for (int it = 1; it <= m; ++it) {
        const auto& prev = result.sets.back();
        std::vector<Point2> next;
        next.reserve(prev.size());
        for (std::size_t idx = 0; idx < prev.size(); ++idx) {
            try {
                next.push_back(apply_forward(map, prev[idx]));
            } catch (const MapEvalError& e) {
                result.errors.push_back({it, idx, e.what()});
            }
        }
        result.sets.push_back(std::move(next));
    }
    return result;
}

/// Nearest-cell binning: a cell is member (0) when at least one point lands in
/// it; all other cells are 1. Points outside the grid are ignored.
inline MembershipGrid rasterize_points(const std::vector<Point2>& points, const GridSpec& spec,
                                       int depth = 1) {
    spec.validate();
    MembershipGrid grid(spec, depth);
    std::fill(grid.cells().begin(), grid.cells().end(), static_cast<std::uint16_t>(1));
    for (const Point2& p : points) {
        const CellIndex c = cell_of(spec, p);
        if (c.valid()) grid.set(c.i, c.j, 0);
    }
    return grid;
}

struct PushforwardReport {
    double agreement = 1.0;   // covered / mapped_members (1.0 when no member cells)
    long mapped_members = 0;  // member cells of the inverse-mapped grid
    long covered = 0;         // of those, cells hit by >= 1 forward-image point
    long image_only = 0;      // non-sentinel cells hit by points but excluded by the pullback
    long outside_cells = 0;   // sentinel cells of the mapped grid
};

/// Checks the pushforward identity on rasters: every member cell of the
/// inverse-mapped grid on `target` should be covered by forward images of the
/// member cells of the unmapped grid on `source`. Exact for affine maps at
/// matched lattices. For maps with strong local compression choose `source`
/// about 3x finer than `target`, otherwise forward images can skip target
/// cells and under-cover.
inline PushforwardReport verify_pushforward(const PlaneMap& map, const CarpetScheme& scheme,
                                            EscapeCriterion criterion, const GridSpec& source,
                                            const MappedGridSpec& target, int k,
                                            int threads = 0) {
    const MembershipGrid mapped = mapped_membership_grid(map, scheme, criterion, target, k,
                                                         threads);
    const MembershipGrid plain = membership_grid(scheme, criterion, source, k, threads);
    const ForwardImageResult fwd = forward_image_points(map, plain);
    const MembershipGrid raster = rasterize_points(fwd.points, target);

    PushforwardReport report;
    for (int j = 0; j < target.height; ++j) {
        for (int i = 0; i < target.width; ++i) {
            if (mapped.is_sentinel(i, j)) {
                ++report.outside_cells;
                continue;
            }
            const bool a = mapped.is_member(i, j);
            const bool b = raster.is_member(i, j);
            if (a) {
                ++report.mapped_members;
                if (b) ++report.covered;
            } else if (b) {
                ++report.image_only;
            }
        }
    }
    report.agreement = report.mapped_members == 0
                           ? 1.0
                           : static_cast<double>(report.covered) / report.mapped_members;
    return report;
}

}  // namespace fracdyn
