#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "fracdyn/geometry.hpp"
#include "fracdyn/maps.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Independent correctness oracles (IFS cell enumeration), box-counting
// dimension estimation, grid comparison, and empirical bi-Lipschitz bounds.
// The oracle path shares nothing with the scheme iteration it checks.
// ---------------------------------------------------------------------------

enum class IfsTag { Carpet, Gasket };

struct AffineContraction {
    double m00, m01, m10, m11, tx, ty;
    Point2 apply(const Point2& p) const {
        return {m00 * p.x + m01 * p.y + tx, m10 * p.x + m11 * p.y + ty};
    }
};

/// The classical generating systems: 8 maps of ratio 1/3 on [0,1]^2 (carpet),
/// 3 maps of ratio 1/2 toward the triangle vertices (gasket).
inline std::vector<AffineContraction> ifs_maps(IfsTag tag) {
    std::vector<AffineContraction> maps;
    if (tag == IfsTag::Carpet) {
        const double r = 1.0 / 3.0;
        for (int dj = 0; dj < 3; ++dj)
            for (int di = 0; di < 3; ++di) {
                if (di == 1 && dj == 1) continue;
                maps.push_back({r, 0, 0, r, di * r, dj * r});
            }
    } else {
        const Point2 verts[3] = {{0.0, 0.0}, {-0.5, tri::kHeight}, {0.5, tri::kHeight}};
        for (const auto& v : verts) maps.push_back({0.5, 0, 0, 0.5, v.x / 2, v.y / 2});
    }
    return maps;
}

struct IfsSpec {
    IfsTag tag;
    std::vector<AffineContraction> maps;
};

inline IfsSpec ifs_spec(IfsTag tag) { return {tag, ifs_maps(tag)}; }

/// Depth-k cells of the attractor. Carpet cells are base-3 index pairs with no
/// digit pair (1,1) at the same position; gasket cells are all addresses over
/// the three corner maps.
struct CellSet {
    IfsTag tag = IfsTag::Carpet;
    int depth = 0;
    std::vector<std::pair<int, int>> carpet_cells;  // (i, j) on the 3^k lattice
    std::vector<std::string> gasket_addresses;      // strings over {0,1,2}

    std::size_t size() const {
        return tag == IfsTag::Carpet ? carpet_cells.size() : gasket_addresses.size();
    }
};

inline CellSet ifs_cells(IfsTag tag, int k) {
    if (k < 0) throw std::invalid_argument("ifs_cells: depth must be >= 0");
    CellSet set;
    set.tag = tag;
    set.depth = k;
    if (tag == IfsTag::Carpet) {
        std::vector<std::pair<int, int>> cells{{0, 0}};
        for (int level = 0; level < k; ++level) {
            std::vector<std::pair<int, int>> next;
            next.reserve(cells.size() * 8);
            for (const auto& [i, j] : cells)
                for (int dj = 0; dj < 3; ++dj)
                    for (int di = 0; di < 3; ++di) {
                        if (di == 1 && dj == 1) continue;
                        next.emplace_back(3 * i + di, 3 * j + dj);
                    }
            cells = std::move(next);
        }
        set.carpet_cells = std::move(cells);
    } else {
        std::vector<std::string> addrs{""};
        for (int level = 0; level < k; ++level) {
            std::vector<std::string> next;
            next.reserve(addrs.size() * 3);
            for (const auto& a : addrs)
                for (char c : {'0', '1', '2'}) next.push_back(a + c);
            addrs = std::move(next);
        }
        set.gasket_addresses = std::move(addrs);
    }
    return set;
}

namespace detail {

/// Depth-k address of the sub-triangle containing p, or empty when p falls in
/// a hole (or outside the triangle). Boundary points take the first matching
/// child, in corner order.
inline bool gasket_address_of(Point2 p, int k, std::string& out) {
    out.clear();
    if (!in_triangle(p)) return false;
    const Point2 verts[3] = {{0.0, 0.0}, {-0.5, tri::kHeight}, {0.5, tri::kHeight}};
    for (int level = 0; level < k; ++level) {
        bool found = false;
        for (int c = 0; c < 3; ++c) {
            const Point2 q{2 * p.x - verts[c].x, 2 * p.y - verts[c].y};
            if (in_triangle(q)) {
                p = q;
                out.push_back(static_cast<char>('0' + c));
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace detail

/// Rasterizes a cell set: member cells get 0, others 1; gasket cells outside
/// the triangle get the sentinel. Carpet comparison is exact when the grid is
/// the 3^k lattice on [0,1]^2.
inline MembershipGrid cells_to_grid(const CellSet& cells, const GridSpec& spec) {
    spec.validate();
    MembershipGrid grid(spec, std::max(cells.depth, 1));

    if (cells.tag == IfsTag::Carpet) {
        const int n = static_cast<int>(std::llround(std::pow(3.0, cells.depth)));
        std::vector<std::uint8_t> bitmap(static_cast<std::size_t>(n) * n, 0);
        for (const auto& [i, j] : cells.carpet_cells)
            bitmap[static_cast<std::size_t>(j) * n + i] = 1;
        for (int j = 0; j < spec.height; ++j) {
            for (int i = 0; i < spec.width; ++i) {
                const Point2 c = cell_center(spec, i, j);
                const int ci = static_cast<int>(std::floor(c.x * n));
                const int cj = static_cast<int>(std::floor(c.y * n));
                const bool member = ci >= 0 && ci < n && cj >= 0 && cj < n &&
                                    bitmap[static_cast<std::size_t>(cj) * n + ci] != 0;
                grid.set(i, j, member ? 0 : 1);
            }
        }
        return grid;
    }

    std::unordered_set<std::string> addresses(cells.gasket_addresses.begin(),
                                              cells.gasket_addresses.end());
    std::string addr;
    for (int j = 0; j < spec.height; ++j) {
        for (int i = 0; i < spec.width; ++i) {
            const Point2 c = cell_center(spec, i, j);
            if (!in_triangle(c)) {
                grid.set(i, j, grid.sentinel());
                continue;
            }
            const bool member =
                detail::gasket_address_of(c, cells.depth, addr) && addresses.count(addr) > 0;
            grid.set(i, j, member ? 0 : 1);
        }
    }
    return grid;
}

struct BoxCountResult {
    std::vector<double> box_sizes;  // in cells: 1, 2, 4, ...
    std::vector<long> counts;       // occupied boxes per size
    double slope = 0.0;             // least-squares d log N / d log(1/eps)
    double r2 = 1.0;
};

/// Box counting over dyadic box sizes 2^0 .. 2^(levels-1) cells, boxes
/// anchored at the grid origin; counts boxes containing >= 1 member cell.
inline BoxCountResult box_dimension(const MembershipGrid& grid, int levels) {
    if (levels < 3) throw std::invalid_argument("box_dimension: levels must be >= 3");
    const int w = grid.width();
    const int h = grid.height();

    std::vector<std::pair<int, int>> members;
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            if (grid.is_member(i, j)) members.emplace_back(i, j);
    if (members.empty()) throw std::invalid_argument("box_dimension: grid has no member cells");

    BoxCountResult result;
    for (int level = 0; level < levels; ++level) {
        const int s = 1 << level;
        const int bw = (w + s - 1) / s;
        const int bh = (h + s - 1) / s;
        std::vector<std::uint8_t> occupied(static_cast<std::size_t>(bw) * bh, 0);
        long count = 0;
        for (const auto& [i, j] : members) {
            auto& slot = occupied[static_cast<std::size_t>(j / s) * bw + i / s];
            if (!slot) {
                slot = 1;
                ++count;
            }
        }
        result.box_sizes.push_back(static_cast<double>(s));
        result.counts.push_back(count);
    }

    // least squares of log N against log(1/eps)
    const int n = levels;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = -std::log(result.box_sizes[i]);
        const double y = std::log(static_cast<double>(result.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    result.slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - result.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (int i = 0; i < n; ++i) {
        const double x = -std::log(result.box_sizes[i]);
        const double y = std::log(static_cast<double>(result.counts[i]));
        ss_res += (y - (result.slope * x + intercept)) * (y - (result.slope * x + intercept));
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    result.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return result;
}

struct GridComparison {
    double agreement = 1.0;  // fraction of compared cells with matching member status
    long compared = 0;       // cells where neither grid holds its sentinel
    long a_only = 0;         // member in a, not in b
    long b_only = 0;
    long skipped = 0;        // sentinel in either grid
};

inline GridComparison compare_grids(const MembershipGrid& a, const MembershipGrid& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("compare_grids: dimension mismatch");
    GridComparison cmp;
    long matches = 0;
    for (int j = 0; j < a.height(); ++j) {
        for (int i = 0; i < a.width(); ++i) {
            if (a.is_sentinel(i, j) || b.is_sentinel(i, j)) {
                ++cmp.skipped;
                continue;
            }
            ++cmp.compared;
            const bool am = a.is_member(i, j);
            const bool bm = b.is_member(i, j);
            if (am == bm) ++matches;
            else if (am) ++cmp.a_only;
            else ++cmp.b_only;
        }
    }
    cmp.agreement = cmp.compared == 0 ? 1.0 : static_cast<double>(matches) / cmp.compared;
    return cmp;
}

/// Halton low-discrepancy value; deterministic quasi-random sampling without a
/// random-number dependency in outputs.
inline double halton(unsigned long index, unsigned base) {
    double f = 1.0;
    double r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

struct LipschitzEstimate {
    double l1 = 0.0;  // observed lower distortion bound
    double l2 = 0.0;  // observed upper distortion bound
    long pairs = 0;
};

/// Samples quasi-random point pairs (u, v) in the domain and returns the min
/// and max of |f(u) - f(v)| / |u - v|. A reported l1 near 0 flags the map as
/// empirically non-bi-Lipschitz on that domain.
inline LipschitzEstimate estimate_bilipschitz(const PlaneMap& map, const RectDomain& domain,
                                              long samples) {
    if (samples < 2) throw std::invalid_argument("estimate_bilipschitz: samples must be >= 2");
    domain.validate();
    LipschitzEstimate est;
    est.l1 = std::numeric_limits<double>::infinity();
    for (long s = 1; s <= samples; ++s) {
        const auto si = static_cast<unsigned long>(s);
        const Point2 u{domain.x_min + domain.width() * halton(si, 2),
                       domain.y_min + domain.height() * halton(si, 3)};
        const Point2 v{domain.x_min + domain.width() * halton(si, 5),
                       domain.y_min + domain.height() * halton(si, 7)};
        const double d = dist(u, v);
        if (d < 1e-9) continue;
        const double r = dist(apply_forward(map, u), apply_forward(map, v)) / d;
        est.l1 = std::min(est.l1, r);
        est.l2 = std::max(est.l2, r);
        ++est.pairs;
    }
    if (est.pairs == 0)
        throw std::runtime_error("estimate_bilipschitz: no usable point pairs");
    return est;
}

}  // namespace fracdyn
