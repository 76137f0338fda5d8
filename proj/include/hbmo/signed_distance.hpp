#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/parallel.hpp"

namespace hbmo {

/// Directed chord p -> q; the positive side of the source field lies to the left.
struct Segment {
    Point p;
    Point q;

    double length() const { return norm(q - p); }
    Point midpoint() const { return 0.5 * (p + q); }
};

/// Zero level set of a piecewise-linear interpolant, one chord per cut triangle.
struct Interface {
    std::vector<Segment> segments;

    bool empty() const { return segments.empty(); }
    std::size_t size() const { return segments.size(); }
    double length() const {
        double s = 0.0;
        for (const auto& seg : segments) s += seg.length();
        return s;
    }
};

inline double point_segment_distance_sq(Point x, const Segment& s) {
    const Point d = s.q - s.p;
    const double len2 = dot(d, d);
    double t = len2 > 0.0 ? dot(x - s.p, d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point c = s.p + t * d;
    const Point r = x - c;
    return dot(r, r);
}

/// Bounding-volume hierarchy over segments for exact nearest-segment queries.
/// Ties in distance resolve to the lowest segment index.
class SegmentTree {
public:
    struct Hit {
        double dist_sq = std::numeric_limits<double>::infinity();
        std::size_t index = std::numeric_limits<std::size_t>::max();
    };

    explicit SegmentTree(std::span<const Segment> segments) : segs_(segments.begin(), segments.end()) {
        order_.resize(segs_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (!segs_.empty()) {
            nodes_.reserve(2 * segs_.size() / kLeaf + 2);
            build(0, segs_.size());
        }
    }

    bool empty() const { return segs_.empty(); }
    const Segment& segment(std::size_t k) const { return segs_[k]; }

    Hit nearest(Point x, std::size_t hint = std::numeric_limits<std::size_t>::max()) const {
        Hit best;
        if (segs_.empty()) return best;
        if (hint < segs_.size()) best = {point_segment_distance_sq(x, segs_[hint]), hint};
        search(0, x, best);
        return best;
    }

private:
    static constexpr std::size_t kLeaf = 4;

    struct Node {
        double x0, y0, x1, y1;
        std::size_t begin, end;
        std::size_t left = 0, right = 0;  // 0 means leaf (root is never a child)
    };

    std::size_t build(std::size_t begin, std::size_t end) {
        Node n{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), begin, end};
        for (std::size_t k = begin; k < end; ++k) {
            const Segment& s = segs_[order_[k]];
            n.x0 = std::min({n.x0, s.p.x, s.q.x});
            n.y0 = std::min({n.y0, s.p.y, s.q.y});
            n.x1 = std::max({n.x1, s.p.x, s.q.x});
            n.y1 = std::max({n.y1, s.p.y, s.q.y});
        }
        const std::size_t id = nodes_.size();
        nodes_.push_back(n);
        if (end - begin <= kLeaf) return id;
        const bool split_x = (n.x1 - n.x0) >= (n.y1 - n.y0);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             const Point ma = segs_[a].midpoint();
                             const Point mb = segs_[b].midpoint();
                             return split_x ? (ma.x < mb.x || (ma.x == mb.x && a < b)) : (ma.y < mb.y || (ma.y == mb.y && a < b));
                         });
        const std::size_t l = build(begin, mid);
        const std::size_t r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    static double box_distance_sq(const Node& n, Point x) {
        const double dx = std::max({n.x0 - x.x, 0.0, x.x - n.x1});
        const double dy = std::max({n.y0 - x.y, 0.0, x.y - n.y1});
        return dx * dx + dy * dy;
    }

    void search(std::size_t id, Point x, Hit& best) const {
        const Node& n = nodes_[id];
        if (n.left == 0) {
            for (std::size_t k = n.begin; k < n.end; ++k) {
                const std::size_t s = order_[k];
                const double d = point_segment_distance_sq(x, segs_[s]);
                if (d < best.dist_sq || (d == best.dist_sq && s < best.index)) best = {d, s};
            }
            return;
        }
        const double dl = box_distance_sq(nodes_[n.left], x);
        const double dr = box_distance_sq(nodes_[n.right], x);
        const std::size_t first = dl <= dr ? n.left : n.right;
        const std::size_t second = dl <= dr ? n.right : n.left;
        const double d1 = std::min(dl, dr);
        const double d2 = std::max(dl, dr);
        if (d1 <= best.dist_sq) search(first, x, best);
        if (d2 <= best.dist_sq) search(second, x, best);
    }

    std::vector<Segment> segs_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

namespace detail {

// Emits the zero chord of the linear interpolant on the CCW triangle (a, b, c).
inline void cut_triangle(Point pa, double fa, Point pb, double fb, Point pc, double fc, double min_len,
                         std::vector<Segment>& out) {
    const bool sa = fa > 0.0;
    const bool sb = fb > 0.0;
    const bool sc = fc > 0.0;
    if (sa == sb && sb == sc) return;
    // Rotate so that the lone vertex comes first, keeping CCW order.
    Point l, a, b;
    double fl, f1, f2;
    if (sa != sb && sa != sc) {
        l = pa; fl = fa; a = pb; f1 = fb; b = pc; f2 = fc;
    } else if (sb != sa && sb != sc) {
        l = pb; fl = fb; a = pc; f1 = fc; b = pa; f2 = fa;
    } else {
        l = pc; fl = fc; a = pa; f1 = fa; b = pb; f2 = fb;
    }
    const Point qa = l + (fl / (fl - f1)) * (a - l);
    const Point qb = l + (fl / (fl - f2)) * (b - l);
    if (norm(qb - qa) <= min_len) return;
    if (fl > 0.0)
        out.push_back({qa, qb});
    else
        out.push_back({qb, qa});
}

} // namespace detail

/// Which diagonal splits each grid cell into two triangles.
///  - alternating: (i,j)-(i+1,j+1) when i+j is even, the other diagonal when
///    odd; keeps the lattice's reflection symmetries.
///  - uniform: always (i,j)-(i+1,j+1).
enum class Triangulation { alternating, uniform };

/// Zero level set of the piecewise-linear interpolant of f on the triangulated
/// lattice. Nodal zeros are lifted to +1e-14*max|f| before classification.
/// Returns an empty interface when f does not change sign.
inline Interface extract_interface(const ScalarField& f, Triangulation pattern = Triangulation::alternating) {
    const Grid2D& g = f.grid();
    const double lift = 1e-14 * f.max_abs();
    const double min_len = 1e-12 * g.h();
    auto val = [&](std::size_t i, std::size_t j) {
        const double v = f(i, j);
        return v == 0.0 ? lift : v;
    };
    Interface out;
    for (std::size_t j = 0; j + 1 < g.ny; ++j) {
        for (std::size_t i = 0; i + 1 < g.nx; ++i) {
            const double f00 = val(i, j), f10 = val(i + 1, j), f11 = val(i + 1, j + 1), f01 = val(i, j + 1);
            const bool all_pos = f00 > 0 && f10 > 0 && f11 > 0 && f01 > 0;
            const bool all_neg = f00 <= 0 && f10 <= 0 && f11 <= 0 && f01 <= 0;
            if (all_pos || all_neg) continue;
            const Point p00 = g.node(i, j), p10 = g.node(i + 1, j), p11 = g.node(i + 1, j + 1), p01 = g.node(i, j + 1);
            const bool anti = pattern == Triangulation::alternating && (i + j) % 2 == 1;
            if (!anti) {
                detail::cut_triangle(p00, f00, p10, f10, p11, f11, min_len, out.segments);
                detail::cut_triangle(p00, f00, p11, f11, p01, f01, min_len, out.segments);
            } else {
                detail::cut_triangle(p00, f00, p10, f10, p01, f01, min_len, out.segments);
                detail::cut_triangle(p10, f10, p11, f11, p01, f01, min_len, out.segments);
            }
        }
    }
    return out;
}

/// Exact Euclidean distance from every node to the nearest segment, with the
/// sign of sign_source at that node (zero counts as positive).
inline ScalarField signed_distance_field(const Interface& iface, const ScalarField& sign_source) {
    if (iface.empty()) throw NumericalError("phase extinct: cannot build a distance to an empty interface");
    const Grid2D& g = sign_source.grid();
    const SegmentTree tree(iface.segments);
    ScalarField out(g);
    auto res = out.values();
    const auto sgn = sign_source.values();
    parallel_for(g.ny, [&](std::size_t jb, std::size_t je) {
        std::size_t hint = std::numeric_limits<std::size_t>::max();
        for (std::size_t j = jb; j < je; ++j) {
            for (std::size_t i = 0; i < g.nx; ++i) {
                const std::size_t k = g.index(i, j);
                const auto hit = tree.nearest(g.node(i, j), hint);
                hint = hit.index;
                const double d = std::sqrt(hit.dist_sq);
                res[k] = sgn[k] >= 0.0 ? d : -d;
            }
        }
    }, 8);
    return out;
}

/// d(x) = r - |x - center|, positive inside the disc.
inline ScalarField circle_distance(Point center, double r, const Grid2D& grid) {
    if (!(r > 0.0)) throw ConfigError("circle radius must be positive");
    return ScalarField::sample(grid, [&](Point x) { return r - norm(x - center); });
}

/// Nearest-point extension of per-segment velocities. Nodes within `band` of
/// the interface take the value of their nearest segment (lowest index on
/// ties); nodes further out copy the value of the nearest in-band node.
inline ScalarField velocity_extension(const Interface& iface, std::span<const double> v_on_iface, const Grid2D& grid,
                                      double band) {
    if (iface.empty()) throw NumericalError("phase extinct: cannot extend velocity from an empty interface");
    if (v_on_iface.size() != iface.size()) throw ConfigError("velocity samples must match the interface segment count");
    const SegmentTree tree(iface.segments);
    ScalarField out(grid);
    std::vector<char> in_band(grid.size(), 0);
    std::vector<Segment> band_nodes;
    std::vector<double> band_values;
    std::size_t hint = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point x = grid.node(k);
        const auto hit = tree.nearest(x, hint);
        hint = hit.index;
        out[k] = v_on_iface[hit.index];
        if (std::sqrt(hit.dist_sq) <= band) {
            in_band[k] = 1;
            band_nodes.push_back({x, x});
            band_values.push_back(out[k]);
        }
    }
    if (band_nodes.empty()) return out;
    const SegmentTree near_band(band_nodes);
    hint = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (in_band[k]) continue;
        const auto hit = near_band.nearest(grid.node(k), hint);
        hint = hit.index;
        out[k] = band_values[hit.index];
    }
    return out;
}

/// How segments are reduced to a mean radius.
///  - endpoints: length-weighted mean of the endpoint distances (the
///    endpoints lie exactly on the interpolated zero set);
///  - length_weighted: length-weighted mean of the midpoint distances;
///  - uniform: plain mean of the midpoint distances.
/// Midpoints of chords sit inside a convex curve by about L^2/(8r), which
/// biases the midpoint variants inward on coarse grids.
enum class RadiusAveraging { endpoints, length_weighted, uniform };

struct RadiusEstimate {
    double radius = 0.0;
    bool extinct = false;
};

/// Mean distance of the interface from `center`; {0, extinct} when empty.
inline RadiusEstimate average_radius(const Interface& iface, Point center,
                                     RadiusAveraging mode = RadiusAveraging::endpoints) {
    if (iface.empty()) return {0.0, true};
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : iface.segments) {
        const double w = mode == RadiusAveraging::uniform ? 1.0 : s.length();
        const double r = mode == RadiusAveraging::endpoints ? 0.5 * (norm(s.p - center) + norm(s.q - center))
                                                            : norm(s.midpoint() - center);
        num += w * r;
        den += w;
    }
    return {num / den, false};
}

/// Symmetric Hausdorff distance between the vertex sets of a and b, each
/// measured against the other's segments.
inline double interface_distance(const Interface& a, const Interface& b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    auto one_sided = [](const Interface& from, const Interface& to) {
        const SegmentTree tree(to.segments);
        double worst = 0.0;
        for (const auto& s : from.segments)
            for (Point x : {s.p, s.q}) worst = std::max(worst, tree.nearest(x).dist_sq);
        return std::sqrt(worst);
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

/// Interface frame CSV: schema line, frame time, column header, one segment per line.
inline void write_interface_csv(const Interface& iface, double time, std::ostream& os) {
    const auto old = os.precision(17);
    os << "# schema: hbmo-interface/1\n";
    os << "# t=" << time << '\n';
    os << "x1,y1,x2,y2\n";
    for (const auto& s : iface.segments) os << s.p.x << ',' << s.p.y << ',' << s.q.x << ',' << s.q.y << '\n';
    os.precision(old);
}

} // namespace hbmo
