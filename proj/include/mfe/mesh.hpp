#pragma once

// Triangulation of plane domains: boundary nodes spaced by a size function,
// interior nodes on a hexagonal lattice plus concentric rings around an
// optional focus point, Bowyer-Watson Delaunay insertion.

#include "error.hpp"
#include "geometry.hpp"
#include "point.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace mfe {

/// Local refinement toward a point: the target edge length grows linearly from
/// min_size at the focus with slope `rate` until it reaches the global h.
struct Grading {
    Point focus;
    double min_size = 0.0;
    double rate = 0.25;
};

/// Grading with min_size = factor * h.
inline Grading graded_toward(Point focus, double h, double factor = 0.15)
{
    return Grading{focus, factor * h, 0.25};
}

struct Mesh {
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<char> boundary;
    double h = 0.0;
    std::optional<Grading> grading;
    /// Index of the vertex placed at the grading focus, -1 if none.
    int focus_vertex = -1;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double triangle_area(std::size_t t) const
    {
        const auto& T = triangles[t];
        return 0.5 * orient2d(vertices[T[0]], vertices[T[1]], vertices[T[2]]);
    }

    double area() const
    {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
        return s;
    }

    /// Target edge length at x.
    double size_at(Point x) const
    {
        if (!grading) return h;
        return std::clamp(grading->min_size + grading->rate * distance(x, grading->focus), grading->min_size, h);
    }

    double min_edge() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& T : triangles)
            for (int k = 0; k < 3; ++k) m = std::min(m, distance(vertices[T[k]], vertices[T[(k + 1) % 3]]));
        return m;
    }

    double max_edge() const
    {
        double m = 0.0;
        for (const auto& T : triangles)
            for (int k = 0; k < 3; ++k) m = std::max(m, distance(vertices[T[k]], vertices[T[(k + 1) % 3]]));
        return m;
    }

    /// Smallest interior angle over all triangles, radians.
    double min_angle() const
    {
        double m = pi;
        for (const auto& T : triangles)
            for (int k = 0; k < 3; ++k) {
                const Point a = vertices[T[k]], b = vertices[T[(k + 1) % 3]], c = vertices[T[(k + 2) % 3]];
                const Point u = b - a, v = c - a;
                m = std::min(m, std::atan2(std::abs(cross(u, v)), dot(u, v)));
            }
        return m;
    }

    /// Number of triangles with an obtuse angle.
    std::size_t obtuse_count() const
    {
        std::size_t n = 0;
        for (const auto& T : triangles)
            for (int k = 0; k < 3; ++k) {
                const Point a = vertices[T[k]], b = vertices[T[(k + 1) % 3]], c = vertices[T[(k + 2) % 3]];
                if (dot(b - a, c - a) < -1e-12 * norm2(b - a)) {
                    ++n;
                    break;
                }
            }
        return n;
    }

    /// FNV-1a over the exact vertex coordinates and connectivity.
    std::uint64_t hash() const
    {
        std::uint64_t x = 1469598103934665603ull;
        auto mix = [&](const void* p, std::size_t n) {
            const auto* c = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                x ^= c[i];
                x *= 1099511628211ull;
            }
        };
        for (Point v : vertices) {
            mix(&v.x, sizeof v.x);
            mix(&v.y, sizeof v.y);
        }
        for (const auto& T : triangles) mix(T.data(), sizeof(int) * 3);
        return x;
    }
};

// ---------------------------------------------------------------------------
// Delaunay triangulation

namespace detail {

// Sign-exact predicates: a floating-point evaluation with a forward error
// bound, falling back to exact rational arithmetic near zero.

inline double orient_exact(Point a, Point b, Point c)
{
    using Q = boost::multiprecision::cpp_rational;
    const Q ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
    const Q det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
    return det.sign();
}

/// Positive when a, b, c are counter-clockwise.
inline double orient(Point a, Point b, Point c)
{
    const double l = (a.x - c.x) * (b.y - c.y);
    const double r = (a.y - c.y) * (b.x - c.x);
    const double det = l - r;
    constexpr double eps = std::numeric_limits<double>::epsilon() / 2.0;
    const double bound = (3.0 + 16.0 * eps) * eps * (std::abs(l) + std::abs(r));
    if (det > bound || -det > bound) return det;
    return orient_exact(a, b, c);
}

inline double incircle_exact(Point a, Point b, Point c, Point d)
{
    using Q = boost::multiprecision::cpp_rational;
    const Q adx = Q(a.x) - Q(d.x), ady = Q(a.y) - Q(d.y);
    const Q bdx = Q(b.x) - Q(d.x), bdy = Q(b.y) - Q(d.y);
    const Q cdx = Q(c.x) - Q(d.x), cdy = Q(c.y) - Q(d.y);
    const Q ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
    const Q det = ad * (bdx * cdy - cdx * bdy) + bd * (cdx * ady - adx * cdy) + cd * (adx * bdy - bdx * ady);
    return det.sign();
}

/// Positive when d lies inside the circle through the counter-clockwise
/// triangle a, b, c.
inline double incircle(Point a, Point b, Point c, Point d)
{
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    const double perm = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift + (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                        (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    constexpr double eps = std::numeric_limits<double>::epsilon() / 2.0;
    const double bound = (10.0 + 96.0 * eps) * eps * perm;
    if (det > bound || -det > bound) return det;
    return incircle_exact(a, b, c, d);
}

inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order = 16)
{
    std::uint64_t d = 0;
    for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
        const std::uint32_t rx = (x & s) ? 1 : 0;
        const std::uint32_t ry = (y & s) ? 1 : 0;
        d += std::uint64_t(s) * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

/// Incremental Bowyer-Watson triangulation of a point set.
class Delaunay {
public:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> n;   // neighbour across the edge opposite v[k]
        bool alive = true;
    };

    explicit Delaunay(const std::vector<Point>& pts) : pts_(pts)
    {
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (Point p : pts_) {
            xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
        }
        const double span = std::max(xmax - xmin, ymax - ymin);
        const Point c{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
        const int n = int(pts_.size());
        pts_.push_back(c + 20.0 * span * Point{-1.0, -1.0});
        pts_.push_back(c + 20.0 * span * Point{1.0, -1.0});
        pts_.push_back(c + 20.0 * span * Point{0.0, 1.0});
        tris_.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});

        std::vector<std::pair<std::uint64_t, int>> order;
        order.reserve(std::size_t(n));
        const double scale = span > 0.0 ? 65535.0 / span : 0.0;
        for (int i = 0; i < n; ++i)
            order.emplace_back(hilbert_index(std::uint32_t((pts_[i].x - xmin) * scale),
                                             std::uint32_t((pts_[i].y - ymin) * scale)),
                               i);
        std::sort(order.begin(), order.end());
        for (auto [key, i] : order) insert(i);
    }

    /// Triangles not touching the bounding super-triangle.
    std::vector<std::array<int, 3>> triangles() const
    {
        const int n = int(pts_.size()) - 3;
        std::vector<std::array<int, 3>> out;
        for (const Tri& t : tris_)
            if (t.alive && t.v[0] < n && t.v[1] < n && t.v[2] < n) out.push_back(t.v);
        return out;
    }

private:
    std::vector<Point> pts_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    int last_ = 0;
    std::vector<unsigned> stamp_, seen_;
    unsigned stamp_id_ = 0, seen_id_ = 0;
    std::uint64_t walk_state_ = 0x9e3779b97f4a7c15ull;

    bool inside_circle(int t, Point p) const
    {
        const Tri& T = tris_[t];
        return incircle(pts_[T.v[0]], pts_[T.v[1]], pts_[T.v[2]], p) > 0.0;
    }

    int locate(Point p)
    {
        int t = last_;
        if (!tris_[t].alive) {
            for (t = int(tris_.size()) - 1; t >= 0 && !tris_[t].alive; --t) {}
        }
        const std::size_t limit = 4 * tris_.size() + 64;
        for (std::size_t step = 0; step < limit; ++step) {
            const Tri& T = tris_[t];
            // Visit the edges in a pseudo-random order so the walk cannot cycle.
            walk_state_ ^= walk_state_ << 13, walk_state_ ^= walk_state_ >> 7, walk_state_ ^= walk_state_ << 17;
            const int start = int(walk_state_ % 3);
            int next = -1;
            for (int j = 0; j < 3; ++j) {
                const int k = (start + j) % 3;
                if (orient(pts_[T.v[(k + 1) % 3]], pts_[T.v[(k + 2) % 3]], p) < 0.0) {
                    next = T.n[k];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        for (int i = 0; i < int(tris_.size()); ++i) {
            const Tri& T = tris_[i];
            if (T.alive && orient(pts_[T.v[0]], pts_[T.v[1]], p) >= 0.0 &&
                orient(pts_[T.v[1]], pts_[T.v[2]], p) >= 0.0 && orient(pts_[T.v[2]], pts_[T.v[0]], p) >= 0.0)
                return i;
        }
        throw MeshError("point location failed");
    }

    void insert(int pi)
    {
        const Point p = pts_[pi];
        const int seed = locate(p);

        // Cavity: connected set of triangles whose circumcircle contains p.
        ++stamp_id_;
        if (stamp_.size() < tris_.size()) stamp_.resize(tris_.size(), 0), seen_.resize(tris_.size(), 0);
        auto in_cavity = [&](int t) { return stamp_[t] == stamp_id_; };
        std::vector<int> cavity{seed};
        stamp_[seed] = stamp_id_;
        for (std::size_t i = 0; i < cavity.size(); ++i) {
            const Tri& T = tris_[cavity[i]];
            for (int k = 0; k < 3; ++k) {
                const int nb = T.n[k];
                if (nb >= 0 && !in_cavity(nb) && inside_circle(nb, p)) {
                    stamp_[nb] = stamp_id_;
                    cavity.push_back(nb);
                }
            }
        }

        // Rounding can produce a cavity that is not star-shaped from p; drop
        // triangles whose outer edge p cannot see until it is.
        for (bool changed = true; changed;) {
            changed = false;
            for (int t : cavity) {
                if (!in_cavity(t) || t == seed) continue;
                const Tri& T = tris_[t];
                for (int k = 0; k < 3; ++k) {
                    const int nb = T.n[k];
                    if (nb >= 0 && in_cavity(nb)) continue;
                    if (orient(pts_[T.v[(k + 1) % 3]], pts_[T.v[(k + 2) % 3]], p) <= 0.0) {
                        stamp_[t] = 0;
                        changed = true;
                        break;
                    }
                }
            }
            if (changed) {
                // keep only the part still connected to the seed
                ++seen_id_;
                std::vector<int> keep{seed};
                seen_[seed] = seen_id_;
                for (std::size_t i = 0; i < keep.size(); ++i)
                    for (int nb : tris_[keep[i]].n)
                        if (nb >= 0 && in_cavity(nb) && seen_[nb] != seen_id_) {
                            seen_[nb] = seen_id_;
                            keep.push_back(nb);
                        }
                for (int t : cavity) stamp_[t] = 0;
                for (int t : keep) stamp_[t] = stamp_id_;
                cavity = keep;
            }
        }

        // Boundary edges of the cavity, oriented counter-clockwise.
        struct Edge {
            int a, b, outside;
        };
        std::vector<Edge> edges;
        for (int t : cavity) {
            const Tri& T = tris_[t];
            for (int k = 0; k < 3; ++k) {
                const int nb = T.n[k];
                if (nb >= 0 && in_cavity(nb)) continue;
                edges.push_back({T.v[(k + 1) % 3], T.v[(k + 2) % 3], nb});
            }
        }
        for (int t : cavity) {
            tris_[t].alive = false;
            free_.push_back(t);
        }

        std::unordered_map<int, int> starts_at, ends_at;
        std::vector<int> created;
        created.reserve(edges.size());
        for (const Edge& e : edges) {
            int t;
            if (!free_.empty()) {
                t = free_.back();
                free_.pop_back();
            } else {
                t = int(tris_.size());
                tris_.push_back({});
            }
            // vertices (a, b, p): the edge opposite p is (a, b)
            tris_[t] = Tri{{e.a, e.b, pi}, {-1, -1, e.outside}, true};
            if (e.outside >= 0) {
                Tri& O = tris_[e.outside];
                for (int k = 0; k < 3; ++k)
                    if (O.v[(k + 1) % 3] == e.b && O.v[(k + 2) % 3] == e.a) O.n[k] = t;
            }
            starts_at[e.a] = t;
            ends_at[e.b] = t;
            created.push_back(t);
        }
        for (int t : created) {
            Tri& T = tris_[t];
            // opposite a: edge (b, p), shared with the triangle starting at b
            T.n[0] = starts_at.at(T.v[1]);
            // opposite b: edge (p, a), shared with the triangle ending at a
            T.n[1] = ends_at.at(T.v[0]);
        }
        last_ = created.front();
    }
};

/// Uniform bucket grid over boundary segments for fast distance queries.
class SegmentGrid {
public:
    SegmentGrid(const std::vector<Point>& ring, double cell) : ring_(ring), cell_(cell)
    {
        xmin_ = ymin_ = 1e300;
        double xmax = -1e300, ymax = -1e300;
        for (Point p : ring_) {
            xmin_ = std::min(xmin_, p.x), xmax = std::max(xmax, p.x);
            ymin_ = std::min(ymin_, p.y), ymax = std::max(ymax, p.y);
        }
        nx_ = std::max(1, int((xmax - xmin_) / cell_) + 1);
        ny_ = std::max(1, int((ymax - ymin_) / cell_) + 1);
        cells_.assign(std::size_t(nx_) * std::size_t(ny_), {});
        for (std::size_t i = 0; i < ring_.size(); ++i) {
            const Point a = ring_[i], b = ring_[(i + 1) % ring_.size()];
            const int i0 = cx(std::min(a.x, b.x)), i1 = cx(std::max(a.x, b.x));
            const int j0 = cy(std::min(a.y, b.y)), j1 = cy(std::max(a.y, b.y));
            for (int j = j0; j <= j1; ++j)
                for (int k = i0; k <= i1; ++k) cells_[std::size_t(j) * nx_ + k].push_back(int(i));
        }
    }

    /// Distance to the ring; exact below `cell`, otherwise at least `cell`
    /// (infinity when no segment is nearby).
    double distance(Point p) const
    {
        const int i = cx(p.x), j = cy(p.y);
        double best = std::numeric_limits<double>::infinity();
        for (int jj = std::max(0, j - 1); jj <= std::min(ny_ - 1, j + 1); ++jj)
            for (int ii = std::max(0, i - 1); ii <= std::min(nx_ - 1, i + 1); ++ii)
                for (int s : cells_[std::size_t(jj) * nx_ + ii])
                    best = std::min(best, segment_distance(p, ring_[s], ring_[(s + 1) % ring_.size()]));
        return best;
    }

private:
    std::vector<Point> ring_;
    double cell_;
    double xmin_, ymin_;
    int nx_, ny_;
    std::vector<std::vector<int>> cells_;

    int cx(double x) const { return std::clamp(int((x - xmin_) / cell_), 0, nx_ - 1); }
    int cy(double y) const { return std::clamp(int((y - ymin_) / cell_), 0, ny_ - 1); }
};

inline double jitter(std::uint64_t i)
{
    // splitmix64 mapped to [-1, 1]
    std::uint64_t z = i + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return double(z >> 11) / double(1ull << 52) - 1.0;
}

} // namespace detail

/// Boundary nodes of a domain spaced according to `size`; polygon vertices are
/// always nodes. Returned counter-clockwise.
template <class SizeFn>
std::vector<Point> boundary_nodes(const Domain& d, const SizeFn& size, std::size_t min_nodes = 12)
{
    std::vector<Point> out;
    if (d.is_polygonal()) {
        const auto v = d.vertices();
        for (std::size_t e = 0; e < v.size(); ++e) {
            const Point a = v[e], b = v[(e + 1) % v.size()];
            // integrate 1/size along the edge
            constexpr int q = 512;
            std::vector<double> cum(q + 1, 0.0);
            const double len = distance(a, b);
            for (int i = 0; i < q; ++i) {
                const Point m = a + ((i + 0.5) / q) * (b - a);
                cum[i + 1] = cum[i] + len / q / size(m);
            }
            const std::size_t k = std::max<std::size_t>(1, std::size_t(std::ceil(cum[q] - 1e-9)));
            out.push_back(a);
            std::size_t j = 0;
            for (std::size_t i = 1; i < k; ++i) {
                const double target = cum[q] * double(i) / double(k);
                while (j + 1 < q && cum[j + 1] < target) ++j;
                const double f = (target - cum[j]) / (cum[j + 1] - cum[j]);
                out.push_back(a + ((double(j) + f) / q) * (b - a));
            }
        }
        return out;
    }
    const auto& poly = d.polyline();
    const std::size_t n = poly.size();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = poly[i], b = poly[(i + 1) % n];
        cum[i + 1] = cum[i] + distance(a, b) / size(0.5 * (a + b));
    }
    const std::size_t k = std::max(min_nodes, std::size_t(std::ceil(cum[n])));
    std::size_t j = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double target = cum[n] * double(i) / double(k);
        while (j + 1 < n && cum[j + 1] < target) ++j;
        const double f = cum[j + 1] > cum[j] ? (target - cum[j]) / (cum[j + 1] - cum[j]) : 0.0;
        out.push_back(d.boundary_point((double(j) + f) / double(n)));
    }
    return out;
}

/// Conforming triangulation with target edge length h, optionally graded
/// toward a focus point. The focus becomes a mesh vertex.
inline Mesh triangulate(const Domain& d, double h, std::optional<Grading> grading = std::nullopt)
{
    if (!(h > 0.0) || !(h < d.diameter() / 4.0))
        throw MeshError("triangulate: need 0 < h < diameter/4 (h = " + std::to_string(h) + ")");
    Mesh m;
    m.h = h;
    m.grading = grading;
    if (grading) {
        if (!(grading->min_size > 0.0) || !(grading->rate > 0.0)) throw MeshError("triangulate: invalid grading");
        if (!d.contains(grading->focus)) throw MeshError("triangulate: grading focus outside the domain");
        m.grading->min_size = std::min(grading->min_size, h);
    }
    auto size = [&](Point x) { return m.size_at(x); };

    std::vector<Point> ring = boundary_nodes(d, size);
    const double min_size = grading ? m.grading->min_size : h;

    for (int attempt = 0; attempt < 8; ++attempt) {
        detail::SegmentGrid seg(ring, h);
        std::vector<Point> pts = ring;
        const std::size_t nb = ring.size();
        int focus_index = -1;
        auto keep = [&](Point p) { return d.contains(p) && seg.distance(p) >= 0.55 * size(p); };
        auto jit = [&](Point p, std::uint64_t i) {
            const double s = 1e-3 * size(p);
            return p + s * Point{detail::jitter(2 * i), detail::jitter(2 * i + 1)};
        };

        double graded_radius = 0.0;
        if (grading) {
            const Point f = m.grading->focus;
            const double rate = m.grading->rate;
            if (seg.distance(f) >= 0.55 * min_size) {
                focus_index = int(pts.size());
                pts.push_back(f);
            }
            double r = min_size;
            std::uint64_t ring_id = 0;
            while (min_size + rate * r < h) {
                const double s = min_size + rate * r;
                const std::size_t k = std::max<std::size_t>(6, std::size_t(std::lround(two_pi * r / s)));
                const double phase = 0.5 * double(ring_id++ % 2);
                for (std::size_t i = 0; i < k; ++i) {
                    const double th = two_pi * (double(i) + phase) / double(k);
                    const Point p = f + r * Point{std::cos(th), std::sin(th)};
                    if (keep(p)) pts.push_back(p);
                }
                r += s;
            }
            graded_radius = r;
        }

        // hexagonal lattice
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (Point p : ring) {
            xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
        }
        const double dy = h * std::sqrt(3.0) / 2.0;
        std::uint64_t id = 0;
        const int rows = int((ymax - ymin) / dy) + 2;
        const int cols = int((xmax - xmin) / h) + 2;
        for (int j = 0; j <= rows; ++j)
            for (int i = 0; i <= cols; ++i) {
                Point p{xmin + (i + 0.5 * (j % 2)) * h, ymin + j * dy};
                ++id;
                if (grading && distance(p, m.grading->focus) < graded_radius - 0.3 * h) continue;
                p = jit(p, id);
                if (keep(p)) pts.push_back(p);
            }

        detail::Delaunay dt(pts);
        auto tris = dt.triangles();
        std::vector<std::array<int, 3>> kept;
        kept.reserve(tris.size());
        for (const auto& T : tris) {
            const Point c = (pts[T[0]] + pts[T[1]] + pts[T[2]]) / 3.0;
            if (d.contains(c)) kept.push_back(T);
        }

        // every boundary segment must be a mesh edge
        std::unordered_map<std::uint64_t, int> edges;
        auto key = [](int a, int b) { return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b); };
        for (const auto& T : kept)
            for (int k = 0; k < 3; ++k) edges[key(T[k], T[(k + 1) % 3])] = 1;
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < nb; ++i)
            if (!edges.count(key(int(i), int((i + 1) % nb)))) missing.push_back(i);
        if (missing.empty()) {
            m.vertices = std::move(pts);
            m.triangles = std::move(kept);
            m.boundary.assign(m.vertices.size(), 0);
            for (std::size_t i = 0; i < nb; ++i) m.boundary[i] = 1;
            m.focus_vertex = focus_index;
            break;
        }
        if (attempt == 7) {
            const Point a = ring[missing[0]], b = ring[(missing[0] + 1) % nb];
            std::ostringstream os;
            os << "triangulate: boundary segment (" << a.x << ", " << a.y << ")-(" << b.x << ", " << b.y
               << ") not recovered; reduce h";
            throw MeshError(os.str());
        }
        // split the missing segments on the true boundary and retry
        std::vector<Point> refined;
        std::size_t mi = 0;
        for (std::size_t i = 0; i < nb; ++i) {
            refined.push_back(ring[i]);
            if (mi < missing.size() && missing[mi] == i) {
                ++mi;
                const Point a = ring[i], b = ring[(i + 1) % nb];
                Point mid = 0.5 * (a + b);
                if (!d.is_polygonal()) {
                    // project along the local normal onto the curve via the polyline
                    const auto& poly = d.polyline();
                    std::size_t best = 0;
                    double bd = 1e300;
                    for (std::size_t q = 0; q < poly.size(); ++q)
                        if (double dd = norm2(poly[q] - mid); dd < bd) bd = dd, best = q;
                    // refine the parameter by golden-section on the distance
                    double lo = (double(best) - 1.0) / double(poly.size());
                    double hi = (double(best) + 1.0) / double(poly.size());
                    for (int it = 0; it < 60; ++it) {
                        const double t1 = lo + (hi - lo) * 0.381966, t2 = lo + (hi - lo) * 0.618034;
                        if (norm2(d.boundary_point(t1) - mid) < norm2(d.boundary_point(t2) - mid)) hi = t2;
                        else lo = t1;
                    }
                    mid = d.boundary_point(0.5 * (lo + hi));
                }
                refined.push_back(mid);
            }
        }
        ring = std::move(refined);
    }

    for (std::size_t t = 0; t < m.triangles.size(); ++t)
        if (!(m.triangle_area(t) > 0.0)) throw MeshError("triangulate: degenerate triangle produced");
    return m;
}

/// Point location by a bucket grid over triangle bounding boxes.
class PointLocator {
public:
    struct Hit {
        int triangle = -1;
        std::array<double, 3> bary{};
    };

    explicit PointLocator(const Mesh& m) : mesh_(&m)
    {
        xmin_ = ymin_ = 1e300;
        double xmax = -1e300, ymax = -1e300;
        for (Point p : m.vertices) {
            xmin_ = std::min(xmin_, p.x), xmax = std::max(xmax, p.x);
            ymin_ = std::min(ymin_, p.y), ymax = std::max(ymax, p.y);
        }
        const double span = std::max(xmax - xmin_, ymax - ymin_);
        n_ = std::clamp(int(std::sqrt(double(m.triangles.size()))), 1, 2048);
        cell_ = span / n_ * (1.0 + 1e-12);
        if (cell_ <= 0.0) cell_ = 1.0;
        cells_.assign(std::size_t(n_) * n_, {});
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& T = m.triangles[t];
            double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
            for (int k = 0; k < 3; ++k) {
                const Point p = m.vertices[T[k]];
                x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
            }
            for (int j = cy(y0); j <= cy(y1); ++j)
                for (int i = cx(x0); i <= cx(x1); ++i) cells_[std::size_t(j) * n_ + i].push_back(int(t));
        }
    }

    /// Containing triangle and barycentric coordinates; triangle = -1 outside
    /// the mesh (points within `tol` of a triangle are snapped into it).
    Hit locate(Point p, double tol = 1e-12) const
    {
        Hit best;
        double best_min = -std::numeric_limits<double>::infinity();
        if (p.x < xmin_ - cell_ || p.y < ymin_ - cell_) return best;
        const int i = cx(p.x), j = cy(p.y);
        for (int t : cells_[std::size_t(j) * n_ + i]) {
            const auto& T = mesh_->triangles[t];
            const Point a = mesh_->vertices[T[0]], b = mesh_->vertices[T[1]], c = mesh_->vertices[T[2]];
            const double area2 = orient2d(a, b, c);
            const std::array<double, 3> l{orient2d(p, b, c) / area2, orient2d(a, p, c) / area2,
                                          orient2d(a, b, p) / area2};
            const double mn = std::min({l[0], l[1], l[2]});
            if (mn > best_min) {
                best_min = mn;
                best.triangle = t;
                best.bary = l;
            }
            if (mn >= 0.0) return best;
        }
        if (best_min < -tol) best.triangle = -1;
        return best;
    }

private:
    const Mesh* mesh_;
    double xmin_, ymin_, cell_;
    int n_;
    std::vector<std::vector<int>> cells_;

    int cx(double x) const { return std::clamp(int((x - xmin_) / cell_), 0, n_ - 1); }
    int cy(double y) const { return std::clamp(int((y - ymin_) / cell_), 0, n_ - 1); }
};

// ---------------------------------------------------------------------------
// Text form: "vertices N" then "x y boundary" rows, "triangles M" then index rows.

inline std::string format_mesh(const Mesh& m)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "h " << m.h << "\nvertices " << m.vertices.size() << "\n";
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        os << m.vertices[i].x << ' ' << m.vertices[i].y << ' ' << int(m.boundary[i]) << '\n';
    os << "triangles " << m.triangles.size() << "\n";
    for (const auto& T : m.triangles) os << T[0] << ' ' << T[1] << ' ' << T[2] << '\n';
    return os.str();
}

inline Mesh parse_mesh(const std::string& text)
{
    std::istringstream in(text);
    Mesh m;
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> m.h) || tag != "h") throw InputError("mesh: expected 'h'");
    if (!(in >> tag >> n) || tag != "vertices") throw InputError("mesh: expected 'vertices'");
    m.vertices.resize(n);
    m.boundary.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int b = 0;
        if (!(in >> m.vertices[i].x >> m.vertices[i].y >> b)) throw InputError("mesh: truncated vertex table");
        m.boundary[i] = char(b != 0);
    }
    if (!(in >> tag >> n) || tag != "triangles") throw InputError("mesh: expected 'triangles'");
    m.triangles.resize(n);
    for (auto& T : m.triangles) {
        if (!(in >> T[0] >> T[1] >> T[2])) throw InputError("mesh: truncated triangle table");
        for (int v : T)
            if (v < 0 || std::size_t(v) >= m.vertices.size()) throw InputError("mesh: triangle index out of range");
    }
    return m;
}

} // namespace mfe
