#pragma once

// Bounded, simply connected plane domains: disks, ellipses, rectangles,
// polygons and smooth star-shaped curves given by a trigonometric radius.

#include "error.hpp"
#include "point.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace mfe {

enum class DomainKind { disk, ellipse, rectangle, polygon, fourier };

inline std::string_view to_string(DomainKind k)
{
    switch (k) {
    case DomainKind::disk: return "disk";
    case DomainKind::ellipse: return "ellipse";
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::polygon: return "polygon";
    case DomainKind::fourier: return "fourier";
    }
    return "unknown";
}

inline DomainKind parse_domain_kind(std::string_view s)
{
    if (s == "disk") return DomainKind::disk;
    if (s == "ellipse") return DomainKind::ellipse;
    if (s == "rectangle") return DomainKind::rectangle;
    if (s == "polygon") return DomainKind::polygon;
    if (s == "fourier") return DomainKind::fourier;
    throw InputError("unknown domain kind '" + std::string(s) + "'");
}

/// Parameters per kind, all in the domain's local frame:
///   disk      {radius}
///   ellipse   {a, b}                      semi-axes along local x and y
///   rectangle {a, b}                      side lengths, centred at the local origin
///   polygon   {x0, y0, x1, y1, ...}       vertices
///   fourier   {r0, a1, b1, a2, b2, ...}   r(theta) = r0 + sum a_k cos(k theta) + b_k sin(k theta)
/// The local frame is rotated by `rotation` and translated to `center`.
struct DomainSpec {
    DomainKind kind = DomainKind::disk;
    std::vector<double> params{1.0};
    Point center{};
    double rotation = 0.0;
};

namespace detail {

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear points.
inline std::vector<Point> convex_hull(std::vector<Point> pts)
{
    std::sort(pts.begin(), pts.end(), [](Point a, Point b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && orient2d(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        const Point p = pts[i];
        while (k >= lower && orient2d(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

inline bool segments_intersect(Point a, Point b, Point c, Point d)
{
    const double d1 = orient2d(c, d, a);
    const double d2 = orient2d(c, d, b);
    const double d3 = orient2d(a, b, c);
    const double d4 = orient2d(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    auto on_segment = [](Point p, Point q, Point r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
               r.y <= std::max(p.y, q.y);
    };
    if (d1 == 0 && on_segment(c, d, a)) return true;
    if (d2 == 0 && on_segment(c, d, b)) return true;
    if (d3 == 0 && on_segment(a, b, c)) return true;
    if (d4 == 0 && on_segment(a, b, d)) return true;
    return false;
}

inline double polygon_signed_area(const std::vector<Point>& v)
{
    double s = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) s += cross(v[i], v[(i + 1) % n]);
    return 0.5 * s;
}

} // namespace detail

struct StripCover {
    double width = 0.0;
    /// Direction of the strip's unit normal, radians.
    double normal_angle = 0.0;
    std::size_t samples = 0;
};

class Domain {
public:
    static constexpr std::size_t polyline_size = 8192;

    explicit Domain(DomainSpec spec) : spec_(std::move(spec))
    {
        validate();
        build_cache();
    }

    const DomainSpec& spec() const { return spec_; }
    DomainKind kind() const { return spec_.kind; }
    bool has_corners() const { return is_polygonal(); }
    bool is_polygonal() const
    {
        return spec_.kind == DomainKind::rectangle || spec_.kind == DomainKind::polygon;
    }

    Point to_world(Point local) const { return spec_.center + rotate(local, spec_.rotation); }
    Point to_local(Point world) const { return rotate(world - spec_.center, -spec_.rotation); }

    /// Boundary point for t in [0, 1), counter-clockwise. Polygonal kinds are
    /// parametrised by arc length starting at the first vertex; smooth kinds by
    /// the polar (or eccentric) angle 2*pi*t.
    Point boundary_point(double t) const { return to_world(local_boundary_point(t)); }

    std::vector<Point> sample_boundary(std::size_t n) const
    {
        std::vector<Point> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = boundary_point(double(i) / double(n));
        return out;
    }

    /// Parameter values giving n points equally spaced in arc length.
    std::vector<double> arclength_parameters(std::size_t n, double phase = 0.0) const
    {
        const auto& c = *cache_;
        std::vector<double> ts(n);
        const double total = c.cumulative.back();
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = total * (double(i) + phase) / double(n);
            while (j + 1 < c.cumulative.size() - 1 && c.cumulative[j + 1] < s) ++j;
            const double s0 = c.cumulative[j], s1 = c.cumulative[j + 1];
            const double f = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
            ts[i] = (double(j) + f) / double(polyline_size);
        }
        return ts;
    }

    std::vector<Point> sample_boundary_arclength(std::size_t n, double phase = 0.0) const
    {
        std::vector<Point> out;
        out.reserve(n);
        for (double t : arclength_parameters(n, phase)) out.push_back(boundary_point(t));
        return out;
    }

    /// Dense counter-clockwise boundary polyline (world coordinates).
    const std::vector<Point>& polyline() const { return cache_->polyline; }

    /// Polygon vertices in world coordinates (empty for smooth kinds).
    std::vector<Point> vertices() const
    {
        std::vector<Point> out;
        for (Point p : local_vertices()) out.push_back(to_world(p));
        return out;
    }

    bool contains(Point world) const
    {
        const Point p = to_local(world);
        const auto& q = spec_.params;
        switch (spec_.kind) {
        case DomainKind::disk: return norm2(p) < q[0] * q[0];
        case DomainKind::ellipse: return (p.x * p.x) / (q[0] * q[0]) + (p.y * p.y) / (q[1] * q[1]) < 1.0;
        case DomainKind::rectangle: return std::abs(p.x) < 0.5 * q[0] && std::abs(p.y) < 0.5 * q[1];
        case DomainKind::fourier: {
            const double r = norm(p);
            return r < fourier_radius(std::atan2(p.y, p.x));
        }
        case DomainKind::polygon: {
            const auto v = local_vertices();
            bool inside = false;
            for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
                if ((v[i].y > p.y) != (v[j].y > p.y) &&
                    p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x)
                    inside = !inside;
            }
            return inside;
        }
        }
        return false;
    }

    /// Unsigned distance to the boundary; exact for disks and polygonal kinds,
    /// polyline-resolved (8192 segments) otherwise.
    double distance_to_boundary(Point world) const
    {
        if (spec_.kind == DomainKind::disk)
            return std::abs(spec_.params[0] - distance(world, spec_.center));
        const std::vector<Point>& v = is_polygonal() ? cache_->vertices_world : cache_->polyline;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0, n = v.size(); i < n; ++i)
            best = std::min(best, segment_distance(world, v[i], v[(i + 1) % n]));
        return best;
    }

    double area() const
    {
        const auto& q = spec_.params;
        switch (spec_.kind) {
        case DomainKind::disk: return pi * q[0] * q[0];
        case DomainKind::ellipse: return pi * q[0] * q[1];
        case DomainKind::rectangle: return q[0] * q[1];
        case DomainKind::polygon: return std::abs(detail::polygon_signed_area(local_vertices()));
        case DomainKind::fourier: {
            // Trapezoidal rule on a periodic trigonometric polynomial is exact
            // once the node count exceeds twice the degree.
            const std::size_t n = std::max<std::size_t>(4096, 4 * spec_.params.size());
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = fourier_radius(two_pi * double(i) / double(n));
                s += r * r;
            }
            return 0.5 * s * two_pi / double(n);
        }
        }
        return 0.0;
    }

    double perimeter() const { return cache_->cumulative.back(); }
    Point centroid() const { return cache_->centroid; }
    double diameter() const { return cache_->diameter; }
    double inradius() const { return cache_->inradius; }
    /// Centre of a largest inscribed disk.
    Point incenter() const { return cache_->incenter; }

    /// Copy scaled by s about the domain's centre.
    Domain scaled(double s) const
    {
        DomainSpec out = spec_;
        for (double& v : out.params) v *= s;
        return Domain(out);
    }

    Domain transformed(double rotation, Point translation) const
    {
        DomainSpec out = spec_;
        out.rotation += rotation;
        out.center = rotate(spec_.center, rotation) + translation;
        return Domain(out);
    }

    double fourier_radius(double theta) const
    {
        const auto& q = spec_.params;
        double r = q[0];
        for (std::size_t k = 1; 2 * k - 1 < q.size(); ++k) {
            r += q[2 * k - 1] * std::cos(double(k) * theta);
            if (2 * k < q.size()) r += q[2 * k] * std::sin(double(k) * theta);
        }
        return r;
    }

private:
    struct Cache {
        std::vector<Point> polyline;
        std::vector<double> cumulative;
        std::vector<Point> vertices_world;
        Point centroid;
        Point incenter;
        double diameter = 0.0;
        double inradius = 0.0;
    };

    DomainSpec spec_;
    std::shared_ptr<const Cache> cache_;

    std::vector<Point> local_vertices() const
    {
        const auto& q = spec_.params;
        if (spec_.kind == DomainKind::rectangle) {
            const double a = 0.5 * q[0], b = 0.5 * q[1];
            return {{-a, -b}, {a, -b}, {a, b}, {-a, b}};
        }
        if (spec_.kind != DomainKind::polygon) return {};
        std::vector<Point> v;
        for (std::size_t i = 0; i + 1 < q.size(); i += 2) v.push_back({q[i], q[i + 1]});
        if (detail::polygon_signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
        return v;
    }

    Point local_boundary_point(double t) const
    {
        t -= std::floor(t);
        const auto& q = spec_.params;
        const double th = two_pi * t;
        switch (spec_.kind) {
        case DomainKind::disk: return {q[0] * std::cos(th), q[0] * std::sin(th)};
        case DomainKind::ellipse: return {q[0] * std::cos(th), q[1] * std::sin(th)};
        case DomainKind::fourier: {
            const double r = fourier_radius(th);
            return {r * std::cos(th), r * std::sin(th)};
        }
        case DomainKind::rectangle:
        case DomainKind::polygon: {
            const auto v = local_vertices();
            double total = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) total += distance(v[i], v[(i + 1) % v.size()]);
            double s = t * total;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const Point a = v[i], b = v[(i + 1) % v.size()];
                const double len = distance(a, b);
                if (s <= len || i + 1 == v.size()) return a + (std::min(s, len) / len) * (b - a);
                s -= len;
            }
            return v.front();
        }
        }
        return {};
    }

    void validate() const
    {
        const auto& q = spec_.params;
        auto require = [](bool ok, const std::string& msg) {
            if (!ok) throw DomainError(msg);
        };
        for (double v : q) require(std::isfinite(v), "non-finite domain parameter");
        require(std::isfinite(spec_.center.x) && std::isfinite(spec_.center.y) &&
                    std::isfinite(spec_.rotation),
                "non-finite placement");
        switch (spec_.kind) {
        case DomainKind::disk:
            require(q.size() == 1, "disk expects 1 parameter (radius)");
            require(q[0] > 0.0, "disk radius must be positive");
            break;
        case DomainKind::ellipse:
        case DomainKind::rectangle:
            require(q.size() == 2, std::string(to_string(spec_.kind)) + " expects 2 parameters");
            require(q[0] > 0.0 && q[1] > 0.0, "dimensions must be positive");
            break;
        case DomainKind::fourier: {
            require(!q.empty() && q.size() % 2 == 1,
                    "fourier expects r0 followed by (a_k, b_k) pairs");
            for (std::size_t i = 0; i < 8192; ++i)
                require(fourier_radius(two_pi * double(i) / 8192.0) > 0.0,
                        "fourier radius must stay positive (curve would self-intersect)");
            break;
        }
        case DomainKind::polygon: {
            require(q.size() % 2 == 0, "polygon expects an even number of coordinates");
            require(q.size() >= 6, "polygon needs at least 3 vertices");
            const auto v = local_vertices();
            const std::size_t n = v.size();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    require(!(v[i] == v[j]), "polygon has a repeated vertex");
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (j == i + 1 || (i == 0 && j == n - 1)) continue;
                    require(!detail::segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]),
                            "polygon boundary self-intersects (edges " + std::to_string(i) + " and " +
                                std::to_string(j) + ")");
                }
            }
            require(std::abs(detail::polygon_signed_area(v)) > 0.0, "polygon has zero area");
            break;
        }
        }
    }

    void build_cache()
    {
        auto c = std::make_shared<Cache>();
        c->polyline.resize(polyline_size);
        for (std::size_t i = 0; i < polyline_size; ++i)
            c->polyline[i] = boundary_point(double(i) / double(polyline_size));
        c->cumulative.assign(polyline_size + 1, 0.0);
        for (std::size_t i = 0; i < polyline_size; ++i)
            c->cumulative[i + 1] =
                c->cumulative[i] + distance(c->polyline[i], c->polyline[(i + 1) % polyline_size]);
        c->vertices_world = vertices();

        // Area centroid of the polyline (exact for polygons).
        const std::vector<Point>& ring = is_polygonal() ? c->vertices_world : c->polyline;
        double a2 = 0.0;
        Point m{};
        for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
            const Point p = ring[i], q = ring[(i + 1) % n];
            const double w = cross(p, q);
            a2 += w;
            m += w * (p + q);
        }
        c->centroid = m / (3.0 * a2);

        std::vector<Point> coarse;
        for (std::size_t i = 0; i < polyline_size; i += 8) coarse.push_back(c->polyline[i]);
        for (Point v : c->vertices_world) coarse.push_back(v);
        const auto hull = detail::convex_hull(coarse);
        double diam = 0.0;
        for (std::size_t i = 0; i < hull.size(); ++i)
            for (std::size_t j = i + 1; j < hull.size(); ++j) diam = std::max(diam, distance(hull[i], hull[j]));
        c->diameter = diam;
        cache_ = c;

        const auto& q = spec_.params;
        switch (spec_.kind) {
        case DomainKind::disk: c->inradius = q[0]; c->incenter = spec_.center; break;
        case DomainKind::ellipse: c->inradius = std::min(q[0], q[1]); c->incenter = spec_.center; break;
        case DomainKind::rectangle:
            c->inradius = 0.5 * std::min(q[0], q[1]);
            c->incenter = spec_.center;
            break;
        default: std::tie(c->incenter, c->inradius) = numeric_inradius(); break;
        }
    }

    std::pair<Point, double> numeric_inradius() const
    {
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (Point p : cache_->polyline) {
            xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
        }
        constexpr int n = 48;
        Point best = cache_->centroid;
        double best_d = contains(best) ? distance_to_boundary(best) : 0.0;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const Point p{xmin + (xmax - xmin) * i / n, ymin + (ymax - ymin) * j / n};
                if (!contains(p)) continue;
                const double d = distance_to_boundary(p);
                if (d > best_d) { best_d = d; best = p; }
            }
        }
        double step = std::max(xmax - xmin, ymax - ymin) / n;
        while (step > 1e-10 * diameter()) {
            bool moved = false;
            for (Point dir : {Point{1, 0}, Point{-1, 0}, Point{0, 1}, Point{0, -1}, Point{1, 1},
                              Point{-1, -1}, Point{1, -1}, Point{-1, 1}}) {
                const Point p = best + step * dir;
                if (!contains(p)) continue;
                const double d = distance_to_boundary(p);
                if (d > best_d) { best_d = d; best = p; moved = true; }
            }
            if (!moved) step *= 0.5;
        }
        return {best, best_d};
    }
};

inline Domain make_domain(const DomainSpec& spec) { return Domain(spec); }

inline double area(const Domain& d) { return d.area(); }

/// Uniformly scaled copy (about the domain's centre) with the requested area.
inline Domain normalize_area(const Domain& d, double target = pi)
{
    if (!(target > 0.0)) throw DomainError("target area must be positive");
    return d.scaled(std::sqrt(target / d.area()));
}

/// Width of the narrowest infinite strip covering `pts` (rotating calipers on
/// the convex hull).
inline StripCover strip_width_of(const std::vector<Point>& pts)
{
    const auto hull = detail::convex_hull(pts);
    const std::size_t n = hull.size();
    StripCover best{std::numeric_limits<double>::infinity(), 0.0, pts.size()};
    if (n < 3) return {0.0, 0.0, pts.size()};
    double scale = 0.0;
    for (Point p : hull) scale = std::max(scale, norm(p - hull[0]));
    std::size_t j = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = hull[i], b = hull[(i + 1) % n];
        const Point e = b - a;
        const double len = norm(e);
        // Rounding leaves nearly collinear hull points; step over plateaus and
        // keep the farthest vertex seen.
        const double tol = 1e-13 * scale * len;
        std::size_t far = j;
        double far_v = orient2d(a, b, hull[j]);
        for (std::size_t steps = 0; steps < n; ++steps) {
            const std::size_t nx = (j + 1) % n;
            const double v = orient2d(a, b, hull[nx]);
            if (v < orient2d(a, b, hull[j]) - tol) break;
            j = nx;
            if (v > far_v) { far_v = v; far = j; }
        }
        j = far;
        const double w = far_v / len;
        if (w < best.width) {
            best.width = w;
            best.normal_angle = std::atan2(e.x, -e.y);
        }
    }
    return best;
}

/// Minimal covering-strip width. The boundary is sampled at 2048 points and
/// the sampling doubled until the width changes by less than 1e-8.
inline StripCover min_strip_width(const Domain& d, std::size_t initial_samples = 2048)
{
    auto sample = [&](std::size_t n) {
        auto pts = d.sample_boundary(n);
        for (Point v : d.vertices()) pts.push_back(v);
        return strip_width_of(pts);
    };
    std::size_t n = initial_samples;
    StripCover prev = sample(n);
    while (n < (std::size_t{1} << 22)) {
        n *= 2;
        StripCover next = sample(n);
        const bool done = std::abs(next.width - prev.width) < 1e-8;
        prev = next;
        if (done) break;
    }
    return prev;
}

// ---------------------------------------------------------------------------
// Domain-spec text documents:
//
//   kind = ellipse
//   params = 2, 0.5
//   center = 0, 0
//   rotation = 0
//
// '#' starts a comment; ':' is accepted in place of '='.

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<double> parse_numbers(std::string_view s)
{
    std::vector<double> out;
    std::string buf(s);
    for (char& ch : buf)
        if (ch == ',' || ch == ';') ch = ' ';
    std::istringstream in(buf);
    std::string tok;
    while (in >> tok) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw InputError("not a number: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace detail

inline DomainSpec parse_domain_spec(std::string_view text)
{
    DomainSpec spec;
    bool have_kind = false, have_params = false;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto sep = t.find_first_of("=:");
        if (sep == std::string::npos)
            throw InputError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(t).substr(0, sep));
        const std::string value = detail::trim(std::string_view(t).substr(sep + 1));
        if (key == "kind") {
            spec.kind = parse_domain_kind(value);
            have_kind = true;
        } else if (key == "params") {
            spec.params = detail::parse_numbers(value);
            have_params = true;
        } else if (key == "center") {
            const auto c = detail::parse_numbers(value);
            if (c.size() != 2) throw InputError("center expects two numbers");
            spec.center = {c[0], c[1]};
        } else if (key == "rotation") {
            const auto r = detail::parse_numbers(value);
            if (r.size() != 1) throw InputError("rotation expects one number");
            spec.rotation = r[0];
        } else {
            throw InputError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (!have_kind || !have_params) throw InputError("domain spec needs 'kind' and 'params'");
    return spec;
}

inline std::string format_domain_spec(const DomainSpec& s)
{
    std::ostringstream os;
    os << "kind = " << to_string(s.kind) << "\nparams = ";
    for (std::size_t i = 0; i < s.params.size(); ++i)
        os << (i ? ", " : "") << detail::format_double(s.params[i]);
    os << "\ncenter = " << detail::format_double(s.center.x) << ", " << detail::format_double(s.center.y)
       << "\nrotation = " << detail::format_double(s.rotation) << "\n";
    return os.str();
}

inline DomainSpec load_domain_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open domain spec '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_domain_spec(ss.str());
}

} // namespace mfe
