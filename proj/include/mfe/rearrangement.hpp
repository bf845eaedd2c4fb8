#pragma once

// Level-set measures of piecewise-linear fields and Schwarz symmetrization
// onto a disk.

#include "fem.hpp"
#include "mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

struct LevelProfile {
    std::vector<double> tau;
    std::vector<double> mu;    // |{u > tau}|
    std::vector<double> rho;   // sqrt(mu / pi)
    double area = 0.0;         // mesh area
};

namespace detail {

inline std::array<double, 3> sorted3(double a, double b, double c)
{
    std::array<double, 3> v{a, b, c};
    std::sort(v.begin(), v.end());
    return v;
}

/// Fraction of a triangle where the linear interpolant of the sorted vertex
/// values a <= b <= c exceeds tau.
inline double superlevel_fraction(double a, double b, double c, double tau)
{
    if (tau >= c) return 0.0;
    if (tau <= a) return 1.0;
    if (tau >= b) return (c - tau) * (c - tau) / ((c - a) * (c - b));
    return 1.0 - (tau - a) * (tau - a) / ((b - a) * (c - a));
}

/// Sorted vertex values and area of every triangle, for repeated queries.
struct SortedTriangles {
    std::vector<std::array<double, 4>> rows;

    SortedTriangles(const Mesh& m, const Vector& u)
    {
        rows.reserve(m.num_triangles());
        for (std::size_t t = 0; t < m.num_triangles(); ++t) {
            const auto& T = m.triangles[t];
            const auto v = sorted3(u[T[0]], u[T[1]], u[T[2]]);
            rows.push_back({v[0], v[1], v[2], m.triangle_area(t)});
        }
    }

    double measure(double tau) const
    {
        double s = 0.0;
        for (const auto& r : rows) {
            if (tau >= r[2]) continue;
            s += r[3] * (tau <= r[0] ? 1.0 : superlevel_fraction(r[0], r[1], r[2], tau));
        }
        return s;
    }
};

} // namespace detail

/// Exact area of {u > tau} for the piecewise-linear interpolant.
inline double superlevel_measure(const Mesh& m, const Vector& u, double tau)
{
    double s = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& T = m.triangles[t];
        const auto v = detail::sorted3(u[T[0]], u[T[1]], u[T[2]]);
        s += m.triangle_area(t) * detail::superlevel_fraction(v[0], v[1], v[2], tau);
    }
    return s;
}

inline LevelProfile level_profile(const Field& f, const std::vector<double>& taus)
{
    LevelProfile p;
    p.area = f.mesh->area();
    p.tau = taus;
    std::sort(p.tau.begin(), p.tau.end());
    const detail::SortedTriangles tri(*f.mesh, f.values);
    for (double t : p.tau) {
        const double mu = tri.measure(t);
        p.mu.push_back(mu);
        p.rho.push_back(std::sqrt(mu / pi));
    }
    // exact arithmetic gives a non-increasing mu; remove rounding wiggles
    for (std::size_t i = 1; i < p.mu.size(); ++i)
        if (p.mu[i] > p.mu[i - 1]) p.mu[i] = p.mu[i - 1], p.rho[i] = p.rho[i - 1];
    return p;
}

/// 256 uniform thresholds over the value range, bisected wherever mu drops
/// by more than |Omega| / 2048 between neighbours.
inline LevelProfile level_profile(const Field& f, std::size_t levels = 256)
{
    const double lo = f.values.minCoeff(), hi = f.values.maxCoeff();
    std::vector<double> taus;
    if (hi <= lo) return level_profile(f, std::vector<double>{lo});
    for (std::size_t i = 0; i < levels; ++i) taus.push_back(lo + (hi - lo) * double(i) / double(levels - 1));
    const detail::SortedTriangles tri(*f.mesh, f.values);
    std::vector<std::pair<double, double>> pts;
    for (double t : taus) pts.emplace_back(t, tri.measure(t));
    const double area = f.mesh->area();
    const double limit = area / 2048.0;
    for (int pass = 0; pass < 12; ++pass) {
        std::vector<std::pair<double, double>> extra;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            if (pts[i].second - pts[i + 1].second > limit && pts[i + 1].first - pts[i].first > 1e-12 * (hi - lo)) {
                const double t = 0.5 * (pts[i].first + pts[i + 1].first);
                extra.emplace_back(t, tri.measure(t));
            }
        if (extra.empty()) break;
        pts.insert(pts.end(), extra.begin(), extra.end());
        std::sort(pts.begin(), pts.end());
    }
    LevelProfile p;
    p.area = area;
    for (auto [t, mu] : pts) {
        p.tau.push_back(t);
        p.mu.push_back(p.mu.empty() ? mu : std::min(mu, p.mu.back()));
        p.rho.push_back(std::sqrt(p.mu.back() / pi));
    }
    return p;
}

/// Threshold tau with mu(tau) = m by monotone linear interpolation.
inline double threshold_for_measure(const LevelProfile& p, double m)
{
    if (p.tau.empty()) return 0.0;
    if (m >= p.mu.front()) return p.tau.front();
    if (m <= p.mu.back()) return p.tau.back();
    // mu is non-increasing: find i with mu[i] >= m > mu[i+1]
    std::size_t lo = 0, hi = p.mu.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (p.mu[mid] >= m) lo = mid;
        else hi = mid;
    }
    const double d = p.mu[lo] - p.mu[hi];
    const double f = d > 0.0 ? (p.mu[lo] - m) / d : 0.0;
    return p.tau[lo] + f * (p.tau[hi] - p.tau[lo]);
}

/// Radially non-increasing rearrangement onto `disk`, a mesh of the disk of
/// the same area centred at the origin: the value at radius r is the
/// threshold whose superlevel set has area pi r^2.
inline Field symmetrize(const Field& f, std::shared_ptr<const Mesh> disk, const LevelProfile& p)
{
    Field out = Field::interpolate(disk, [&](Point x) { return threshold_for_measure(p, pi * norm2(x)); });
    if (f.admissible() && f.values.minCoeff() >= 0.0) out.clear_boundary();
    return out;
}

inline Field symmetrize(const Field& f, std::shared_ptr<const Mesh> disk)
{
    return symmetrize(f, std::move(disk), level_profile(f));
}

/// Dirichlet energy lost by symmetrization; nonnegative up to discretization.
inline double polya_szego_slack(const Field& f, std::shared_ptr<const Mesh> disk)
{
    return dirichlet_energy(f) - dirichlet_energy(symmetrize(f, std::move(disk)));
}

inline std::string format_level_profile(const LevelProfile& p)
{
    std::ostringstream os;
    os << std::setprecision(12) << "tau mu\n";
    for (std::size_t i = 0; i < p.tau.size(); ++i) os << p.tau[i] << ' ' << p.mu[i] << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Level-set comparison function

struct LevelLineIntegrals {
    double grad = 0.0;      // int_{u = tau} |grad u|
    double inv_grad = 0.0;  // int_{u = tau} 1/|grad u|  (= -d mu / d tau)
    double length = 0.0;
};

inline LevelLineIntegrals level_line_integrals(const Mesh& m, const Vector& u, double tau)
{
    LevelLineIntegrals out;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& T = m.triangles[t];
        const double v[3] = {u[T[0]], u[T[1]], u[T[2]]};
        Point cut[2];
        int n = 0;
        for (int k = 0; k < 3 && n < 2; ++k) {
            const double a = v[k], b = v[(k + 1) % 3];
            if ((a > tau) != (b > tau)) {
                const double s = (tau - a) / (b - a);
                cut[n++] = m.vertices[T[k]] + s * (m.vertices[T[(k + 1) % 3]] - m.vertices[T[k]]);
            }
        }
        if (n < 2) continue;
        const double len = distance(cut[0], cut[1]);
        const double g = norm(triangle_gradient(m, t, u));
        if (!(g > 0.0)) continue;
        out.grad += g * len;
        out.inv_grad += len / g;
        out.length += len;
    }
    return out;
}

/// phi(t) = int_{u < t} |grad u|^2 - int_{B \ B(rho(t))} |grad u*|^2, written
/// with the coarea formula as
///   int_0^t [ int_{u=tau} |grad u| - 4 pi mu(tau) / int_{u=tau} |grad u|^{-1} ] dtau,
/// which is nonnegative by Cauchy-Schwarz and the isoperimetric inequality.
/// Returns phi at each requested t (ascending), integrated by 3-point
/// Gauss-Legendre on `panels` panels per unit of tau.
inline std::vector<double> level_comparison(const Field& f, const std::vector<double>& ts, int panels = 400)
{
    const Mesh& m = *f.mesh;
    auto integrand = [&](double tau) {
        const auto li = level_line_integrals(m, f.values, tau);
        if (li.inv_grad <= 0.0) return 0.0;
        return li.grad - 4.0 * pi * superlevel_measure(m, f.values, tau) / li.inv_grad;
    };
    static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    std::vector<double> out;
    double acc = 0.0, at = 0.0;
    for (double t : ts) {
        if (t < at) throw DomainError("level_comparison: thresholds must be ascending");
        const int n = std::max(1, int(std::ceil((t - at) * panels)));
        const double w = (t - at) / n;
        for (int i = 0; i < n; ++i) {
            const double c = at + (i + 0.5) * w;
            for (int k = 0; k < 3; ++k) acc += 0.5 * w * gw[k] * integrand(c + 0.5 * w * gx[k]);
        }
        at = t;
        out.push_back(acc);
    }
    return out;
}

} // namespace mfe
