#pragma once

// Dirichlet Green's functions and Robin functions (regular part of G on the
// diagonal). Closed forms for the unit disk and the infinite strip; the method
// of fundamental solutions for every other domain.

#include "error.hpp"
#include "geometry.hpp"
#include "point.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

/// Free-space fundamental solution (1/2pi) ln(1/|x - y|).
inline double log_kernel(Point x, Point y) { return -std::log(distance(x, y)) / two_pi; }

// ---------------------------------------------------------------------------
// Closed forms

/// Green's function of the unit disk by reflection across the unit circle.
inline double disk_green(Point x, Point y)
{
    if (norm2(x) >= 1.0 || norm2(y) >= 1.0) throw DomainError("disk_green: points must lie inside the unit disk");
    if (x == y) throw SingularityError("disk_green: coincident points");
    // |x - y*| |y| with y* = y / |y|^2, written without dividing by |y|.
    const double num2 = norm2(x) * norm2(y) - 2.0 * dot(x, y) + 1.0;
    return std::log(num2 / norm2(x - y)) / (2.0 * two_pi);
}

/// Robin function of the unit disk, (1/2pi) ln(1 - |x|^2).
inline double robin_disk(Point x)
{
    const double r2 = norm2(x);
    if (r2 >= 1.0) throw DomainError("robin_disk: point must lie inside the unit disk");
    return std::log1p(-r2) / two_pi;
}

/// Green's function of the strip {0 < Im z < d} with pole at alpha*i,
///   G(z, alpha i) = (1/2pi) log |(e^{pi z/d} - e^{-i alpha pi/d}) / (e^{pi z/d} - e^{i alpha pi/d})|.
/// The closed strip is accepted so that the boundary values can be checked.
inline double strip_green(Point z, double alpha, double d)
{
    if (!(d > 0.0) || !(alpha > 0.0 && alpha < d)) throw DomainError("strip_green: need 0 < alpha < d");
    if (z.y < 0.0 || z.y > d) throw DomainError("strip_green: point outside the strip");
    if (z.x == 0.0 && z.y == alpha) throw SingularityError("strip_green: point coincides with the pole");
    using C = std::complex<double>;
    const double beta = alpha * pi / d;
    const C w(pi * z.x / d, pi * z.y / d);
    C num, den;
    if (z.x <= 0.0) {
        const C e = std::exp(w);
        num = e - std::polar(1.0, -beta);
        den = e - std::polar(1.0, beta);
    } else {
        // Divide through by e^{w} to keep the exponentials bounded.
        const C e = std::exp(-w);
        num = 1.0 - e * std::polar(1.0, -beta);
        den = 1.0 - e * std::polar(1.0, beta);
    }
    return std::log(std::abs(num) / std::abs(den)) / two_pi;
}

/// Robin function of the strip of width d at height alpha:
/// (1/2pi) log(2 sin(alpha pi/d) / (pi/d)).
inline double strip_robin(double alpha, double d)
{
    if (!(d > 0.0) || !(alpha > 0.0 && alpha < d)) throw DomainError("strip_robin: need 0 < alpha < d");
    return std::log(2.0 * std::sin(alpha * pi / d) * d / pi) / two_pi;
}

/// Supremum of the strip Robin function, attained on the midline.
inline double strip_robin_sup(double d) { return std::log(2.0 * d / pi) / two_pi; }

struct StripRobinMax {
    double alpha = 0.0;
    double value = 0.0;
};

/// Numerical maximum of strip_robin over the height, by Brent's method.
inline StripRobinMax strip_robin_max(double d)
{
    if (!(d > 0.0)) throw DomainError("strip_robin_max: width must be positive");
    const auto r = boost::math::tools::brent_find_minima([d](double a) { return -strip_robin(a, d); }, 1e-6 * d,
                                                         (1.0 - 1e-6) * d, std::numeric_limits<double>::digits);
    return {r.first, -r.second};
}

// ---------------------------------------------------------------------------
// Green evaluators

enum class GreenMethod { closed_form, fundamental_solutions };

/// G(., pole) for a fixed pole. Immutable; copies share the charge data.
class GreenEvaluator {
public:
    struct Charges {
        std::vector<Point> positions;
        std::vector<double> weights;   // coefficient of ln|x - s_j|
        double constant = 0.0;
    };

    /// Closed-form evaluator for a disk domain.
    static GreenEvaluator disk(const Domain& d, Point pole)
    {
        if (d.kind() != DomainKind::disk) throw DomainError("closed-form evaluator needs a disk");
        if (!d.contains(pole)) throw DomainError("pole outside the domain");
        GreenEvaluator g;
        g.method_ = GreenMethod::closed_form;
        g.pole_ = pole;
        g.center_ = d.spec().center;
        g.radius_ = d.spec().params[0];
        return g;
    }

    static GreenEvaluator from_charges(Point pole, std::shared_ptr<const Charges> charges)
    {
        GreenEvaluator g;
        g.method_ = GreenMethod::fundamental_solutions;
        g.pole_ = pole;
        g.charges_ = std::move(charges);
        return g;
    }

    GreenMethod method() const { return method_; }
    Point pole() const { return pole_; }
    std::span<const double> charge_weights() const
    {
        return charges_ ? std::span<const double>(charges_->weights) : std::span<const double>{};
    }
    std::span<const Point> charge_positions() const
    {
        return charges_ ? std::span<const Point>(charges_->positions) : std::span<const Point>{};
    }

    /// Harmonic part h = G - (1/2pi) ln(1/|x - pole|); finite at the pole.
    double regular_part(Point x) const
    {
        if (method_ == GreenMethod::closed_form) {
            const Point u = (x - center_) / radius_;
            const Point v = (pole_ - center_) / radius_;
            // G_R(x, y) = G_1(x/R, y/R); the image term of the unit disk is
            // (1/4pi) ln(|u|^2 |v|^2 - 2 u.v + 1).
            const double q = norm2(u) * norm2(v) - 2.0 * dot(u, v) + 1.0;
            return std::log(q) / (2.0 * two_pi) + std::log(radius_) / two_pi;
        }
        const auto& c = *charges_;
        double s = c.constant;
        for (std::size_t j = 0; j < c.positions.size(); ++j)
            s += c.weights[j] * std::log(distance(x, c.positions[j]));
        return s;
    }

    double operator()(Point x) const
    {
        if (x == pole_) throw SingularityError("Green's function evaluated at its pole");
        return log_kernel(x, pole_) + regular_part(x);
    }

private:
    GreenMethod method_ = GreenMethod::closed_form;
    Point pole_{};
    Point center_{};
    double radius_ = 1.0;
    std::shared_ptr<const Charges> charges_;
};

// ---------------------------------------------------------------------------
// Method of fundamental solutions

struct MfsOptions {
    std::size_t charges = 256;
    /// Smooth kinds: charges on the boundary dilated about the centroid.
    double dilation = 1.5;
    /// Polygonal kinds: charges on the rounded offset curve at this fraction
    /// of the inradius.
    double polygon_offset = 0.5;
    /// Singular values below this fraction of the largest are discarded.
    double svd_cutoff = 1e-15;
    /// Effective condition number ||A|| ||c|| / ||b|| above which a charge
    /// system is rejected. Accurate solves on the suite domains reach 1e13.
    double max_effective_condition = 1e15;
};

struct RobinValue {
    double value = 0.0;
    /// Radii and extrapolation table used for the regular part.
    std::array<double, 3> radii{};
    std::array<double, 3> circle_means{};
    double effective_condition = 0.0;
    bool near_boundary = false;
};

/// Least-squares fundamental-solutions solver. The charge geometry and the SVD
/// of the collocation matrix depend only on the domain, so one solver serves
/// every pole.
class MfsSolver {
public:
    explicit MfsSolver(const Domain& d, MfsOptions opt = {}) : domain_(d), opt_(opt)
    {
        if (opt_.charges < 64) throw DomainError("fundamental solutions need at least 64 charges");
        place_points();
        factor();
    }

    const Domain& domain() const { return domain_; }
    const MfsOptions& options() const { return opt_; }
    std::span<const Point> charges() const { return sources_; }
    std::span<const Point> collocation() const { return colloc_; }
    double collocation_spacing() const { return domain_.perimeter() / double(colloc_.size()); }
    double singular_value_ratio() const { return sigma_ratio_; }

    GreenEvaluator green(Point pole) const
    {
        if (!domain_.contains(pole)) throw DomainError("pole outside the domain");
        double eff = 0.0;
        return GreenEvaluator::from_charges(pole, solve(pole, eff));
    }

    /// Robin function at x0: circle means of G - (1/2pi) ln(1/|x - x0|) at
    /// radii r, r/2, r/4 (r = 0.05 inradius) combined by Richardson
    /// extrapolation in r^2.
    RobinValue robin_detailed(Point x0) const
    {
        if (!domain_.contains(x0)) throw DomainError("robin: point outside the domain");
        RobinValue out;
        auto charges = solve(x0, out.effective_condition);
        const GreenEvaluator g = GreenEvaluator::from_charges(x0, charges);
        const double dist = domain_.distance_to_boundary(x0);
        out.near_boundary = dist < 2.0 * collocation_spacing();
        const double r0 = std::min(0.05 * domain_.inradius(), 0.5 * dist);
        constexpr int m = 16;
        for (int k = 0; k < 3; ++k) {
            const double r = r0 / double(1 << k);
            double s = 0.0;
            for (int i = 0; i < m; ++i) {
                const double th = two_pi * (i + 0.5) / m;
                const Point x = x0 + r * Point{std::cos(th), std::sin(th)};
                s += g(x) - log_kernel(x, x0);
            }
            out.radii[k] = r;
            out.circle_means[k] = s / m;
        }
        const double e1 = (4.0 * out.circle_means[1] - out.circle_means[0]) / 3.0;
        const double e2 = (4.0 * out.circle_means[2] - out.circle_means[1]) / 3.0;
        out.value = (16.0 * e2 - e1) / 15.0;
        return out;
    }

    double robin(Point x0) const { return robin_detailed(x0).value; }

    /// max |G| over `n` boundary points interleaved with the collocation set.
    double dirichlet_residual(const GreenEvaluator& g, std::size_t n = 0) const
    {
        if (n == 0) n = 4 * opt_.charges;
        double worst = 0.0;
        for (Point b : test_points(n)) worst = std::max(worst, std::abs(g(b)));
        return worst;
    }

    std::vector<Point> test_points(std::size_t n) const
    {
        if (domain_.is_polygonal()) return polygon_boundary_points(n, 0.37);
        return domain_.sample_boundary_arclength(n, 0.37);
    }

private:
    Domain domain_;
    MfsOptions opt_;
    std::vector<Point> sources_;
    std::vector<Point> colloc_;
    Eigen::MatrixXd U_;
    Eigen::VectorXd inv_sigma_;
    Eigen::MatrixXd V_;
    Eigen::VectorXd col_scale_;
    double norm_A_ = 1.0;
    double sigma_ratio_ = 0.0;

    /// Boundary points of a polygonal domain clustered toward the vertices
    /// (cosine spacing on every edge, weighted by edge length).
    std::vector<Point> polygon_boundary_points(std::size_t n, double phase) const
    {
        const auto v = domain_.vertices();
        const std::size_t nv = v.size();
        const double per = domain_.perimeter();
        std::vector<Point> out;
        std::size_t used = 0;
        for (std::size_t e = 0; e < nv; ++e) {
            const Point a = v[e], b = v[(e + 1) % nv];
            std::size_t k = e + 1 == nv ? n - used
                                        : std::max<std::size_t>(2, std::size_t(std::lround(double(n) * distance(a, b) / per)));
            used += k;
            for (std::size_t i = 0; i < k; ++i) {
                const double s = (double(i) + phase) / double(k);
                const double t = 0.5 - 0.5 * std::cos(pi * s);
                out.push_back(a + t * (b - a));
            }
        }
        return out;
    }

    void place_points()
    {
        const std::size_t n = opt_.charges;
        if (!domain_.is_polygonal()) {
            const Point c = domain_.centroid();
            colloc_ = domain_.sample_boundary_arclength(2 * n);
            for (Point p : domain_.sample_boundary_arclength(n, 0.25))
                sources_.push_back(c + opt_.dilation * (p - c));
            return;
        }
        colloc_ = polygon_boundary_points(2 * n, 0.0);
        // Charges on the offset curve with rounded corners: a translated copy
        // of every edge plus a circular arc around every vertex.
        const auto v = domain_.vertices();
        const std::size_t nv = v.size();
        const double off = opt_.polygon_offset * domain_.inradius();
        std::vector<Point> normals(nv);
        for (std::size_t e = 0; e < nv; ++e) {
            const Point t = v[(e + 1) % nv] - v[e];
            normals[e] = Point{t.y, -t.x} / norm(t);
        }
        const std::size_t arc_pts = std::max<std::size_t>(3, n / (4 * nv));
        const std::size_t edge_budget = n - arc_pts * nv;
        const double per = domain_.perimeter();
        std::size_t used = 0;
        for (std::size_t e = 0; e < nv; ++e) {
            const Point a = v[e], b = v[(e + 1) % nv];
            const std::size_t k = e + 1 == nv ? edge_budget - used
                                              : std::max<std::size_t>(2, std::size_t(std::lround(double(edge_budget) * distance(a, b) / per)));
            used += k;
            for (std::size_t i = 0; i < k; ++i) {
                const double s = (double(i) + 0.5) / double(k);
                const double t = 0.5 - 0.5 * std::cos(pi * s);
                sources_.push_back(a + t * (b - a) + off * normals[e]);
            }
            const Point n0 = normals[e], n1 = normals[(e + 1) % nv];
            const double a0 = std::atan2(n0.y, n0.x);
            double da = std::atan2(n1.y, n1.x) - a0;
            while (da < 0.0) da += two_pi;
            while (da >= two_pi) da -= two_pi;
            if (da > pi) continue;   // reflex vertex: no arc on the outside
            for (std::size_t i = 0; i < arc_pts; ++i) {
                const double ang = a0 + da * (double(i) + 0.5) / double(arc_pts);
                sources_.push_back(b + off * Point{std::cos(ang), std::sin(ang)});
            }
        }
    }

    void factor()
    {
        const Eigen::Index m = Eigen::Index(colloc_.size());
        const Eigen::Index n = Eigen::Index(sources_.size());
        Eigen::MatrixXd A(m, n + 1);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) A(i, j) = std::log(distance(colloc_[i], sources_[j]));
            A(i, n) = 1.0;
        }
        col_scale_ = A.colwise().norm().transpose();
        for (Eigen::Index j = 0; j <= n; ++j) A.col(j) /= col_scale_[j];
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& s = svd.singularValues();
        norm_A_ = s[0];
        inv_sigma_.resize(s.size());
        double smallest = s[0];
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            if (s[k] > opt_.svd_cutoff * s[0]) {
                inv_sigma_[k] = 1.0 / s[k];
                smallest = s[k];
            } else {
                inv_sigma_[k] = 0.0;
            }
        }
        sigma_ratio_ = s[0] / smallest;
        U_ = svd.matrixU();
        V_ = svd.matrixV();
    }

    std::shared_ptr<const GreenEvaluator::Charges> solve(Point pole, double& effective_condition) const
    {
        const Eigen::Index m = Eigen::Index(colloc_.size());
        const Eigen::Index n = Eigen::Index(sources_.size());
        Eigen::VectorXd b(m);
        for (Eigen::Index i = 0; i < m; ++i) b[i] = std::log(distance(colloc_[i], pole)) / two_pi;
        const Eigen::VectorXd y = (U_.transpose() * b).cwiseProduct(inv_sigma_);
        const Eigen::VectorXd c = V_ * y;
        effective_condition = norm_A_ * c.norm() / std::max(b.norm(), 1e-300);
        if (!(effective_condition < opt_.max_effective_condition))
            throw RefinementError("fundamental-solutions system ill-conditioned (effective condition " +
                                  std::to_string(effective_condition) + "); reduce the charge count or the dilation");
        auto out = std::make_shared<GreenEvaluator::Charges>();
        out->positions = sources_;
        out->weights.resize(std::size_t(n));
        for (Eigen::Index j = 0; j < n; ++j) out->weights[std::size_t(j)] = c[j] / col_scale_[j];
        out->constant = c[n] / col_scale_[n];
        return out;
    }
};

/// Robin function gamma(x0) by fundamental solutions with N charges.
inline double robin_numeric(const Domain& d, Point x0, std::size_t charges = 256)
{
    MfsOptions opt;
    opt.charges = charges;
    return MfsSolver(d, opt).robin(x0);
}

/// Closed form on disks, fundamental solutions elsewhere.
inline GreenEvaluator make_green(const Domain& d, Point pole, MfsOptions opt = {})
{
    if (d.kind() == DomainKind::disk) return GreenEvaluator::disk(d, pole);
    return MfsSolver(d, opt).green(pole);
}

/// Robin function value, closed form on disks.
inline double robin_value(const Domain& d, Point x0, MfsOptions opt = {})
{
    if (d.kind() == DomainKind::disk) {
        const double R = d.spec().params[0];
        return robin_disk((x0 - d.spec().center) / R) + std::log(R) / two_pi;
    }
    return MfsSolver(d, opt).robin(x0);
}

// ---------------------------------------------------------------------------
// Supremum of the Robin function

struct RobinSample {
    Point point;
    double value = 0.0;
};

struct RobinReport {
    DomainSpec domain;
    MfsOptions options;
    std::size_t grid = 0;
    double boundary_margin = 0.0;
    std::vector<RobinSample> samples;
    /// Local maxima reached by the ascent, sorted by decreasing value.
    std::vector<RobinSample> local_maxima;
    double gamma_sup = 0.0;
    Point argmax;
    /// |gamma(argmax) with 2N charges - gamma(argmax) with N charges|.
    double convergence_delta = 0.0;
    /// max |G(., argmax)| over 4N fresh boundary points.
    double dirichlet_residual = 0.0;
    bool corners = false;
    std::vector<std::string> warnings;
};

namespace detail {

/// 2-D BFGS ascent of f restricted to the set where `admissible` holds.
template <class F, class Adm>
RobinSample bfgs_ascent(const F& f, const Adm& admissible, Point x, double step, int max_iter = 60)
{
    auto grad = [&](Point p) {
        return Point{(f(p + Point{step, 0}) - f(p - Point{step, 0})) / (2 * step),
                     (f(p + Point{0, step}) - f(p - Point{0, step})) / (2 * step)};
    };
    double fx = f(x);
    Point g = grad(x);
    // inverse Hessian of -f
    double H[2][2] = {{1, 0}, {0, 1}};
    double scale = 0.0;
    for (int it = 0; it < max_iter && norm(g) > 1e-9; ++it) {
        Point dir{H[0][0] * g.x + H[0][1] * g.y, H[1][0] * g.x + H[1][1] * g.y};
        if (dot(dir, g) <= 0.0) {
            H[0][0] = H[1][1] = 1.0;
            H[0][1] = H[1][0] = 0.0;
            dir = g;
        }
        if (scale == 0.0) scale = std::min(1.0, 10.0 * step / norm(dir));
        double t = it == 0 ? scale : 1.0;
        Point xn;
        double fn = fx;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            xn = x + t * dir;
            if (!admissible(xn)) continue;
            fn = f(xn);
            if (fn >= fx + 1e-4 * t * dot(dir, g)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const Point gn = grad(xn);
        const Point s = xn - x;
        const Point y = g - gn;   // gradient change of -f
        const double sy = dot(s, y);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Point Hy{H[0][0] * y.x + H[0][1] * y.y, H[1][0] * y.x + H[1][1] * y.y};
            const double yHy = dot(y, Hy);
            const double ss[2] = {s.x, s.y};
            const double hy[2] = {Hy.x, Hy.y};
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    H[i][j] += (1.0 + rho * yHy) * rho * ss[i] * ss[j] - rho * (hy[i] * ss[j] + ss[i] * hy[j]);
        }
        x = xn;
        fx = fn;
        g = gn;
    }
    return {x, fx};
}

} // namespace detail

/// gamma(Omega) = sup gamma(x): a grid sweep over points at distance at least
/// 0.02 * diameter from the boundary, refined by quasi-Newton ascent from the
/// five best grid points. A grid point whose solve fails is skipped with a
/// warning.
inline RobinReport robin_sup(const Domain& d, std::size_t grid = 24, MfsOptions opt = {})
{
    if (grid < 2) throw DomainError("robin_sup: grid needs at least 2 points per axis");
    RobinReport rep;
    rep.domain = d.spec();
    rep.options = opt;
    rep.grid = grid;
    rep.corners = d.has_corners();
    rep.boundary_margin = 0.02 * d.diameter();
    const MfsSolver solver(d, opt);

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (Point p : d.sample_boundary(1024)) {
        xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
    }
    auto admissible = [&](Point p) { return d.contains(p) && d.distance_to_boundary(p) >= rep.boundary_margin; };
    for (std::size_t j = 0; j < grid; ++j)
        for (std::size_t i = 0; i < grid; ++i) {
            // cell-centred grid; odd grids hit the box centre
            const Point p{xmin + (xmax - xmin) * (double(i) + 0.5) / double(grid),
                          ymin + (ymax - ymin) * (double(j) + 0.5) / double(grid)};
            if (!admissible(p)) continue;
            try {
                rep.samples.push_back({p, solver.robin(p)});
            } catch (const Error& e) {
                rep.warnings.push_back("sample (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                       ") skipped: " + e.what());
            }
        }
    if (rep.samples.empty()) throw RefinementError("robin_sup: no admissible grid point; increase the grid");

    std::vector<std::size_t> order(rep.samples.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rep.samples[a].value > rep.samples[b].value; });

    auto f = [&](Point p) { return solver.robin(p); };
    const double step = 1e-4 * d.diameter();
    for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
        RobinSample m;
        try {
            m = detail::bfgs_ascent(f, admissible, rep.samples[order[k]].point, step);
        } catch (const Error& e) {
            rep.warnings.push_back(std::string("ascent skipped: ") + e.what());
            continue;
        }
        bool dup = false;
        for (auto& q : rep.local_maxima)
            if (distance(q.point, m.point) < 1e-3 * d.diameter()) {
                if (m.value > q.value) q = m;
                dup = true;
            }
        if (!dup) rep.local_maxima.push_back(m);
    }
    std::stable_sort(rep.local_maxima.begin(), rep.local_maxima.end(),
                     [](const RobinSample& a, const RobinSample& b) { return a.value > b.value; });

    // Best grid sample with the smallest index among near-ties.
    const double top = rep.samples[order[0]].value;
    std::size_t best = order[0];
    for (std::size_t k = 0; k < rep.samples.size(); ++k)
        if (rep.samples[k].value >= top - 1e-9) {
            best = k;
            break;
        }
    rep.gamma_sup = rep.samples[best].value;
    rep.argmax = rep.samples[best].point;
    if (!rep.local_maxima.empty() && rep.local_maxima.front().value > rep.gamma_sup) {
        rep.gamma_sup = rep.local_maxima.front().value;
        rep.argmax = rep.local_maxima.front().point;
    }

    MfsOptions fine = opt;
    fine.charges = 2 * opt.charges;
    try {
        rep.convergence_delta = std::abs(MfsSolver(d, fine).robin(rep.argmax) - rep.gamma_sup);
    } catch (const Error& e) {
        rep.convergence_delta = std::numeric_limits<double>::infinity();
        rep.warnings.push_back(std::string("convergence check failed: ") + e.what());
    }
    rep.dirichlet_residual = solver.dirichlet_residual(solver.green(rep.argmax));
    if (rep.corners) rep.warnings.push_back("boundary has corners; Robin values near vertices are less accurate");
    return rep;
}

/// Structured text form of a report.
inline std::string format_robin_report(const RobinReport& r)
{
    std::ostringstream os;
    os << std::setprecision(12);
    os << "[domain]\n" << format_domain_spec(r.domain);
    os << "[method]\nmethod = fundamental_solutions\ncharges = " << r.options.charges
       << "\ndilation = " << r.options.dilation << "\npolygon_offset = " << r.options.polygon_offset
       << "\ngrid = " << r.grid << "\nboundary_margin = " << r.boundary_margin << "\n";
    os << "[result]\ngamma_sup = " << r.gamma_sup << "\nargmax = " << r.argmax.x << ", " << r.argmax.y
       << "\nconvergence_delta = " << r.convergence_delta << "\ndirichlet_residual = " << r.dirichlet_residual
       << "\ncorners = " << (r.corners ? "yes" : "no") << "\n";
    os << "[local_maxima]\nx y gamma\n";
    for (const auto& m : r.local_maxima) os << m.point.x << ' ' << m.point.y << ' ' << m.value << '\n';
    os << "[samples]\nx y gamma\n";
    for (const auto& s : r.samples) os << s.point.x << ' ' << s.point.y << ' ' << s.value << '\n';
    if (!r.warnings.empty()) {
        os << "[warnings]\n";
        for (const auto& w : r.warnings) os << w << '\n';
    }
    return os.str();
}

} // namespace mfe
