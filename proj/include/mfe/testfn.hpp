#pragma once

// The Liouville bubble and the glued test function: a rescaled bubble inside
// B(x0, rho), the Green's function 8 pi G(., x0) outside B(x0, 2 rho), and a
// smoothstep transition in between. Its energy at lambda = 8 pi approaches
// -1 - 4 pi gamma(x0).

#include "error.hpp"
#include "fem.hpp"
#include "functional.hpp"
#include "greens.hpp"
#include "mesh.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

/// 2 ln(1 / (1 + |x|^2)), the entire solution of -Lap phi = 8 e^phi with phi(0) = 0.
inline double standard_bubble(Point x) { return -2.0 * std::log1p(norm2(x)); }

/// Laplacian of standard_bubble from its second derivatives.
inline double standard_bubble_laplacian(Point x)
{
    const double q = 1.0 + norm2(x);
    const double xx = -4.0 / q + 8.0 * x.x * x.x / (q * q);
    const double yy = -4.0 / q + 8.0 * x.y * x.y / (q * q);
    return xx + yy;
}

/// Integral of e^{bubble} outside B(R): pi / (1 + R^2).
inline double standard_bubble_tail_mass(double R) { return pi / (1.0 + R * R); }

/// int_{B(R)} |grad bubble|^2 = 16 pi (ln(1 + R^2) - R^2 / (1 + R^2)).
inline double bubble_energy_ball(double R)
{
    if (!(R > 0.0)) throw DomainError("bubble_energy_ball: R must be positive");
    const double x = R * R;
    return 16.0 * pi * (std::log1p(x) - x / (1.0 + x));
}

struct BubbleParams {
    Point center;
    double epsilon = 0.01;
    double Lambda = 100.0;
    /// 8 pi gamma(center).
    double A = 0.0;

    double rho() const { return Lambda * epsilon; }
    double sigma() const { return 1.0 / (1.0 + Lambda * Lambda); }
    /// Constant making the inner zone match 8 pi G at |x - x0| = rho.
    double C_eps() const { return 2.0 * std::log(Lambda * Lambda / (1.0 + Lambda * Lambda)) - A; }

    void validate() const
    {
        if (!(epsilon > 0.0) || !(Lambda > 0.0)) throw DomainError("bubble parameters must be positive");
    }
};

struct GluedEnergyPieces {
    double inner = 0.0;            // -ln sigma - 1 + sigma
    double outer = 0.0;            // 2 ln(1/rho) + A/2
    double total_over_16pi = 0.0;  // inner + outer
    double log_term = 0.0;         // -A + 2 ln eps - ln((1 + Lambda^2) / Lambda^2)
    double bound = 0.0;            // total_over_16pi + log_term = -1 + sigma - A/2
};

inline GluedEnergyPieces glued_energy_pieces(const BubbleParams& p)
{
    p.validate();
    GluedEnergyPieces g;
    const double s = p.sigma();
    const double L2 = p.Lambda * p.Lambda;
    g.inner = -std::log(s) - 1.0 + s;
    g.outer = -2.0 * std::log(p.rho()) + 0.5 * p.A;
    g.total_over_16pi = g.inner + g.outer;
    g.log_term = -p.A + 2.0 * std::log(p.epsilon) - std::log1p(1.0 / L2);
    g.bound = g.total_over_16pi + g.log_term;
    return g;
}

/// Cubic smoothstep: 1 for r <= rho, 0 for r >= 2 rho; |eta'| <= 1.5 / rho.
inline double transition_weight(double r, double rho)
{
    const double s = std::clamp((r - rho) / rho, 0.0, 1.0);
    return 1.0 - s * s * (3.0 - 2.0 * s);
}

/// Value of the glued function at x given 8 pi G(., x0).
inline double glued_value(const GreenEvaluator& g, const BubbleParams& p, Point x)
{
    const double r = distance(x, p.center);
    const double rho = p.rho();
    if (r <= rho) return -2.0 * std::log(p.epsilon * p.epsilon + r * r) - p.C_eps();
    const double green8 = 8.0 * pi * g(x);
    if (r >= 2.0 * rho) return green8;
    // alpha(x) = 8 pi G - 4 ln(1/|x - x0|) - A, the smooth remainder
    const double alpha = 8.0 * pi * g.regular_part(x) - p.A;
    return green8 - transition_weight(r, rho) * alpha;
}

/// Nodal interpolant of the glued function. The mesh must resolve the bubble
/// scale: edges at the vertex nearest the centre at most epsilon/4.
inline Field build_glued_field(const Domain& d, const BubbleParams& p, std::shared_ptr<const Mesh> m,
                               const GreenEvaluator& g)
{
    p.validate();
    if (!d.contains(p.center)) throw DomainError("build_glued_field: centre outside the domain");
    if (distance(g.pole(), p.center) > 1e-12 * (1.0 + norm(p.center)))
        throw DomainError("build_glued_field: Green's function pole differs from the bubble centre");
    if (p.rho() > d.distance_to_boundary(p.center) * (1.0 + 1e-12))
        throw DomainError("build_glued_field: rho exceeds the distance to the boundary");
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < m->num_vertices(); ++i)
        if (distance(m->vertices[i], p.center) < distance(m->vertices[nearest], p.center)) nearest = i;
    double local = 0.0;
    for (const auto& T : m->triangles) {
        if (T[0] != int(nearest) && T[1] != int(nearest) && T[2] != int(nearest)) continue;
        for (int k = 0; k < 3; ++k) local = std::max(local, distance(m->vertices[T[k]], m->vertices[T[(k + 1) % 3]]));
    }
    if (local > 0.25 * p.epsilon * (1.0 + 1e-9))
        throw RefinementError("build_glued_field: mesh too coarse at the bubble centre; need edge length <= " +
                              std::to_string(0.25 * p.epsilon) + " (have " + std::to_string(local) + ")");
    Vector v(static_cast<Eigen::Index>(m->num_vertices()));
    for (std::size_t i = 0; i < m->num_vertices(); ++i) {
        const Point x = m->vertices[i];
        if (x == p.center && p.rho() <= 0.0) throw SingularityError("glued field evaluated at its pole");
        v[Eigen::Index(i)] = glued_value(g, p, x);
        if (m->boundary[i]) {
            if (std::abs(v[Eigen::Index(i)]) > 1e-6)
                throw DomainError("build_glued_field: transition annulus crosses the boundary (boundary value " +
                                  std::to_string(v[Eigen::Index(i)]) + ")");
            v[Eigen::Index(i)] = 0.0;
        }
    }
    return Field(std::move(m), std::move(v));
}

/// Mesh graded to the bubble scale: min size epsilon/10 at the centre, local
/// size growing by `rate` per unit distance.
inline std::shared_ptr<const Mesh> bubble_mesh(const Domain& d, const BubbleParams& p, double h, double rate = 0.05)
{
    return std::make_shared<const Mesh>(triangulate(d, h, Grading{p.center, 0.1 * p.epsilon, rate}));
}

struct TestFunctionRow {
    double epsilon = 0.0;
    double Lambda = 0.0;
    double rho = 0.0;
    double bound = 0.0;     // closed-form -1 + sigma - A/2
    double value = std::numeric_limits<double>::quiet_NaN();   // I at 8 pi of the built field
    std::string status;     // "ok" or the pruning reason
};

struct TestFunctionTable {
    Point center;
    double gamma = 0.0;
    std::vector<TestFunctionRow> rows;

    /// Smallest computed value, NaN if every row was pruned.
    double best_value() const
    {
        double b = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : rows)
            if (r.status == "ok" && !(r.value >= b)) b = r.value;
        return b;
    }
};

inline const std::vector<double>& default_bubble_epsilons()
{
    static const std::vector<double> v{1e-1, 3e-2, 1e-2};
    return v;
}

inline const std::vector<double>& default_bubble_lambdas()
{
    static const std::vector<double> v{10.0, 100.0, 1000.0};
    return v;
}

/// Evaluates I at lambda = 8 pi for the glued field over an (epsilon, Lambda)
/// grid; grid points with rho beyond the boundary distance, or whose
/// transition zone reaches the boundary, are pruned.
inline TestFunctionTable testfn_grid(const Domain& d, Point center, double gamma, const GreenEvaluator& g, double h,
                                     const std::vector<double>& epsilons = default_bubble_epsilons(),
                                     const std::vector<double>& lambdas = default_bubble_lambdas())
{
    TestFunctionTable tab;
    tab.center = center;
    tab.gamma = gamma;
    const double dist = d.distance_to_boundary(center);
    for (double eps : epsilons)
        for (double L : lambdas) {
            TestFunctionRow row;
            BubbleParams p{center, eps, L, 8.0 * pi * gamma};
            row.epsilon = eps;
            row.Lambda = L;
            row.rho = p.rho();
            row.bound = glued_energy_pieces(p).bound;
            if (row.rho > dist * (1.0 + 1e-12)) {
                row.status = "pruned: rho > dist";
            } else {
                try {
                    const auto m = bubble_mesh(d, p, std::min(h, 0.2 * dist));
                    const Field f = build_glued_field(d, p, m, g);
                    row.value = eval_I(f, FunctionalParams{critical_lambda, 0.0, std::nullopt});
                    row.status = "ok";
                } catch (const DomainError& e) {
                    row.status = std::string("pruned: ") + e.what();
                }
            }
            tab.rows.push_back(row);
        }
    return tab;
}

inline std::string format_testfn_table(const TestFunctionTable& t)
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << "center = " << t.center.x << ", " << t.center.y << "\ngamma = " << t.gamma << "\n";
    os << "epsilon Lambda rho bound value status\n";
    for (const auto& r : t.rows)
        os << r.epsilon << ' ' << r.Lambda << ' ' << r.rho << ' ' << r.bound << ' ' << r.value << ' ' << r.status
           << '\n';
    return os.str();
}

} // namespace mfe
