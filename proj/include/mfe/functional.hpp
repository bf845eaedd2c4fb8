#pragma once

// The mean-field functional
//   I(u) = (1/2 lambda) int |grad u|^2 - (1 - eps) ln( (1/|Omega|) int e^u )
// on piecewise-linear fields with zero boundary values: evaluation, exact
// gradient, Newton minimization, continuation in lambda, and the energy
// estimate -1 - 4 pi gamma(Omega).

#include "error.hpp"
#include "fem.hpp"
#include "greens.hpp"
#include "mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

inline constexpr double critical_lambda = 8.0 * pi;

struct FunctionalParams {
    double lambda = 4.0 * pi;
    double epsilon = 0.0;
    /// |Omega| in the log term; the mesh area when unset, so that I(0) = 0.
    std::optional<double> area;

    void validate() const
    {
        if (!(lambda > 0.0) || lambda > critical_lambda * (1.0 + 1e-15))
            throw DomainError("lambda must lie in (0, 8 pi]");
        if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
        if (area && !(*area > 0.0)) throw DomainError("area normalization must be positive");
    }
};

/// Raised when the Newton iteration cannot make progress; carries the last
/// iterate.
class DivergedError : public Error {
public:
    DivergedError(const std::string& what, Field last) : Error(what), last_(std::move(last)) {}
    const Field& last_iterate() const { return last_; }

private:
    Field last_;
};

// ---------------------------------------------------------------------------
// Discrete functional

/// I and its derivatives on the interior unknowns of a FemSpace.
class DiscreteFunctional {
public:
    DiscreteFunctional(std::shared_ptr<const FemSpace> space, FunctionalParams p) : space_(std::move(space)), p_(p)
    {
        p_.validate();
        area_ = p_.area ? *p_.area : space_->mesh().area();
        const Mesh& m = space_->mesh();
        edges_.reserve(3 * m.num_triangles());
        for (std::size_t t = 0; t < m.num_triangles(); ++t) {
            const auto& T = m.triangles[t];
            const double w = m.triangle_area(t) / 3.0;
            for (int k = 0; k < 3; ++k) edges_.push_back({T[k], T[(k + 1) % 3], w});
        }
    }

    const FemSpace& space() const { return *space_; }
    std::shared_ptr<const FemSpace> space_ptr() const { return space_; }
    const FunctionalParams& params() const { return p_; }
    double area() const { return area_; }
    double mass_factor() const { return 1.0 - p_.epsilon; }

    /// State shared by value, gradient and Hessian products at one point.
    struct Point_ {
        Vector u;            // full nodal vector
        Vector Ku;           // stiffness times u (full)
        double log_q = 0.0;  // ln int e^u
        double top = 0.0;
        Vector edge_weight;  // w_e e^{m_e - top} / Q~ for every triangle edge
        Vector q;            // gradient of ln Q (full)
        double value = 0.0;
        Vector grad;         // interior gradient
    };

    Point_ at(const Vector& u_full) const
    {
        Point_ s;
        s.u = u_full;
        s.Ku = space_->stiffness() * u_full;
        const auto ne = Eigen::Index(edges_.size());
        s.top = -std::numeric_limits<double>::infinity();
        for (const auto& e : edges_) s.top = std::max(s.top, 0.5 * (u_full[e.i] + u_full[e.j]));
        s.edge_weight.resize(ne);
        double qt = 0.0;
        for (Eigen::Index k = 0; k < ne; ++k) {
            const auto& e = edges_[std::size_t(k)];
            const double w = e.w * std::exp(0.5 * (u_full[e.i] + u_full[e.j]) - s.top);
            s.edge_weight[k] = w;
            qt += w;
        }
        s.edge_weight /= qt;
        s.log_q = s.top + std::log(qt);
        s.q = Vector::Zero(u_full.size());
        for (Eigen::Index k = 0; k < ne; ++k) {
            const auto& e = edges_[std::size_t(k)];
            s.q[e.i] += 0.5 * s.edge_weight[k];
            s.q[e.j] += 0.5 * s.edge_weight[k];
        }
        const double c = mass_factor();
        s.value = 0.5 / p_.lambda * u_full.dot(s.Ku) - c * (s.log_q - std::log(area_));
        s.grad = space_->restrict(s.Ku / p_.lambda - c * s.q);
        return s;
    }

    double value(const Vector& u_full) const { return at(u_full).value; }

    /// Hessian times an interior vector:
    /// K v / lambda - c (Q''/Q) v + c q (q . v).
    Vector hessian_product(const Point_& s, const Vector& v_inner) const
    {
        const Vector v = space_->extend(v_inner);
        Vector out = space_->stiffness() * v / p_.lambda;
        const double c = mass_factor();
        Vector pv = Vector::Zero(v.size());
        for (std::size_t k = 0; k < edges_.size(); ++k) {
            const auto& e = edges_[k];
            const double t = 0.25 * s.edge_weight[Eigen::Index(k)] * (v[e.i] + v[e.j]);
            pv[e.i] += t;
            pv[e.j] += t;
        }
        out += c * (s.q.dot(v) * s.q - pv);
        return space_->restrict(out);
    }

private:
    struct Edge {
        int i, j;
        double w;
    };
    std::shared_ptr<const FemSpace> space_;
    FunctionalParams p_;
    double area_ = 0.0;
    std::vector<Edge> edges_;
};

inline double eval_I(const Field& f, const FunctionalParams& p)
{
    p.validate();
    require_admissible(f, "eval_I");
    const double area = p.area ? *p.area : f.mesh->area();
    return 0.5 / p.lambda * dirichlet_energy(f) - (1.0 - p.epsilon) * (log_exp_integral(f) - std::log(area));
}

/// Nodal gradient of the discrete functional (zero on boundary nodes).
inline Field grad_I(const Field& f, const FunctionalParams& p)
{
    require_admissible(f, "grad_I");
    const DiscreteFunctional F(std::make_shared<const FemSpace>(f.mesh), p);
    return Field(f.mesh, F.space().extend(F.at(f.values).grad));
}

// ---------------------------------------------------------------------------
// Moser-Trudinger bound

/// pi e exp(D / 16 pi) - int e^u, scaled to the mesh area (|Omega| e exp(D/16pi)
/// - int e^u) so the check applies to any area. Nonnegative up to quadrature
/// error for admissible fields.
inline double mt_bound_check(const Field& f)
{
    require_admissible(f, "mt_bound_check");
    const double area = f.mesh->area();
    return area * std::exp(1.0 + dirichlet_energy(f) / (16.0 * pi)) - exp_integral(f);
}

struct ZhuSides {
    double lhs = 0.0;   // int |grad w|^2
    double rhs = 0.0;   // 4 pi (ln X + 1/X - 1)
    double slack() const { return lhs - rhs; }
};

/// Lower bound 4 pi (ln(a e^{-2b} / (pi r^2)) + pi r^2 / (a e^{-2b}) - 1) for
/// int |grad w|^2 over w = b on the boundary with int e^{2w} = a and
/// pi r^2 = |Omega|.
inline double zhu_lower_bound(double a, double b, double r)
{
    const double x = a * std::exp(-2.0 * b) / (pi * r * r);
    return 4.0 * pi * (std::log(x) + 1.0 / x - 1.0);
}

/// Both sides of the sharp inequality for w = f + b, f admissible.
inline ZhuSides zhu_check(const Field& f, double b = 0.0)
{
    require_admissible(f, "zhu_check");
    Field twice(f.mesh, 2.0 * f.values);
    const double a = std::exp(2.0 * b + log_exp_integral(twice));
    const double r = std::sqrt(f.mesh->area() / pi);
    return {dirichlet_energy(f), zhu_lower_bound(a, b, r)};
}

// ---------------------------------------------------------------------------
// Minimization

struct MinimizeOptions {
    int max_iterations = 200;
    /// Converged when ||grad|| <= tol * (1 + |I|).
    double tolerance = 1e-10;
    /// Contract tolerance; results above it raise DivergedError.
    double acceptance = 1e-8;
    bool multistart = true;
};

struct MinimizeResult {
    Field field;
    double energy = 0.0;
    double lambda = 0.0;
    double epsilon = 0.0;
    double max_value = 0.0;    // lambda_eps
    Point argmax;              // x_eps
    double grad_norm = 0.0;
    int iterations = 0;
    double mt_slack = 0.0;
    double log_exp_integral = 0.0;
    double dirichlet = 0.0;
    /// Energies of accepted iterates, starting with the initial guess.
    std::vector<double> history;
    /// (start name, final energy) of every multi-start branch.
    std::vector<std::pair<std::string, double>> branches;
    std::string start;
};

namespace detail {

/// Newton iteration with a truncated conjugate-gradient inner solve
/// preconditioned by the stiffness matrix, and Armijo backtracking.
inline MinimizeResult newton_minimize(const DiscreteFunctional& F, Vector u, const MinimizeOptions& opt)
{
    const FemSpace& S = F.space();
    const double lam = F.params().lambda;
    auto s = F.at(u);
    MinimizeResult r;
    r.history.push_back(s.value);
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const double gnorm = s.grad.norm();
        if (gnorm <= opt.tolerance * (1.0 + std::abs(s.value))) break;

        // Preconditioned CG on H d = -g with M^{-1} = lambda K^{-1}.
        const Vector& g = s.grad;
        Vector d = Vector::Zero(g.size());
        Vector res = -g;
        Vector z = lam * S.solve_interior(res);
        Vector pdir = z;
        double rz = res.dot(z);
        const double forcing = std::min(0.1, std::sqrt(gnorm)) * std::sqrt(std::abs(rz));
        bool negative = false;
        for (int k = 0; k < 200; ++k) {
            const Vector Hp = F.hessian_product(s, pdir);
            const double curv = pdir.dot(Hp);
            if (!(curv > 0.0)) {
                negative = true;
                break;
            }
            const double alpha = rz / curv;
            d += alpha * pdir;
            res -= alpha * Hp;
            z = lam * S.solve_interior(res);
            const double rz_new = res.dot(z);
            if (std::sqrt(std::abs(rz_new)) <= forcing * 1e-3 || std::sqrt(std::abs(rz_new)) < 1e-15) break;
            pdir = z + (rz_new / rz) * pdir;
            rz = rz_new;
        }
        if (negative && d.squaredNorm() == 0.0) d = -lam * S.solve_interior(g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            d = -lam * S.solve_interior(g);
            slope = g.dot(d);
        }

        double t = 1.0;
        bool accepted = false;
        decltype(s) trial;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            trial = F.at(u + S.extend(t * d));
            if (std::isfinite(trial.value) && trial.value <= s.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // at the floating-point floor of the energy the decrease test is noise
            if (gnorm <= opt.acceptance * (1.0 + std::abs(s.value))) break;
            throw DivergedError("line search failed at lambda = " + std::to_string(lam) + " (gradient norm " +
                                    std::to_string(gnorm) + ")",
                                Field(S.mesh_ptr(), u));
        }
        u += S.extend(t * d);
        const double drop = s.value - trial.value;
        s = std::move(trial);
        r.history.push_back(s.value);
        // stagnation at rounding level
        if (drop <= 1e-15 * (1.0 + std::abs(s.value)) && s.grad.norm() <= opt.acceptance * (1.0 + std::abs(s.value)))
            break;
    }
    r.grad_norm = s.grad.norm();
    if (!(r.grad_norm <= opt.acceptance * (1.0 + std::abs(s.value))))
        throw DivergedError("no convergence at lambda = " + std::to_string(lam) + " after " + std::to_string(it) +
                                " iterations (gradient norm " + std::to_string(r.grad_norm) + ")",
                            Field(S.mesh_ptr(), u));
    r.field = Field(S.mesh_ptr(), u);
    r.energy = s.value;
    r.iterations = it;
    r.lambda = lam;
    r.epsilon = F.params().epsilon;
    r.log_exp_integral = s.log_q;
    r.dirichlet = u.dot(s.Ku);
    const auto k = r.field.argmax_index();
    r.max_value = u[k];
    r.argmax = S.mesh().vertices[std::size_t(k)];
    r.mt_slack = F.area() * std::exp(1.0 + r.dirichlet / (16.0 * pi)) - std::exp(s.log_q);
    return r;
}

} // namespace detail

/// Liouville-type bump centred at the maximum of the torsion function
/// (-Lap w = 1), clipped to vanish on the boundary; the second multi-start
/// branch.
inline Field bubble_initializer(const FemSpace& space, double lambda)
{
    const auto m = space.mesh_ptr();
    const Field w = space.poisson_solve(Field::interpolate(m, [](Point) { return 1.0; }));
    const Point c = m->vertices[std::size_t(w.argmax_index())];
    // the torsion maximum of a disk of radius R is R^2 / 4
    const double rho = 2.0 * std::sqrt(w.max_value());
    const double delta = lambda < critical_lambda ? lambda / (critical_lambda - lambda) : 100.0;
    return Field::interpolate_admissible(m, [&](Point x) {
        return std::max(0.0, 2.0 * std::log((1.0 + delta) / (1.0 + delta * norm2(x - c) / (rho * rho))));
    });
}

/// Minimizes I on the mesh of `init`. With multistart, the zero field and a
/// bubble are tried as well and the lowest energy wins.
inline MinimizeResult minimize(std::shared_ptr<const FemSpace> space, const FunctionalParams& p, const Field& init,
                               const MinimizeOptions& opt = {})
{
    p.validate();
    if (!(p.lambda < critical_lambda) && p.epsilon == 0.0)
        throw DomainError("minimize: lambda = 8 pi is only approached by continuation");
    require_admissible(init, "minimize");
    const DiscreteFunctional F(space, p);
    std::vector<std::pair<std::string, Field>> starts{{"init", init}};
    if (opt.multistart) {
        if (init.values.cwiseAbs().maxCoeff() > 0.0) starts.emplace_back("zero", Field::zero(space->mesh_ptr()));
        starts.emplace_back("bubble", bubble_initializer(*space, p.lambda));
    }
    std::optional<MinimizeResult> best;
    std::vector<std::pair<std::string, double>> branches;
    std::optional<DivergedError> failure;
    for (auto& [name, f] : starts) {
        try {
            auto r = detail::newton_minimize(F, f.values, opt);
            r.start = name;
            branches.emplace_back(name, r.energy);
            if (!best || r.energy < best->energy) best = std::move(r);
        } catch (const DivergedError& e) {
            branches.emplace_back(name, std::numeric_limits<double>::quiet_NaN());
            if (!failure) failure.emplace(e);
        }
    }
    if (!best) throw *failure;
    best->branches = std::move(branches);
    return *best;
}

inline MinimizeResult minimize(std::shared_ptr<const Mesh> m, const FunctionalParams& p, const Field& init,
                               const MinimizeOptions& opt = {})
{
    return minimize(std::make_shared<const FemSpace>(std::move(m)), p, init, opt);
}

// ---------------------------------------------------------------------------
// Continuation in lambda

struct MeshPolicy {
    double h = 0.05;
    /// Grading size at the focus relative to h.
    double grading_factor = 0.15;
    /// Additional bound on the focus size relative to the bubble scale 1/alpha.
    double bubble_resolution = 0.1;
    /// Growth of the local edge length per unit distance from the focus.
    double grading_rate = 0.05;
    /// Regrade toward the argmax once the maximum exceeds this value.
    double refinement_trigger = 3.0;
    int max_regrades = 2;
    /// Optional initial focus point for the first mesh.
    std::optional<Point> initial_focus;
};

struct ContinuationStep {
    MinimizeResult result;
    double mesh_h = 0.0;       // global target edge length
    double focus_size = 0.0;   // target edge length at the grading focus
    std::size_t vertices = 0;
    int regrades = 0;
    bool blowup_flag = false;
};

struct ContinuationTrace {
    DomainSpec domain;
    std::vector<ContinuationStep> steps;
    /// Set when a step failed; the trace stops there.
    bool truncated = false;
    std::string truncation_reason;
};

/// Bubble scale factor sqrt((1 - eps) pi / int e^u) e^{lambda_eps / 2}.
inline double alpha_of(const MinimizeResult& r)
{
    return std::exp(0.5 * (std::log((1.0 - r.epsilon) * pi) - r.log_exp_integral + r.max_value));
}

inline ContinuationTrace continuation(const Domain& d, const std::vector<double>& schedule, double epsilon = 0.0,
                                      const MeshPolicy& policy = {})
{
    if (schedule.empty()) throw InputError("continuation: empty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 0.0 && schedule[i] < critical_lambda))
            throw InputError("continuation: schedule values must lie in (0, 8 pi)");
        if (i > 0 && !(schedule[i] > schedule[i - 1])) throw InputError("continuation: schedule must increase");
    }
    ContinuationTrace trace;
    trace.domain = d.spec();

    auto make_space = [&](std::optional<Grading> g) {
        return std::make_shared<const FemSpace>(std::make_shared<const Mesh>(triangulate(d, policy.h, g)));
    };
    std::optional<Grading> grading;
    if (policy.initial_focus) grading = Grading{*policy.initial_focus, policy.grading_factor * policy.h, policy.grading_rate};
    auto space = make_space(grading);
    Field warm = Field::zero(space->mesh_ptr());
    MinimizeOptions opt;
    opt.multistart = false;

    for (double lam : schedule) {
        FunctionalParams p{lam, epsilon, std::nullopt};
        ContinuationStep step;
        int failures = 0;
        for (;;) {
            try {
                step.result = minimize(space, p, warm, opt);
            } catch (const DivergedError& e) {
                if (++failures > policy.max_regrades || step.regrades >= policy.max_regrades) {
                    trace.truncated = true;
                    trace.truncation_reason = std::string(e.what()) + "; blow-up suspected";
                    if (!trace.steps.empty()) trace.steps.back().blowup_flag = true;
                    return trace;
                }
                // regrade toward the last iterate's maximum and retry
                const Field& last = e.last_iterate();
                const Point focus = refined_argmax(last);
                const double size = grading ? 0.5 * grading->min_size : policy.grading_factor * policy.h;
                grading = Grading{focus, size, policy.grading_rate};
                space = make_space(grading);
                warm = transfer(last, space->mesh_ptr());
                ++step.regrades;
                continue;
            }
            const auto& r = step.result;
            if (r.max_value <= policy.refinement_trigger || step.regrades >= policy.max_regrades) break;
            const double want = std::min(policy.grading_factor * policy.h, policy.bubble_resolution / alpha_of(r));
            const Point peak = refined_argmax(r.field);
            const bool focused = grading && distance(grading->focus, peak) <= 0.25 * grading->min_size + 1e-14;
            if (focused && grading->min_size <= 1.5 * want) break;
            grading = Grading{peak, want, policy.grading_rate};
            space = make_space(grading);
            warm = transfer(r.field, space->mesh_ptr());
            ++step.regrades;
        }
        warm = step.result.field;
        step.mesh_h = policy.h;
        step.focus_size = grading ? grading->min_size : policy.h;
        step.vertices = space->mesh().num_vertices();
        step.blowup_flag = step.result.max_value > 2.0 * std::log(double(step.vertices));
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

/// Columns: lambda, epsilon, E, lambda_eps, x, y, grad_norm, mesh_h, blowup_flag.
inline std::string format_continuation_trace(const ContinuationTrace& t)
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << "lambda epsilon energy lambda_eps x_eps y_eps grad_norm mesh_h focus_size vertices blowup_flag\n";
    for (const auto& s : t.steps) {
        const auto& r = s.result;
        os << r.lambda << ' ' << r.epsilon << ' ' << r.energy << ' ' << r.max_value << ' ' << r.argmax.x << ' '
           << r.argmax.y << ' ' << r.grad_norm << ' ' << s.mesh_h << ' ' << s.focus_size << ' ' << s.vertices << ' '
           << (s.blowup_flag ? 1 : 0) << '\n';
    }
    if (t.truncated) os << "truncated: " << t.truncation_reason << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Energy estimate

struct EnergyEstimate {
    /// -1 - 4 pi gamma(Omega); unconditional upper bound for E_{8pi}.
    double upper = 0.0;
    /// Same value; a lower bound only when the infimum is not attained.
    double lower = 0.0;
    double gamma_sup = 0.0;
    RobinReport robin;
};

inline double energy_from_gamma(double gamma) { return -1.0 - 4.0 * pi * gamma; }

/// E_lambda of the unit disk for lambda < 8 pi: ln(1 + d)/d - 1 with
/// d = lambda / (8 pi - lambda), attained by 2 ln((1 + d) / (1 + d r^2)).
inline double disk_energy(double lambda)
{
    if (!(lambda > 0.0 && lambda < critical_lambda)) throw DomainError("disk_energy: need 0 < lambda < 8 pi");
    const double d = lambda / (critical_lambda - lambda);
    return std::log1p(d) / d - 1.0;
}

inline EnergyEstimate energy_estimate(const Domain& d, std::size_t grid = 24, MfsOptions opt = {})
{
    if (std::abs(d.area() - pi) > 1e-6) throw DomainError("energy_estimate: normalize the domain to area pi first");
    EnergyEstimate e;
    e.robin = robin_sup(d, grid, opt);
    e.gamma_sup = e.robin.gamma_sup;
    e.upper = e.lower = energy_from_gamma(e.gamma_sup);
    return e;
}

/// Upper bound for domains covered by a strip of width w: gamma <= (1/2pi) ln(2w/pi).
inline double strip_energy_bound(double width) { return energy_from_gamma(strip_robin_sup(width)); }

/// Strip width below which the strip bound forces E_{8pi} <= 0.
inline double critical_strip_width() { return pi / (2.0 * std::sqrt(std::exp(1.0))); }

} // namespace mfe
