#pragma once

// Concentration diagnostics along continuation traces: rescaled profiles
// around the maximum, distance to the standard bubble, the D quantity and
// convergence to 8 pi G away from the concentration point.

#include "error.hpp"
#include "fem.hpp"
#include "functional.hpp"
#include "geometry.hpp"
#include "greens.hpp"
#include "testfn.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

inline double tau_of(const MinimizeResult& r) { return std::exp(0.5 * r.max_value); }

/// phi(x) = u(x / alpha + x_max) - 2 ln tau sampled along rays.
struct RescaledProfile {
    double alpha = 0.0;
    double tau = 0.0;
    double R = 0.0;
    std::vector<double> radii;
    /// values[i][k]: radius i, ray k.
    std::vector<std::vector<double>> values;

    double mean(std::size_t i) const
    {
        double s = 0.0;
        for (double v : values[i]) s += v;
        return s / double(values[i].size());
    }
};

/// Largest window radius R with B(x_max, R / alpha) inside the domain.
inline double max_window(const Domain& d, const MinimizeResult& r)
{
    return alpha_of(r) * d.distance_to_boundary(refined_argmax(r.field));
}

inline RescaledProfile rescale_profile(const Domain& d, const MinimizeResult& r, double R, std::size_t samples = 81,
                                       std::size_t rays = 16)
{
    if (!(R > 0.0)) throw DomainError("rescale_profile: R must be positive");
    const double limit = max_window(d, r);
    if (R > limit)
        throw DomainError("rescale_profile: window leaves the domain; largest admissible R is " + std::to_string(limit));
    RescaledProfile p;
    p.alpha = alpha_of(r);
    p.tau = tau_of(r);
    p.R = R;
    const FieldSampler s(r.field);
    const double shift = 2.0 * std::log(p.tau);
    const Point centre = refined_argmax(r.field);
    for (std::size_t i = 0; i < samples; ++i) {
        const double rad = R * double(i) / double(samples - 1);
        p.radii.push_back(rad);
        std::vector<double> row;
        for (std::size_t k = 0; k < rays; ++k) {
            const double th = two_pi * double(k) / double(rays);
            const Point x = centre + (rad / p.alpha) * Point{std::cos(th), std::sin(th)};
            double v = s(x);
            if (std::isnan(v)) v = 0.0;   // on the polygonal boundary approximation
            row.push_back(v - shift);
        }
        p.values.push_back(std::move(row));
    }
    return p;
}

/// sup over the sampled window of |phi - standard bubble|.
inline double bubble_distance(const RescaledProfile& p, double R = std::numeric_limits<double>::infinity())
{
    double e = 0.0;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        if (p.radii[i] > R * (1.0 + 1e-12)) break;
        const double ref = standard_bubble(Point{p.radii[i], 0.0});
        for (double v : p.values[i]) e = std::max(e, std::abs(v - ref));
    }
    return e;
}

/// -lambda_eps + 2 ln(int e^u / pi) + 2 ln(R^2 / (1 + R^2)) - A.
inline double d_epsilon(const MinimizeResult& r, double R, double A)
{
    if (!(R > 0.0)) throw DomainError("d_epsilon: R must be positive");
    return -r.max_value + 2.0 * (r.log_exp_integral - std::log(pi)) + 2.0 * std::log(R * R / (1.0 + R * R)) - A;
}

/// Mass of the rescaled profile over the rescaled domain:
/// alpha^2 int e^u / tau^2, which equals (1 - eps) pi by the choice of alpha.
inline double rescaled_mass(const MinimizeResult& r)
{
    return std::exp(2.0 * std::log(alpha_of(r)) + r.log_exp_integral - r.max_value);
}

struct FarFieldResult {
    double sup_error = 0.0;   // sup |u - 8 pi G| on the annulus
    double sup_value = 0.0;   // sup u on the annulus
    double inner = 0.0;
    double outer = 0.0;
};

/// Compares u with 8 pi G(., x_max) on the annulus [0.4, 0.8] * inradius
/// around the maximum. `g` must have its pole at the maximum.
inline FarFieldResult far_field_check(const Domain& d, const MinimizeResult& r, const GreenEvaluator& g,
                                      std::size_t radial = 17, std::size_t angular = 64)
{
    if (distance(g.pole(), r.argmax) > 1e-9 * (1.0 + norm(r.argmax)))
        throw DomainError("far_field_check: Green's function pole is not the concentration point");
    FarFieldResult out;
    out.inner = 0.4 * d.inradius();
    out.outer = 0.8 * d.inradius();
    if (out.outer > d.distance_to_boundary(r.argmax))
        throw DomainError("far_field_check: annulus leaves the domain (outer radius " + std::to_string(out.outer) +
                          ", boundary distance " + std::to_string(d.distance_to_boundary(r.argmax)) + ")");
    const FieldSampler s(r.field);
    out.sup_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < radial; ++i) {
        const double rad = out.inner + (out.outer - out.inner) * double(i) / double(radial - 1);
        for (std::size_t k = 0; k < angular; ++k) {
            const double th = two_pi * double(k) / double(angular);
            const Point x = r.argmax + rad * Point{std::cos(th), std::sin(th)};
            const double u = s(x);
            if (std::isnan(u)) continue;
            out.sup_error = std::max(out.sup_error, std::abs(u - 8.0 * pi * g(x)));
            out.sup_value = std::max(out.sup_value, u);
        }
    }
    return out;
}

struct LowerBoundSample {
    Point x;
    double u = 0.0;
    double bound = 0.0;   // 8 pi G(x) + D
};

/// Samples u against 8 pi G + D at `count` points with |x - x_max| in
/// [R / alpha, outer], spread over a golden-angle spiral.
inline std::vector<LowerBoundSample> green_lower_bound_samples(const MinimizeResult& r, const GreenEvaluator& g,
                                                               double R, double A, double outer,
                                                               std::size_t count = 50)
{
    const double inner = R / alpha_of(r);
    if (!(outer > inner)) throw DomainError("green_lower_bound_samples: empty radial range");
    const double D = d_epsilon(r, R, A);
    const FieldSampler s(r.field);
    std::vector<LowerBoundSample> out;
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count > 1 ? double(i) / double(count - 1) : 0.0;
        const double rad = inner + t * (outer - inner);
        const Point x = r.argmax + rad * Point{std::cos(golden * double(i)), std::sin(golden * double(i))};
        const double u = s(x);
        if (std::isnan(u)) continue;
        out.push_back({x, u, 8.0 * pi * g(x) + D});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Traces

enum class BlowupClass { bounded, blowup, undecided };

inline const char* to_string(BlowupClass c)
{
    switch (c) {
    case BlowupClass::bounded: return "bounded";
    case BlowupClass::blowup: return "blowup";
    default: return "undecided";
    }
}

struct BlowupRecord {
    double lambda = 0.0;
    double epsilon = 0.0;
    double lambda_eps = 0.0;
    Point x_eps;
    double tau = 0.0;
    double alpha = 0.0;
    double log_exp_integral = 0.0;
    double energy = 0.0;
    double D = 0.0;
    double profile_error = std::numeric_limits<double>::quiet_NaN();
    double far_field_error = std::numeric_limits<double>::quiet_NaN();
    double far_field_sup = std::numeric_limits<double>::quiet_NaN();
    double rescaled_mass = 0.0;
    double mesh_h = 0.0;
    std::size_t vertices = 0;
    bool blowup_flag = false;
};

struct BlowupTrace {
    DomainSpec domain;
    double inradius = 0.0;
    double A = 0.0;        // 8 pi gamma at the final concentration point
    double window = 4.0;   // R used for profile_error and D
    std::vector<BlowupRecord> records;
    BlowupClass classification = BlowupClass::undecided;
    bool truncated = false;
    std::string truncation_reason;
};

/// Threshold on the maximum above which a concentrating solution is no longer
/// representable at mesh size h: 2 ln(inradius / h).
inline double resolution_threshold(double inradius, double h) { return 2.0 * std::log(inradius / h); }

/// blowup: the last maximum exceeds the resolution threshold and alpha grew
/// over each of the last 3 steps; bounded: the maximum varied by at most 0.5
/// over the last 4 steps and lambda reached 7.9 pi; otherwise undecided.
inline BlowupClass classify(const BlowupTrace& t)
{
    const auto& r = t.records;
    const std::size_t n = r.size();
    if (n < 4) return BlowupClass::undecided;
    bool growing = true;
    for (std::size_t i = n - 3; i < n; ++i) growing = growing && r[i].alpha > r[i - 1].alpha;
    const double threshold = resolution_threshold(t.inradius, r.back().mesh_h);
    if (r.back().lambda_eps > threshold && growing) return BlowupClass::blowup;
    double lo = r[n - 4].lambda_eps, hi = lo;
    for (std::size_t i = n - 4; i < n; ++i) lo = std::min(lo, r[i].lambda_eps), hi = std::max(hi, r[i].lambda_eps);
    if (hi - lo <= 0.5 && r.back().lambda >= 7.9 * pi * (1.0 - 1e-12)) return BlowupClass::bounded;
    return BlowupClass::undecided;
}

/// Diagnostics for every step of a continuation trace. `A` defaults to
/// 8 pi gamma at the final maximum.
inline BlowupTrace blowup_trace(const Domain& d, const ContinuationTrace& c, std::optional<double> A = std::nullopt,
                                double window = 4.0)
{
    BlowupTrace t;
    t.domain = c.domain;
    t.inradius = d.inradius();
    t.window = window;
    t.truncated = c.truncated;
    t.truncation_reason = c.truncation_reason;
    if (c.steps.empty()) return t;
    t.A = A ? *A : 8.0 * pi * robin_value(d, c.steps.back().result.argmax);
    for (const auto& step : c.steps) {
        const auto& r = step.result;
        BlowupRecord rec;
        rec.lambda = r.lambda;
        rec.epsilon = r.epsilon;
        rec.lambda_eps = r.max_value;
        rec.x_eps = r.argmax;
        rec.tau = tau_of(r);
        rec.alpha = alpha_of(r);
        rec.log_exp_integral = r.log_exp_integral;
        rec.energy = r.energy;
        rec.D = d_epsilon(r, window, t.A);
        rec.rescaled_mass = rescaled_mass(r);
        rec.mesh_h = step.mesh_h;
        rec.vertices = step.vertices;
        rec.blowup_flag = step.blowup_flag;
        if (window <= max_window(d, r)) rec.profile_error = bubble_distance(rescale_profile(d, r, window), window);
        if (0.8 * t.inradius <= d.distance_to_boundary(r.argmax)) {
            const auto ff = far_field_check(d, r, make_green(d, r.argmax));
            rec.far_field_error = ff.sup_error;
            rec.far_field_sup = ff.sup_value;
        }
        t.records.push_back(rec);
    }
    t.classification = classify(t);
    return t;
}

inline std::string format_blowup_trace(const BlowupTrace& t)
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << format_domain_spec(t.domain);
    os << "A = " << t.A << "\nwindow = " << t.window << "\nclass = " << to_string(t.classification) << "\n";
    if (t.truncated) os << "truncated = " << t.truncation_reason << "\n";
    os << "step lambda lambda_eps alpha D bubble_distance far_field_error energy x y vertices flag\n";
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        os << i << ' ' << r.lambda << ' ' << r.lambda_eps << ' ' << r.alpha << ' ' << r.D << ' ' << r.profile_error
           << ' ' << r.far_field_error << ' ' << r.energy << ' ' << r.x_eps.x << ' ' << r.x_eps.y << ' ' << r.vertices
           << ' ' << (r.blowup_flag ? 1 : 0) << '\n';
    }
    return os.str();
}

} // namespace mfe
