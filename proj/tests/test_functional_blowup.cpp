#include <mfe/blowup.hpp>
#include <mfe/functional.hpp>
#include <mfe/sampling.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace mfe;

namespace {

const Domain& unit_disk()
{
    static const Domain d(DomainSpec{DomainKind::disk, {1.0}});
    return d;
}

const Domain& thin_rectangle()
{
    static const Domain d(DomainSpec{DomainKind::rectangle, {0.8, pi / 0.8}});
    return d;
}

std::shared_ptr<const Mesh> mesh_of(const Domain& d, double h)
{
    return std::make_shared<const Mesh>(triangulate(d, h));
}

const std::vector<double>& schedule()
{
    static const std::vector<double> s{4.0 * pi, 6.0 * pi, 7.0 * pi, 7.5 * pi, 7.9 * pi};
    return s;
}

ContinuationTrace run(const Domain& d, double h)
{
    MeshPolicy pol;
    pol.h = h;
    return continuation(d, schedule(), 0.0, pol);
}

const ContinuationTrace& disk_trace()
{
    static const ContinuationTrace t = run(unit_disk(), 0.025);
    return t;
}

const ContinuationTrace& rectangle_trace(double h)
{
    static std::map<double, ContinuationTrace> cache;
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, run(thin_rectangle(), h)).first;
    return it->second;
}

double delta_at(std::size_t i) { return oracle::delta_of(schedule()[i]); }

} // namespace

// ---------------------------------------------------------------------------
// evaluation

TEST(Functional, ZeroFieldHasZeroEnergy)
{
    const auto m = mesh_of(unit_disk(), 0.1);
    for (double lambda : {0.5, 4.0 * pi, critical_lambda})
        for (double eps : {0.0, 0.3}) EXPECT_EQ(eval_I(Field::zero(m), FunctionalParams{lambda, eps, std::nullopt}), 0.0);
}

TEST(Functional, LiouvilleInterpolantEnergy)
{
    const auto m = mesh_of(unit_disk(), 0.02);
    const double lambda = 4.0 * pi, delta = oracle::delta_of(lambda);
    EXPECT_NEAR(delta, 1.0, 1e-15);
    const Field u = Field::interpolate_admissible(m, [&](Point x) { return oracle::disk_solution(delta, norm(x)); });
    const double expect = oracle::disk_dirichlet(delta) / (2.0 * lambda) - std::log(oracle::disk_exp_integral(delta) / pi);
    EXPECT_NEAR(expect, oracle::disk_energy(lambda), 1e-10);
    EXPECT_NEAR(eval_I(u, FunctionalParams{lambda, 0.0, pi}), std::log(2.0) - 1.0, 1e-2);
}

TEST(Functional, RejectsInadmissibleFieldsAndParameters)
{
    const auto m = mesh_of(unit_disk(), 0.1);
    Field c = Field::zero(m);
    c.values.array() += 1.0;
    EXPECT_FALSE(c.admissible());
    EXPECT_THROW(eval_I(c, FunctionalParams{}), DomainError);
    EXPECT_THROW(eval_I(Field::zero(m), FunctionalParams{9.0 * pi, 0.0, std::nullopt}), DomainError);
    EXPECT_THROW(eval_I(Field::zero(m), FunctionalParams{pi, 1.0, std::nullopt}), DomainError);
    EXPECT_THROW(minimize(m, FunctionalParams{critical_lambda, 0.0, std::nullopt}, Field::zero(m)), DomainError);
}

TEST(Functional, GradientAtZero)
{
    const auto m = mesh_of(Domain(DomainSpec{DomainKind::ellipse, {1.5, 0.7}}), 0.06);
    const FunctionalParams p{5.0, 0.0, std::nullopt};
    const Field g = grad_I(Field::zero(m), p);
    EXPECT_GT(g.values.cwiseAbs().maxCoeff(), 0.0);
    // the gradient is -(lambda/|Omega|) times the lumped constant source; its
    // Poisson preimage is a negative multiple of the torsion function
    const FemSpace S(m);
    const Vector w = S.solve_interior(S.restrict(g.values));
    EXPECT_LT(w.maxCoeff(), 0.0);
    const Vector one = S.restrict(S.mass() * Vector::Ones(Eigen::Index(m->num_vertices())));
    EXPECT_LE((S.restrict(g.values) + one / m->area()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Functional, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::shared_ptr<const FemSpace>> spaces;
    for (const Domain& d : {unit_disk(), thin_rectangle(), Domain(DomainSpec{DomainKind::ellipse, {2.0, 0.5}})})
        spaces.push_back(std::make_shared<const FemSpace>(mesh_of(d, 0.08)));
    for (int i = 0; i < 20; ++i) {
        const FemSpace& S = *spaces[std::size_t(i) % spaces.size()];
        const Field f = random_smooth_field(S, rng, 0.5 + 3.0 * unit(rng));
        const Field v = random_smooth_field(S, rng, 1.0);
        const FunctionalParams p{2.0 * pi + 5.0 * pi * unit(rng), 0.2 * unit(rng), std::nullopt};
        const double t = 1e-5;
        Field a = f, b = f;
        a.values += t * v.values;
        b.values -= t * v.values;
        const double fd = (eval_I(a, p) - eval_I(b, p)) / (2.0 * t);
        const double an = grad_I(f, p).values.dot(v.values);
        EXPECT_NEAR(fd, an, 1e-6 * std::abs(an)) << i;
    }
}

TEST(Functional, ScaleInvariance)
{
    const auto m = mesh_of(unit_disk(), 0.05);
    auto scaled_mesh = std::make_shared<Mesh>(*m);
    const double s = 2.7;
    for (auto& v : scaled_mesh->vertices) v = s * v;
    scaled_mesh->h *= s;
    const double delta = 2.0;
    auto u = [&](Point x) { return oracle::disk_solution(delta, norm(x)); };
    const Field a = Field::interpolate_admissible(m, u);
    const Field b = Field::interpolate_admissible(scaled_mesh, [&](Point x) { return u(x / s); });
    for (double lambda : {3.0, 6.0 * pi})
        EXPECT_NEAR(eval_I(a, FunctionalParams{lambda, 0.0, pi}), eval_I(b, FunctionalParams{lambda, 0.0, pi * s * s}), 1e-6);
}

// ---------------------------------------------------------------------------
// minimization

TEST(Minimize, DiskEnergies)
{
    const auto m = mesh_of(unit_disk(), 0.04);
    for (double lambda : {4.0 * pi, 6.0 * pi}) {
        const MinimizeResult r = minimize(m, FunctionalParams{lambda, 0.0, std::nullopt}, Field::zero(m));
        EXPECT_NEAR(r.energy, oracle::disk_energy(lambda), 1e-2);
        EXPECT_LE(r.grad_norm, 1e-8 * (1.0 + std::abs(r.energy)));
        EXPECT_LE(r.energy, 0.0);
        EXPECT_GE(r.mt_slack, -1e-3);
        EXPECT_LT(norm(r.argmax), 0.05);
        EXPECT_NEAR(r.max_value, oracle::disk_max(oracle::delta_of(lambda)), 0.05);
        for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
        EXPECT_LE(grad_I(r.field, FunctionalParams{lambda, 0.0, std::nullopt}).values.norm(),
                  1e-8 * (1.0 + std::abs(r.energy)));
    }
    EXPECT_NEAR(oracle::disk_energy(6.0 * pi), std::log(4.0) / 3.0 - 1.0, 1e-14);
    EXPECT_NEAR(oracle::disk_energy(6.0 * pi), -0.53790, 1e-5);
}

TEST(Minimize, SmallLambda)
{
    const auto m = mesh_of(unit_disk(), 0.05);
    const MinimizeResult r = minimize(m, FunctionalParams{0.1, 0.0, std::nullopt}, Field::zero(m));
    // small lambda: u is close to lambda (1 - r^2) / 4 pi, energy close to -lambda / 16 pi
    EXPECT_NEAR(r.energy, oracle::disk_energy(0.1), 1e-5);
    EXPECT_NEAR(r.energy, -0.1 / (16.0 * pi), 1e-5);
    EXPECT_NEAR(r.max_value, oracle::disk_max(oracle::delta_of(0.1)), 1e-4);
    EXPECT_LE(r.field.values.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Minimize, RegularizedProblemAtCriticalLambda)
{
    const auto m = mesh_of(Domain(DomainSpec{DomainKind::ellipse, {std::sqrt(2.0), std::sqrt(0.5)}}), 0.06);
    const MinimizeResult r = minimize(m, FunctionalParams{critical_lambda, 0.3, std::nullopt}, Field::zero(m));
    EXPECT_LE(r.energy, 0.0);
    EXPECT_GE(r.energy, -1.0 - 1e-2);
    EXPECT_LE(r.grad_norm, 1e-8 * (1.0 + std::abs(r.energy)));
    EXPECT_GE(r.mt_slack, -1e-3);
}

TEST(Minimize, DiskMinimizerIsRadial)
{
    const auto m = mesh_of(unit_disk(), 0.04);
    const MinimizeResult r = minimize(m, FunctionalParams{5.0 * pi, 0.0, std::nullopt}, Field::zero(m));
    const double range = r.field.values.maxCoeff() - r.field.values.minCoeff();
    const int bins = 40;
    std::vector<double> s(bins, 0.0), s2(bins, 0.0);
    std::vector<int> n(bins, 0);
    for (std::size_t i = 0; i < m->num_vertices(); ++i) {
        const int b = std::min(bins - 1, int(norm(m->vertices[i]) * bins));
        const double v = r.field.values[Eigen::Index(i)];
        s[b] += v, s2[b] += v * v, ++n[b];
    }
    for (int b = 0; b < bins; ++b) {
        if (n[b] < 2) continue;
        const double mean = s[b] / n[b];
        EXPECT_LE(s2[b] / n[b] - mean * mean, 1e-3 * range) << b;
    }
}

// ---------------------------------------------------------------------------
// continuation

TEST(Continuation, DiskTraceMatchesLiouvilleFamily)
{
    const auto& t = disk_trace();
    ASSERT_EQ(t.steps.size(), schedule().size());
    EXPECT_FALSE(t.truncated);
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& r = t.steps[i].result;
        EXPECT_NEAR(r.energy, oracle::disk_energy(schedule()[i]), 1e-2) << i;
        EXPECT_LE(r.energy, 0.0);
        if (i > 0) EXPECT_GT(r.max_value, t.steps[i - 1].result.max_value);
        EXPECT_LE(t.steps[i].vertices, 100000u);
    }
    EXPECT_NEAR(oracle::disk_energy(7.9 * pi), std::log(80.0) / 79.0 - 1.0, 1e-12);
    EXPECT_NEAR(t.steps.back().result.energy, -0.94454, 1e-2);
    EXPECT_NE(format_continuation_trace(t).find("blowup_flag"), std::string::npos);
}

TEST(Continuation, ThinRectangleStaysBounded)
{
    const auto& coarse = rectangle_trace(0.05);
    const auto& fine = rectangle_trace(0.035);
    ASSERT_EQ(coarse.steps.size(), schedule().size());
    ASSERT_EQ(fine.steps.size(), schedule().size());
    for (std::size_t i = 0; i < coarse.steps.size(); ++i) {
        EXPECT_LE(coarse.steps[i].result.max_value, 12.0);
        EXPECT_LE(coarse.steps[i].result.energy, 0.0);
        EXPECT_NEAR(coarse.steps[i].result.energy, fine.steps[i].result.energy, 1e-2);
    }
    // increments shrink toward 8 pi
    const auto& s = fine.steps;
    EXPECT_LT(std::abs(s[4].result.energy - s[3].result.energy), std::abs(s[2].result.energy - s[1].result.energy));
}

TEST(Continuation, RejectsBadSchedules)
{
    EXPECT_THROW(continuation(unit_disk(), {}), InputError);
    EXPECT_THROW(continuation(unit_disk(), {4.0 * pi, 3.0 * pi}), InputError);
    EXPECT_THROW(continuation(unit_disk(), {4.0 * pi, 8.0 * pi}), InputError);
}

TEST(EnergyEstimate, ClosedFormEndpoints)
{
    EXPECT_NEAR(energy_estimate(unit_disk()).upper, -1.0, 4.0 * pi * 1e-5);
    EXPECT_THROW(energy_estimate(Domain(DomainSpec{DomainKind::disk, {2.0}})), DomainError);
    for (double d : {0.5, 0.8, 1.2}) EXPECT_NEAR(strip_energy_bound(d), -1.0 - 2.0 * std::log(2.0 * d / pi), 1e-12);
    EXPECT_NEAR(critical_strip_width(), 0.9527, 1e-4);
    EXPECT_NEAR(strip_energy_bound(critical_strip_width()), 0.0, 1e-12);
    const EnergyEstimate e = energy_estimate(thin_rectangle());
    EXPECT_GE(e.upper, strip_energy_bound(0.8));
    EXPECT_EQ(e.upper, e.lower);
    EXPECT_NEAR(e.upper, -1.0 - 4.0 * pi * oracle::rectangle_robin(pi / 0.8, 0.8, 0.5 * pi / 0.8, 0.4), 1e-5);
}

// ---------------------------------------------------------------------------
// blow-up diagnostics

TEST(Blowup, AlphaAndMassIdentities)
{
    for (const auto& s : disk_trace().steps) {
        const auto& r = s.result;
        const double alpha = std::sqrt((1.0 - r.epsilon) * pi / exp_integral(r.field)) * std::exp(0.5 * r.max_value);
        EXPECT_NEAR(alpha_of(r), alpha, 1e-10 * alpha);
        EXPECT_GT(tau_of(r), 0.0);
        EXPECT_NEAR(rescaled_mass(r), pi * (1.0 - r.epsilon), 0.02 * pi);
        // mass of the rescaled field over the rescaled domain, from the field itself
        EXPECT_NEAR(alpha * alpha * std::exp(-r.max_value) * exp_integral(r.field), pi, 0.02 * pi);
    }
}

TEST(Blowup, RescaledProfiles)
{
    const auto& t = disk_trace();
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& r = t.steps[i].result;
        const RescaledProfile p = rescale_profile(unit_disk(), r, 1.0);
        for (double v : p.values.front()) EXPECT_NEAR(v, 0.0, 1e-3);
        for (std::size_t k = 1; k < p.radii.size(); ++k) EXPECT_LT(p.mean(k), p.mean(k - 1));
        const double d = bubble_distance(p, 1.0);
        EXPECT_NEAR(d, oracle::bubble_distance(delta_at(i), 1.0), 1e-2) << i;
        EXPECT_LT(d, prev);
        prev = d;
    }
    // lambda = 6 pi: the window reaches the boundary at R = alpha = 2
    EXPECT_NEAR(oracle::bubble_distance(3.0, 2.0), 2.0 * std::log(5.0 / 4.0), 1e-12);
    EXPECT_NEAR(max_window(unit_disk(), t.steps[1].result), 2.0, 2e-2);
    const RescaledProfile p = rescale_profile(unit_disk(), t.steps[1].result, 1.9);
    EXPECT_NEAR(bubble_distance(p, 1.9), oracle::bubble_distance(3.0, 1.9), 1e-2);
    // lambda = 7.9 pi, R = 4
    const RescaledProfile q = rescale_profile(unit_disk(), t.steps.back().result, 4.0);
    EXPECT_LE(oracle::bubble_distance(79.0, 4.0), 0.034);
    EXPECT_LE(bubble_distance(q, 4.0), 0.05);
}

TEST(Blowup, WindowLeavingDomain)
{
    const auto& r = disk_trace().steps.front().result;
    try {
        rescale_profile(unit_disk(), r, 10.0);
        ADD_FAILURE() << "window accepted";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("largest admissible R"), std::string::npos);
    }
}

TEST(Blowup, DEpsilon)
{
    const double R = 4.0;
    const double ref = 2.0 * std::log(R * R / (1.0 + R * R));
    EXPECT_NEAR(oracle::d_epsilon(3.0, R), ref, 1e-12);
    EXPECT_NEAR(oracle::d_epsilon(79.0, R), ref, 1e-12);
    for (std::size_t i : {std::size_t(1), std::size_t(4)}) {
        const auto& r = disk_trace().steps[i].result;
        EXPECT_NEAR(d_epsilon(r, R, 0.0), ref, 1e-2) << i;
        const double limit = -r.max_value + 2.0 * (r.log_exp_integral - std::log(pi));
        EXPECT_NEAR(d_epsilon(r, 1e3, 0.0), limit, 1e-5);
    }
}

TEST(Blowup, GreenLowerBoundOnDisk)
{
    const auto& r = disk_trace().steps.back().result;
    const auto g = make_green(unit_disk(), r.argmax);
    const auto samples = green_lower_bound_samples(r, g, 4.0, 0.0, 0.9);
    EXPECT_GE(samples.size(), 45u);
    for (const auto& s : samples) EXPECT_GE(s.u, s.bound - 0.05);
}

TEST(Blowup, FarField)
{
    const auto& t = disk_trace();
    std::vector<double> errs;
    double cap = -1e300;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const auto& r = t.steps[i].result;
        const FarFieldResult f = far_field_check(unit_disk(), r, make_green(unit_disk(), r.argmax));
        EXPECT_NEAR(f.sup_error, oracle::far_field(delta_at(i), 0.4, 0.8), 1e-2) << i;
        errs.push_back(f.sup_error);
        cap = std::max(cap, f.sup_value);
    }
    EXPECT_LT(errs[4], errs[2]);
    // u stays bounded on the annulus: the family is bounded there by 8 pi G(0.4) = -4 ln 0.4
    EXPECT_LE(cap, -4.0 * std::log(0.4) + 0.05);
    MinimizeResult moved = t.steps.back().result;
    moved.argmax = Point{0.5, 0.0};
    EXPECT_THROW(far_field_check(unit_disk(), moved, make_green(unit_disk(), moved.argmax)), DomainError);
}

TEST(Blowup, Classification)
{
    const BlowupTrace d = blowup_trace(unit_disk(), disk_trace());
    EXPECT_EQ(d.classification, BlowupClass::blowup);
    ASSERT_EQ(d.records.size(), 5u);
    for (std::size_t i = 2; i < d.records.size(); ++i) EXPECT_GT(d.records[i].alpha, d.records[i - 1].alpha);
    for (const auto& rec : d.records) EXPECT_GE(1.0 - norm(rec.x_eps), 0.2 * d.inradius);
    const Point top = disk_trace().steps.back().result.argmax;
    EXPECT_NEAR(d.A, 8.0 * pi * oracle::disk_robin({top.x, top.y}), 1e-12);
    EXPECT_NEAR(d.A, 0.0, 1e-6);

    const BlowupTrace rect = blowup_trace(thin_rectangle(), rectangle_trace(0.05));
    EXPECT_EQ(rect.classification, BlowupClass::bounded);

    BlowupTrace short_trace = d;
    short_trace.records.resize(3);
    EXPECT_EQ(classify(short_trace), BlowupClass::undecided);
    const std::string text = format_blowup_trace(d);
    EXPECT_NE(text.find("blowup"), std::string::npos);
}

TEST(Blowup, SquareConcentratesInside)
{
    const double s = std::sqrt(pi);
    const Domain sq(DomainSpec{DomainKind::rectangle, {s, s}});
    const BlowupTrace t = blowup_trace(sq, run(sq, 0.05));
    EXPECT_EQ(t.classification, BlowupClass::blowup);
    for (const auto& rec : t.records) EXPECT_GE(sq.distance_to_boundary(rec.x_eps), 0.2 * t.inradius);
    for (std::size_t i = 2; i < t.records.size(); ++i) EXPECT_GT(t.records[i].alpha, t.records[i - 1].alpha);
    // two-sided consistency with the Robin estimate near 8 pi
    const double estimate = energy_from_gamma(robin_sup(sq).gamma_sup);
    EXPECT_GE(t.records.back().energy, estimate - 5e-2);
}
