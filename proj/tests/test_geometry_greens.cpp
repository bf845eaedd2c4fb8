#include <mfe/geometry.hpp>
#include <mfe/greens.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace mfe;

namespace {

Domain disk(double r) { return Domain(DomainSpec{DomainKind::disk, {r}}); }
Domain ellipse(double a, double b) { return Domain(DomainSpec{DomainKind::ellipse, {a, b}}); }
Domain rectangle(double a, double b) { return Domain(DomainSpec{DomainKind::rectangle, {a, b}}); }

Domain fourier_disk()
{
    return normalize_area(Domain(DomainSpec{DomainKind::fourier, {1.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.05}}));
}

Domain pentagon()
{
    return Domain(DomainSpec{DomainKind::polygon, {0.0, 0.0, 2.0, 0.0, 2.5, 1.0, 1.0, 2.0, -0.5, 1.0}});
}

oracle::P op(Point p) { return {p.x, p.y}; }

} // namespace

// ---------------------------------------------------------------------------
// geometry

TEST(Geometry, AreasOfAnalyticKinds)
{
    EXPECT_NEAR(disk(1.0).area(), pi, 1e-12);
    EXPECT_NEAR(ellipse(2.0, 0.5).area(), pi, 1e-12);
    EXPECT_NEAR(rectangle(std::sqrt(pi), std::sqrt(pi)).area(), pi, 1e-12);
    EXPECT_NEAR(rectangle(0.8, pi / 0.8).area(), pi, 1e-12);
    EXPECT_NEAR(pentagon().area(), 4.0, 1e-12);   // shoelace by hand
}

TEST(Geometry, RejectsDegenerateInput)
{
    EXPECT_THROW(Domain(DomainSpec{DomainKind::polygon, {0, 0, 1, 0, 1, 0, 0, 1}}), DomainError);
    EXPECT_THROW(Domain(DomainSpec{DomainKind::polygon, {0, 0, 1, 1, 1, 0, 0, 1}}), DomainError);   // bow tie
    EXPECT_THROW(disk(-1.0), DomainError);
    EXPECT_THROW(Domain(DomainSpec{DomainKind::ellipse, {1.0}}), DomainError);
    EXPECT_THROW(Domain(DomainSpec{DomainKind::fourier, {0.5, 0.6}}), DomainError);
}

TEST(Geometry, NormalizeArea)
{
    const Domain d = normalize_area(disk(2.0));
    EXPECT_NEAR(d.spec().params[0], 1.0, 1e-12);
    const Domain r = normalize_area(rectangle(1.0, 1.0));
    EXPECT_NEAR(r.spec().params[0], std::sqrt(pi), 1e-12);
    EXPECT_NEAR(r.spec().params[1], std::sqrt(pi), 1e-12);
    for (const Domain& x : {ellipse(3.0, 0.7), rectangle(0.3, 2.0), pentagon()}) {
        const Domain once = normalize_area(x);
        const Domain twice = normalize_area(once);
        EXPECT_NEAR(once.area(), pi, 1e-10);
        for (std::size_t i = 0; i < once.spec().params.size(); ++i)
            EXPECT_NEAR(twice.spec().params[i], once.spec().params[i], 1e-12);
    }
    EXPECT_NEAR(fourier_disk().area(), pi, 1e-6);
}

TEST(Geometry, MinStripWidth)
{
    EXPECT_NEAR(min_strip_width(disk(1.0)).width, 2.0, 1e-6);
    EXPECT_NEAR(min_strip_width(rectangle(0.8, pi / 0.8)).width, 0.8, 1e-10);
    EXPECT_NEAR(min_strip_width(ellipse(2.0, 0.5)).width, 1.0, 1e-6);
}

TEST(Geometry, StripWidthInvariantUnderRigidMotions)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const Domain& d : {ellipse(2.0, 0.5), rectangle(0.8, pi / 0.8), pentagon(), fourier_disk()}) {
        const double w = min_strip_width(d).width;
        for (int k = 0; k < 4; ++k) {
            const Domain m = d.transformed(u(rng), Point{u(rng), u(rng)});
            EXPECT_NEAR(min_strip_width(m).width, w, 1e-8);
        }
        const double s = std::sqrt(pi / d.area());
        EXPECT_NEAR(min_strip_width(normalize_area(d)).width, s * w, 1e-8);
    }
}

TEST(Geometry, MonteCarloArea)
{
    std::mt19937_64 rng(11);
    for (const Domain& d : {ellipse(2.0, 0.5), fourier_disk(), pentagon()}) {
        Point lo{1e9, 1e9}, hi{-1e9, -1e9};
        for (Point p : d.sample_boundary(4096)) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y);
        const std::size_t n = 1000000;
        std::size_t in = 0;
        for (std::size_t i = 0; i < n; ++i) in += d.contains(Point{ux(rng), uy(rng)});
        const double box = (hi.x - lo.x) * (hi.y - lo.y);
        const double p = double(in) / double(n);
        const double se = box * std::sqrt(p * (1.0 - p) / double(n));
        EXPECT_NEAR(box * p, d.area(), 3.0 * se) << to_string(d.kind());
    }
}

TEST(Geometry, SpecTextRoundTrip)
{
    DomainSpec s{DomainKind::ellipse, {2.0, 0.5}, Point{0.25, -1.0}, 0.3};
    const DomainSpec t = parse_domain_spec(format_domain_spec(s));
    EXPECT_EQ(t.kind, s.kind);
    EXPECT_EQ(t.params, s.params);
    EXPECT_EQ(t.center.x, s.center.x);
    EXPECT_EQ(t.rotation, s.rotation);
    const DomainSpec c = parse_domain_spec("# comment\nkind: disk\nparams = 1.5\n");
    EXPECT_EQ(c.kind, DomainKind::disk);
    EXPECT_THROW(parse_domain_spec("kind = disk\n"), InputError);
    EXPECT_THROW(parse_domain_spec("kind = blob\nparams = 1\n"), InputError);
    EXPECT_THROW(parse_domain_spec("kind = disk\nparams = 1\ncolour = red\n"), InputError);
}

TEST(Geometry, SampleSpecsHaveAreaPi)
{
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(MFE_DATA_DIR)) {
        if (e.path().extension() != ".txt") continue;
        const Domain d(load_domain_spec(e.path().string()));
        EXPECT_NEAR(d.area(), pi, 1e-6) << e.path();
        ++n;
    }
    EXPECT_GE(n, 6u);
}

// ---------------------------------------------------------------------------
// closed forms

TEST(Greens, DiskGreenValues)
{
    EXPECT_NEAR(disk_green(Point{0.5, 0.0}, Point{0.0, 0.0}), std::log(2.0) / (2.0 * pi), 1e-14);
    EXPECT_NEAR(disk_green(Point{0.5, 0.0}, Point{0.0, 0.0}), 0.110318, 1e-6);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(0.0, 0.95), th(0.0, two_pi);
    for (int i = 0; i < 100; ++i) {
        const double a = r(rng), b = th(rng), c = r(rng), e = th(rng);
        const Point x{a * std::cos(b), a * std::sin(b)}, y{c * std::cos(e), c * std::sin(e)};
        EXPECT_NEAR(disk_green(x, y), disk_green(y, x), 1e-12);
        EXPECT_NEAR(disk_green(x, y), oracle::disk_green(op(x), op(y)), 1e-11);
    }
    EXPECT_THROW(disk_green(Point{0.3, 0.0}, Point{0.3, 0.0}), SingularityError);
    EXPECT_THROW(disk_green(Point{1.2, 0.0}, Point{0.3, 0.0}), DomainError);
}

TEST(Greens, DiskGreenVanishesTowardBoundary)
{
    const Point y{0.2, 0.3};
    double prev = disk_green(Point{0.9, 0.0}, y);
    for (double r = 0.91; r < 0.99995; r += 0.005) {
        const double v = disk_green(Point{r, 0.0}, y);
        EXPECT_LT(v, prev);
        EXPECT_GT(v, 0.0);
        prev = v;
    }
    EXPECT_LT(disk_green(Point{1.0 - 1e-9, 0.0}, y), 1e-8);
}

TEST(Greens, RobinDisk)
{
    EXPECT_EQ(robin_disk(Point{0.0, 0.0}), 0.0);
    EXPECT_NEAR(robin_disk(Point{0.6, 0.0}), std::log(0.64) / two_pi, 1e-6);
    EXPECT_NEAR(robin_disk(Point{0.6, 0.0}), -0.0710288, 1e-6);
    for (double r : {0.1, 0.35, 0.6, 0.85})
        EXPECT_NEAR(robin_disk(Point{0.0, r}), oracle::disk_robin({0.0, r}), 1e-14);
    for (double r = 0.05; r < 1.0; r += 0.05) EXPECT_LT(robin_disk(Point{r, 0.0}), 0.0);
    EXPECT_THROW(robin_disk(Point{1.0, 0.0}), DomainError);
}

TEST(Greens, StripGreen)
{
    const double d = 1.0, a = 0.5;
    for (double x : {-3.0, -0.4, 0.0, 0.7, 2.5}) EXPECT_NEAR(strip_green(Point{x, 0.0}, 0.3, d), 0.0, 1e-12);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), us(0.05, 0.45);
    for (int i = 0; i < 20; ++i) {
        const double x = ux(rng), s = us(rng);
        EXPECT_NEAR(strip_green(Point{x, a + s}, a, d), strip_green(Point{x, a - s}, a, d), 1e-12);
    }
    const oracle::P z{0.3, 0.5};
    EXPECT_NEAR(strip_green(Point{0.3, 0.5}, a, d), oracle::strip_green_images(z, a, d), 1e-8);
    for (double w : {0.8, pi / 2.0})
        for (double x : {-1.3, 0.05, 0.9})
            EXPECT_NEAR(strip_green(Point{x, 0.3 * w}, 0.6 * w, w), oracle::strip_green_closed({x, 0.3 * w}, 0.6 * w, w),
                        1e-12);
    EXPECT_THROW(strip_green(Point{0.0, a}, a, d), SingularityError);
    EXPECT_THROW(strip_green(Point{0.0, 1.5}, a, d), DomainError);
}

TEST(Greens, StripRobin)
{
    EXPECT_NEAR(strip_robin(0.5, 1.0), std::log(2.0 / pi) / (2.0 * pi), 1e-15);
    EXPECT_NEAR(strip_robin(0.5, 1.0), -0.0718716, 1e-7);
    for (double d : {0.5, 0.8, 1.0, pi / 2.0, 3.0}) {
        EXPECT_NEAR(strip_robin_sup(d), oracle::strip_sup(d), 1e-15);
        EXPECT_NEAR(strip_robin(0.5 * d, d), oracle::strip_sup(d), 1e-14);
        for (double t = 0.05; t < 1.0; t += 0.05) EXPECT_LE(strip_robin(t * d, d), strip_robin_sup(d) + 1e-15);
        const auto m = strip_robin_max(d);
        EXPECT_NEAR(m.value, oracle::strip_sup(d), 1e-10);
        EXPECT_NEAR(m.alpha, 0.5 * d, 1e-6 * d);
    }
    EXPECT_NEAR(strip_robin(pi / 4.0, pi / 2.0), 0.0, 1e-15);
    EXPECT_THROW(strip_robin(1.0, 1.0), DomainError);
    EXPECT_THROW(strip_robin(-0.1, 1.0), DomainError);
}

TEST(Greens, StripRobinIsLimitOfRegularPart)
{
    // G(z, alpha i) + (1/2pi) ln |z - alpha i| -> gamma as z -> alpha i
    const double d = 1.3, a = 0.4;
    for (double r : {1e-3, 1e-4}) {
        const Point z{r, a};
        const double reg = strip_green(z, a, d) + std::log(r) / two_pi;
        EXPECT_NEAR(reg, strip_robin(a, d), 5.0 * r);
    }
}

// ---------------------------------------------------------------------------
// fundamental solutions

TEST(Greens, RobinNumericOnDisk)
{
    EXPECT_NEAR(robin_numeric(disk(1.0), Point{0.0, 0.0}), 0.0, 1e-6);
    EXPECT_NEAR(robin_numeric(disk(1.0), Point{0.6, 0.0}), oracle::disk_robin({0.6, 0.0}), 1e-6);
    EXPECT_THROW(robin_numeric(disk(1.0), Point{0.0, 0.0}, 32), DomainError);
}

TEST(Greens, RobinNumericOnRectangle)
{
    const double L = pi / 0.8, w = 0.8;
    const Domain r = rectangle(w, L);   // local x side w, y side L
    const double g = robin_numeric(r, Point{0.0, 0.0});
    EXPECT_LE(g, std::log(1.6 / pi) / two_pi + 1e-4);
    // image oracle: strip of width w along y, walls reflected at y = +-L/2
    EXPECT_NEAR(g, oracle::rectangle_robin(L, w, 0.5 * L, 0.5 * w), 1e-6);
    for (Point x : {Point{0.2, 0.5}, Point{-0.1, -1.4}}) {
        const double ref = oracle::rectangle_robin(L, w, x.y + 0.5 * L, x.x + 0.5 * w);
        EXPECT_NEAR(robin_numeric(r, x), ref, 1e-6);
    }
}

TEST(Greens, DirichletResidualAndConvergence)
{
    for (const Domain& d : {ellipse(std::sqrt(2.0), std::sqrt(0.5)), fourier_disk(), rectangle(1.2, 2.0)}) {
        const MfsSolver s(d);
        const Point pole = d.centroid() + Point{0.1, -0.05};
        const auto g = s.green(pole);
        EXPECT_LE(s.dirichlet_residual(g), 1e-6) << to_string(d.kind());
        if (!d.has_corners()) {
            MfsOptions twice;
            twice.charges = 512;
            EXPECT_NEAR(MfsSolver(d, twice).robin(pole), s.robin(pole), 1e-6);
        }
    }
}

TEST(Greens, RegularPartHasFiniteLimitAtPole)
{
    const Domain d = ellipse(1.5, 0.8);
    const auto g = make_green(d, Point{0.2, 0.1});
    std::vector<double> v;
    for (int k = 5; k <= 12; ++k) {
        const double r = std::ldexp(1.0, -k);
        const Point x = g.pole() + Point{r, 0.0};
        v.push_back(g(x) + std::log(r) / two_pi);
    }
    for (std::size_t i = 2; i < v.size(); ++i) EXPECT_LE(std::abs(v[i] - v[i - 1]), std::abs(v[i - 1] - v[i - 2]) + 1e-12);
    EXPECT_NEAR(v.back(), robin_numeric(d, g.pole()), 1e-5);
}

TEST(Greens, ScalingLaw)
{
    for (const Domain& d : {disk(1.0), rectangle(0.8, pi / 0.8)}) {
        const Point x{0.1, 0.2};
        const double base = robin_numeric(d, x);
        for (double s : {0.5, 3.0}) {
            const Domain ds = d.scaled(s);
            EXPECT_NEAR(robin_numeric(ds, s * x), base + std::log(s) / two_pi, 1e-8);
        }
    }
}

TEST(Greens, DomainMonotonicity)
{
    // ellipse inside the unit disk, square inscribed in it
    const Domain outer = disk(1.0);
    const MfsSolver in1(ellipse(0.9, 0.6)), in2(rectangle(std::sqrt(2.0) - 1e-9, std::sqrt(2.0) - 1e-9));
    for (Point x : {Point{0.0, 0.0}, Point{0.3, 0.2}, Point{-0.5, 0.1}, Point{0.1, -0.4}}) {
        EXPECT_LE(in1.robin(x), robin_disk(x) + 1e-6);
        EXPECT_LE(in2.robin(x), robin_disk(x) + 1e-6);
    }
    EXPECT_LE(in2.robin(Point{0.0, 0.0}), robin_value(outer, Point{0.0, 0.0}));
}

TEST(Greens, RobinSupDiskAndSquare)
{
    const RobinReport rd = robin_sup(disk(1.0));
    EXPECT_NEAR(rd.gamma_sup, 0.0, 1e-5);
    EXPECT_LT(norm(rd.argmax), 1e-2);
    EXPECT_FALSE(rd.samples.empty());
    const Domain sq = rectangle(std::sqrt(pi), std::sqrt(pi));
    const RobinReport rs = robin_sup(sq);
    EXPECT_LE(rs.gamma_sup, -1e-3);
    EXPECT_GT(sq.distance_to_boundary(rs.argmax), 0.1);
    EXPECT_LE(rs.convergence_delta, 1e-6);
    EXPECT_LE(rs.dirichlet_residual, 1e-6);
    const double ref = oracle::rectangle_robin(std::sqrt(pi), std::sqrt(pi), 0.5 * std::sqrt(pi), 0.5 * std::sqrt(pi));
    EXPECT_NEAR(rs.gamma_sup, ref, 1e-6);
    // deterministic
    EXPECT_EQ(format_robin_report(robin_sup(sq)), format_robin_report(rs));
}

TEST(Greens, RobinSupBelowZeroOnAreaPiDomains)
{
    for (const Domain& d : {ellipse(std::sqrt(2.0), std::sqrt(0.5)), fourier_disk(), normalize_area(pentagon())}) {
        const RobinReport r = robin_sup(d);
        EXPECT_LE(r.gamma_sup, -1e-3) << to_string(d.kind());
        EXPECT_TRUE(d.contains(r.argmax));
    }
}
