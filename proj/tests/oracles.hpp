#pragma once

// Reference values computed independently of the library: image charges,
// explicit radial solutions and adaptive quadrature.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

struct P {
    double x = 0.0, y = 0.0;
};

inline double len(P a) { return std::hypot(a.x, a.y); }

/// Unit-disk Green's function from the reflected charge y / |y|^2.
inline double disk_green(P x, P y)
{
    const double ry = len(y);
    const double d = std::hypot(x.x - y.x, x.y - y.y);
    if (ry == 0.0) return -std::log(len(x)) / (2.0 * pi);
    const P ys{y.x / (ry * ry), y.y / (ry * ry)};
    const double ds = std::hypot(x.x - ys.x, x.y - ys.y);
    return (std::log(1.0 / d) - std::log(1.0 / (ry * ds))) / (2.0 * pi);
}

/// Regular part of the image-charge Green's function on the diagonal:
/// (1/2pi) ln(|y| |y - y*|).
inline double disk_robin(P y)
{
    const double ry = len(y);
    if (ry == 0.0) return 0.0;
    return std::log(ry * (1.0 / ry - ry)) / (2.0 * pi);
}

/// Green's function of {0 < y < d} with pole (0, alpha) by a row of image
/// dipoles, pairs k and -k summed together up to K and the remaining 1/k^2
/// tail added in closed form.
inline double strip_green_images(P z, double alpha, double d, int K = 4000)
{
    auto term = [&](double shift) {
        const double yp = z.y - (alpha + shift), ym = z.y - (-alpha + shift);
        return 0.5 * std::log((z.x * z.x + ym * ym) / (z.x * z.x + yp * yp)) / (2.0 * pi);
    };
    double s = term(0.0);
    for (int k = 1; k <= K; ++k) s += term(2.0 * k * d) + term(-2.0 * k * d);
    s += -alpha * z.y / (2.0 * pi * d * d) * boost::math::trigamma(double(K) + 1.0);
    return s;
}

/// Closed-form strip Green's function written directly with complex numbers.
inline double strip_green_closed(P z, double alpha, double d)
{
    const std::complex<double> e = std::exp(std::complex<double>(pi * z.x / d, pi * z.y / d));
    const std::complex<double> a = std::polar(1.0, alpha * pi / d);
    return std::log(std::abs(e - std::conj(a)) / std::abs(e - a)) / (2.0 * pi);
}

inline double strip_robin(double alpha, double d) { return std::log(2.0 * d * std::sin(pi * alpha / d) / pi) / (2.0 * pi); }

inline double strip_sup(double d) { return std::log(2.0 * d / pi) / (2.0 * pi); }

/// Robin function of the rectangle [0, L] x [0, d] at (x0, alpha): strip
/// Green's functions reflected across x = 0 and x = L.
inline double rectangle_robin(double L, double d, double x0, double alpha, int M = 12)
{
    const P z{x0, alpha};
    double g = strip_robin(alpha, d);
    for (int m = -M; m <= M; ++m) {
        if (m != 0) g += strip_green_closed(P{z.x - (x0 + 2.0 * m * L), z.y}, alpha, d);
        g -= strip_green_closed(P{z.x - (-x0 + 2.0 * m * L), z.y}, alpha, d);
    }
    return g;
}

// Radial Liouville family on the unit disk:
//   u = 2 ln((1 + delta) / (1 + delta r^2)),  delta = lambda / (8 pi - lambda).

inline double delta_of(double lambda) { return lambda / (8.0 * pi - lambda); }
inline double disk_energy(double lambda)
{
    const double d = delta_of(lambda);
    return std::log(1.0 + d) / d - 1.0;
}
inline double disk_solution(double delta, double r) { return 2.0 * std::log((1.0 + delta) / (1.0 + delta * r * r)); }
inline double disk_max(double delta) { return 2.0 * std::log(1.0 + delta); }
inline double disk_exp_integral(double delta) { return pi * (1.0 + delta); }

/// int |grad u|^2 for the family by radial quadrature.
inline double disk_dirichlet(double delta)
{
    auto f = [delta](double r) {
        const double g = 4.0 * delta * r / (1.0 + delta * r * r);
        return g * g * 2.0 * pi * r;
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
}

/// Rescaled profile of the family: -2 ln(1 + (delta / (1 + delta)) r^2).
inline double rescaled_profile(double delta, double r) { return -2.0 * std::log1p(delta / (1.0 + delta) * r * r); }

inline double standard_bubble(double r) { return -2.0 * std::log1p(r * r); }

/// sup over [0, R] of |rescaled profile - bubble|, by dense sampling.
inline double bubble_distance(double delta, double R, int n = 20000)
{
    double e = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double r = R * double(i) / n;
        e = std::max(e, std::abs(rescaled_profile(delta, r) - standard_bubble(r)));
    }
    return e;
}

/// D for the family with A = 0; independent of delta.
inline double d_epsilon(double delta, double R)
{
    return -disk_max(delta) + 2.0 * std::log(disk_exp_integral(delta) / pi) + 2.0 * std::log(R * R / (1.0 + R * R));
}

/// sup over r in [a, b] of |u + 4 ln r| (u minus 8 pi times the Green's function with pole 0).
inline double far_field(double delta, double a, double b, int n = 20000)
{
    double e = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double r = a + (b - a) * double(i) / n;
        e = std::max(e, std::abs(disk_solution(delta, r) + 4.0 * std::log(r)));
    }
    return e;
}

/// int_{B(R)} |grad bubble|^2 by radial quadrature.
inline double bubble_energy_ball(double R)
{
    auto f = [](double r) {
        const double g = 4.0 * r / (1.0 + r * r);
        return g * g * 2.0 * pi * r;
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, R, 20, 1e-14);
}

/// int_{R^2} e^{bubble}: quadrature over B(R) plus the exact tail pi / (1 + R^2).
inline double bubble_mass(double R)
{
    auto f = [](double r) { return 2.0 * pi * r / ((1.0 + r * r) * (1.0 + r * r)); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, R, 30, 1e-14) + pi / (1.0 + R * R);
}

} // namespace oracle
