#pragma once

// Seeded random admissible fields for property checks: Poisson solves of
// Gaussian bump sources, rescaled to a target amplitude.

#include "fem.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace mfe {

struct RandomFieldOptions {
    int min_bumps = 1;
    int max_bumps = 6;
    /// Bump width range relative to the mesh diameter.
    double min_width = 0.05;
    double max_width = 0.3;
    /// Nonnegative sources give nonnegative fields.
    bool nonnegative = false;
};

/// Smooth admissible field with sup |u| = amplitude.
inline Field random_smooth_field(const FemSpace& space, std::mt19937_64& rng, double amplitude,
                                 const RandomFieldOptions& opt = {})
{
    const Mesh& m = space.mesh();
    const auto& interior = space.interior();
    double diam = 0.0;
    {
        Point lo = m.vertices.front(), hi = lo;
        for (const auto& v : m.vertices) lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)}, hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
        diam = distance(lo, hi);
    }
    std::uniform_int_distribution<int> nb(opt.min_bumps, opt.max_bumps);
    std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = nb(rng);
    std::vector<Point> centers;
    std::vector<double> widths, weights;
    for (int k = 0; k < n; ++k) {
        centers.push_back(m.vertices[std::size_t(interior[pick(rng)])]);
        widths.push_back(diam * (opt.min_width + (opt.max_width - opt.min_width) * unit(rng)));
        const double w = 0.2 + unit(rng);
        weights.push_back(opt.nonnegative || unit(rng) < 0.5 ? w : -w);
    }
    const Field rhs = Field::interpolate(space.mesh_ptr(), [&](Point x) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += weights[std::size_t(k)] * std::exp(-norm2(x - centers[std::size_t(k)]) / (widths[std::size_t(k)] * widths[std::size_t(k)]));
        return s;
    });
    Field u = space.poisson_solve(rhs);
    const double top = u.values.cwiseAbs().maxCoeff();
    if (top > 0.0) u.values *= amplitude / top;
    return u;
}

} // namespace mfe
