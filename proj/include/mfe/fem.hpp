#pragma once

// Piecewise-linear finite elements on a Mesh: nodal fields, Dirichlet
// energy, the exponential integral, and Poisson solves with zero boundary data.

#include "error.hpp"
#include "mesh.hpp"

#include <Eigen/QR>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace mfe {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal scalar function on a mesh.
struct Field {
    std::shared_ptr<const Mesh> mesh;
    Vector values;

    Field() = default;
    Field(std::shared_ptr<const Mesh> m, Vector v) : mesh(std::move(m)), values(std::move(v))
    {
        if (!mesh || std::size_t(values.size()) != mesh->num_vertices())
            throw DomainError("field size does not match the mesh");
    }

    static Field zero(std::shared_ptr<const Mesh> m)
    {
        const auto n = Eigen::Index(m->num_vertices());
        return Field(std::move(m), Vector::Zero(n));
    }

    /// Nodal interpolant of f.
    static Field interpolate(std::shared_ptr<const Mesh> m, const std::function<double(Point)>& f)
    {
        Vector v(static_cast<Eigen::Index>(m->num_vertices()));
        for (std::size_t i = 0; i < m->num_vertices(); ++i) v[Eigen::Index(i)] = f(m->vertices[i]);
        return Field(std::move(m), std::move(v));
    }

    /// Nodal interpolant with boundary values forced to zero.
    static Field interpolate_admissible(std::shared_ptr<const Mesh> m, const std::function<double(Point)>& f)
    {
        Field out = interpolate(m, f);
        out.clear_boundary();
        return out;
    }

    void clear_boundary()
    {
        for (std::size_t i = 0; i < mesh->num_vertices(); ++i)
            if (mesh->boundary[i]) values[Eigen::Index(i)] = 0.0;
    }

    /// Boundary nodal values exactly zero.
    bool admissible() const
    {
        for (std::size_t i = 0; i < mesh->num_vertices(); ++i)
            if (mesh->boundary[i] && values[Eigen::Index(i)] != 0.0) return false;
        return true;
    }

    double max_value() const { return values.maxCoeff(); }

    Eigen::Index argmax_index() const
    {
        Eigen::Index k = 0;
        values.maxCoeff(&k);
        return k;
    }
};

inline void require_admissible(const Field& f, const char* who)
{
    if (!f.admissible()) throw DomainError(std::string(who) + ": field does not vanish on the boundary");
}

/// Gradient of the linear interpolant on triangle t.
inline Point triangle_gradient(const Mesh& m, std::size_t t, const Vector& u)
{
    const auto& T = m.triangles[t];
    const Point a = m.vertices[T[0]], b = m.vertices[T[1]], c = m.vertices[T[2]];
    const double area2 = orient2d(a, b, c);
    const double ua = u[T[0]], ub = u[T[1]], uc = u[T[2]];
    // grad = sum_k u_k * rot90(opposite edge) / (2 area)
    const Point g = ua * Point{b.y - c.y, c.x - b.x} + ub * Point{c.y - a.y, a.x - c.x} + uc * Point{a.y - b.y, b.x - a.x};
    return g / area2;
}

/// Integral of |grad u|^2 of the piecewise-linear interpolant.
inline double dirichlet_energy(const Mesh& m, const Vector& u)
{
    double s = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) s += m.triangle_area(t) * norm2(triangle_gradient(m, t, u));
    return s;
}

inline double dirichlet_energy(const Field& f) { return dirichlet_energy(*f.mesh, f.values); }

/// ln of the integral of e^u: on each triangle, |T|/3 times the sum of e^u at
/// the edge midpoints, evaluated relative to the largest midpoint value.
inline double log_exp_integral(const Mesh& m, const Vector& u)
{
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& T : m.triangles)
        for (int k = 0; k < 3; ++k) top = std::max(top, 0.5 * (u[T[k]] + u[T[(k + 1) % 3]]));
    double s = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& T = m.triangles[t];
        double e = 0.0;
        for (int k = 0; k < 3; ++k) e += std::exp(0.5 * (u[T[k]] + u[T[(k + 1) % 3]]) - top);
        s += m.triangle_area(t) / 3.0 * e;
    }
    return top + std::log(s);
}

inline double log_exp_integral(const Field& f) { return log_exp_integral(*f.mesh, f.values); }

/// Integral of e^u; may overflow to infinity, in which case log_exp_integral
/// still holds the value.
inline double exp_integral(const Field& f) { return std::exp(log_exp_integral(f)); }

// ---------------------------------------------------------------------------
// Assembled operators

/// Stiffness and mass matrices of a mesh with a factorization of the
/// interior stiffness block. Immutable after construction.
class FemSpace {
public:
    explicit FemSpace(std::shared_ptr<const Mesh> m) : mesh_(std::move(m))
    {
        const std::size_t n = mesh_->num_vertices();
        dof_.assign(n, -1);
        for (std::size_t i = 0; i < n; ++i)
            if (!mesh_->boundary[i]) {
                dof_[i] = int(interior_.size());
                interior_.push_back(int(i));
            }
        if (interior_.empty()) throw MeshError("mesh has no interior vertices");
        std::vector<Eigen::Triplet<double>> kt, mt;
        kt.reserve(9 * mesh_->num_triangles());
        mt.reserve(9 * mesh_->num_triangles());
        for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
            const auto& T = mesh_->triangles[t];
            const Point p[3] = {mesh_->vertices[T[0]], mesh_->vertices[T[1]], mesh_->vertices[T[2]]};
            const double area = mesh_->triangle_area(t);
            Point g[3];
            for (int k = 0; k < 3; ++k) {
                const Point e = p[(k + 2) % 3] - p[(k + 1) % 3];
                g[k] = Point{-e.y, e.x} / (2.0 * area);
            }
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    kt.emplace_back(T[a], T[b], area * dot(g[a], g[b]));
                    mt.emplace_back(T[a], T[b], area / 12.0 * (a == b ? 2.0 : 1.0));
                }
        }
        K_.resize(Eigen::Index(n), Eigen::Index(n));
        K_.setFromTriplets(kt.begin(), kt.end());
        M_.resize(Eigen::Index(n), Eigen::Index(n));
        M_.setFromTriplets(mt.begin(), mt.end());

        std::vector<Eigen::Triplet<double>> it;
        for (int k = 0; k < K_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator e(K_, k); e; ++e) {
                const int r = dof_[std::size_t(e.row())], c = dof_[std::size_t(e.col())];
                if (r >= 0 && c >= 0) it.emplace_back(r, c, e.value());
            }
        const auto ni = Eigen::Index(interior_.size());
        Kii_.resize(ni, ni);
        Kii_.setFromTriplets(it.begin(), it.end());
        chol_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(Kii_);
        if (chol_->info() != Eigen::Success) throw MeshError("stiffness matrix is singular");
    }

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    const SparseMatrix& stiffness() const { return K_; }
    const SparseMatrix& mass() const { return M_; }
    const SparseMatrix& interior_stiffness() const { return Kii_; }
    std::size_t num_interior() const { return interior_.size(); }
    const std::vector<int>& interior() const { return interior_; }

    Vector restrict(const Vector& full) const
    {
        Vector r(static_cast<Eigen::Index>(interior_.size()));
        for (std::size_t k = 0; k < interior_.size(); ++k) r[Eigen::Index(k)] = full[interior_[k]];
        return r;
    }

    Vector extend(const Vector& inner) const
    {
        Vector f = Vector::Zero(Eigen::Index(mesh_->num_vertices()));
        for (std::size_t k = 0; k < interior_.size(); ++k) f[interior_[k]] = inner[Eigen::Index(k)];
        return f;
    }

    /// Solves K_II x = b on interior unknowns.
    Vector solve_interior(const Vector& b) const { return chol_->solve(b); }

    /// Galerkin solution of -Lap u = f, u = 0 on the boundary, with f given
    /// by its nodal interpolant (consistent mass).
    Field poisson_solve(const Field& rhs) const
    {
        if (rhs.mesh.get() != mesh_.get() && rhs.mesh->hash() != mesh_->hash())
            throw DomainError("poisson_solve: right-hand side lives on a different mesh");
        const Vector b = restrict(M_ * rhs.values);
        Vector x = chol_->solve(b);
        const double bn = std::max(b.norm(), 1e-300);
        double res = (Kii_ * x - b).norm() / bn;
        for (int it = 0; it < 3 && res > 1e-12; ++it) {
            x += chol_->solve(b - Kii_ * x);
            res = (Kii_ * x - b).norm() / bn;
        }
        if (b.norm() > 0.0 && !(res <= 1e-10))
            throw RefinementError("poisson_solve: relative residual " + std::to_string(res) + " above 1e-10");
        return Field(mesh_, extend(x));
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    std::vector<int> dof_;
    std::vector<int> interior_;
    SparseMatrix K_, M_, Kii_;
    std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> chol_;
};

inline Field poisson_solve(std::shared_ptr<const Mesh> m, const Field& rhs) { return FemSpace(std::move(m)).poisson_solve(rhs); }

/// Evaluates a field at arbitrary points by linear interpolation.
class FieldSampler {
public:
    explicit FieldSampler(const Field& f) : field_(f), locator_(*f.mesh) {}

    /// NaN outside the mesh.
    double operator()(Point p) const
    {
        const auto hit = locator_.locate(p, 1e-9);
        if (hit.triangle < 0) return std::numeric_limits<double>::quiet_NaN();
        const auto& T = field_.mesh->triangles[std::size_t(hit.triangle)];
        return hit.bary[0] * field_.values[T[0]] + hit.bary[1] * field_.values[T[1]] + hit.bary[2] * field_.values[T[2]];
    }

    bool inside(Point p) const { return locator_.locate(p, 1e-9).triangle >= 0; }

private:
    Field field_;
    PointLocator locator_;
};

/// Maximum location below mesh resolution: stationary point of the
/// least-squares quadratic through the values on the two-ring of the maximal
/// vertex. Falls back to the vertex when the fit is not a concave cap centred
/// inside the one-ring.
inline Point refined_argmax(const Field& f)
{
    const Mesh& m = *f.mesh;
    const auto k = int(f.argmax_index());
    const Point c = m.vertices[std::size_t(k)];
    std::vector<int> ring{k};
    auto grow = [&](std::vector<int> seeds) {
        for (const auto& T : m.triangles)
            for (int s : seeds)
                if (T[0] == s || T[1] == s || T[2] == s) {
                    for (int j : T) ring.push_back(j);
                    break;
                }
        std::sort(ring.begin(), ring.end());
        ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    };
    grow({k});
    double reach = 0.0;
    for (int j : ring) reach = std::max(reach, distance(m.vertices[std::size_t(j)], c));
    grow(ring);
    if (ring.size() < 6 || !(reach > 0.0)) return c;
    Eigen::MatrixXd A(Eigen::Index(ring.size()), 6);
    Vector b(Eigen::Index(ring.size()));
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point d = (m.vertices[std::size_t(ring[i])] - c) / reach;
        A.row(Eigen::Index(i)) << 1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y;
        b[Eigen::Index(i)] = f.values[ring[i]];
    }
    const Vector q = A.colPivHouseholderQr().solve(b);
    // gradient q1 + 2 q3 x + q4 y = 0, q2 + q4 x + 2 q5 y = 0
    Eigen::Matrix2d H;
    H << 2.0 * q[3], q[4], q[4], 2.0 * q[5];
    if (!(H.determinant() > 0.0 && H(0, 0) < 0.0)) return c;
    const Eigen::Vector2d s = H.colPivHouseholderQr().solve(Eigen::Vector2d(-q[1], -q[2]));
    if (!(s.norm() < 1.0)) return c;
    return c + reach * Point{s[0], s[1]};
}

/// Transfers a field to another mesh by interpolation; target boundary values
/// are set to zero and target points outside the source mesh get zero.
inline Field transfer(const Field& f, std::shared_ptr<const Mesh> target)
{
    const FieldSampler s(f);
    Field out = Field::interpolate(std::move(target), [&](Point p) {
        const double v = s(p);
        return std::isnan(v) ? 0.0 : v;
    });
    out.clear_boundary();
    return out;
}

// ---------------------------------------------------------------------------
// Text form: mesh hash, then one nodal value per line.

inline std::string format_field(const Field& f)
{
    std::ostringstream os;
    os << std::setprecision(17) << "mesh_hash " << std::hex << f.mesh->hash() << std::dec << "\nvalues "
       << f.values.size() << "\n";
    for (Eigen::Index i = 0; i < f.values.size(); ++i) os << f.values[i] << '\n';
    return os.str();
}

inline Field parse_field(const std::string& text, std::shared_ptr<const Mesh> m)
{
    std::istringstream in(text);
    std::string tag, hash;
    std::size_t n = 0;
    if (!(in >> tag >> hash) || tag != "mesh_hash") throw InputError("field: expected 'mesh_hash'");
    std::ostringstream expect;
    expect << std::hex << m->hash();
    if (hash != expect.str()) throw InputError("field: mesh hash mismatch");
    if (!(in >> tag >> n) || tag != "values" || n != m->num_vertices()) throw InputError("field: bad value count");
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        if (!(in >> v[Eigen::Index(i)])) throw InputError("field: truncated value list");
    return Field(std::move(m), std::move(v));
}

} // namespace mfe
