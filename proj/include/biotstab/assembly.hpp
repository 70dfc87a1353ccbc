#pragma once

#include "biotstab/fespace.hpp"
#include "biotstab/sparse.hpp"

#include <cmath>
#include <functional>

namespace biotstab {

namespace detail {

inline double factorial(int n)
{
    double f = 1.0;
    for (int k = 2; k <= n; ++k)
        f *= k;
    return f;
}

// bubble normalization: b = (d+1)^(d+1) * prod(lambda_i), so b = 1 at the barycenter
inline double bubble_scale(int d)
{
    return std::pow(d + 1.0, d + 1.0);
}

} // namespace detail

/// Elasticity form 2 mu (eps(u), eps(v)) + lambda (div u, div v).
/// For the bubble-enriched space the linear/bubble coupling vanishes
/// (bubble gradients integrate to zero over each element), so only the
/// element-local bubble diagonal blocks are added.
inline SparseMatrix assemble_elasticity(const FeSpace& v, double mu, double lambda)
{
    if (!(mu > 0.0) || lambda < 0.0)
        throw InvalidArgument("assemble_elasticity: need mu > 0 and lambda >= 0");
    const Mesh& mesh = *v.mesh;
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(mesh.n_elements()) * (d + 1) * (d + 1) * d * d);
    const double cb = detail::bubble_scale(d);
    const double w0_factor = detail::factorial(d) * std::pow(2.0, d - 1) / detail::factorial(3 * d);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const int* ev = mesh.element_vertices(e);
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j) {
                double gij = 0.0;
                for (int k = 0; k < d; ++k)
                    gij += g.grad[i][k] * g.grad[j][k];
                for (int c = 0; c < d; ++c)
                    for (int b = 0; b < d; ++b) {
                        double val = mu * ((c == b ? gij : 0.0) + g.grad[i][b] * g.grad[j][c]) +
                                     lambda * g.grad[i][c] * g.grad[j][b];
                        ts.push_back({v.vertex_dof(ev[i], c), v.vertex_dof(ev[j], b),
                                      g.volume * val});
                    }
            }
        if (v.has_bubbles()) {
            // B[k][l] = int d_k b * d_l b = cb^2 * w0 * sum_j grad_j grad_j^T
            const double w0 = g.volume * w0_factor;
            double B[3][3] = {};
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    double s = 0.0;
                    for (int j = 0; j <= d; ++j)
                        s += g.grad[j][k] * g.grad[j][l];
                    B[k][l] = cb * cb * w0 * s;
                }
            double trB = 0.0;
            for (int k = 0; k < d; ++k)
                trB += B[k][k];
            for (int c = 0; c < d; ++c)
                for (int b = 0; b < d; ++b) {
                    double val = mu * ((c == b ? trB : 0.0) + B[c][b]) + lambda * B[c][b];
                    ts.push_back({v.bubble_dof(e, c), v.bubble_dof(e, b), val});
                }
        }
    }
    return SparseMatrix::from_triplets(ts, v.n_dofs, v.n_dofs);
}

/// Coupling block G from -alpha (p, div v); the caller forms D = -G^T.
inline SparseMatrix assemble_coupling(const FeSpace& v, const FeSpace& q, double alpha)
{
    if (v.mesh != q.mesh)
        throw InvalidArgument("assemble_coupling: spaces on different meshes");
    const Mesh& mesh = *v.mesh;
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    if (alpha == 0.0)
        return SparseMatrix::from_triplets(ts, v.n_dofs, q.n_dofs);
    const double cb = detail::bubble_scale(d);
    const double bub_factor = detail::factorial(d) / detail::factorial(2 * d + 1);
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const int* ev = mesh.element_vertices(e);
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j)
                for (int c = 0; c < d; ++c)
                    ts.push_back({v.vertex_dof(ev[i], c), q.vertex_dof(ev[j]),
                                  -alpha * g.grad[i][c] * g.volume / (d + 1)});
        if (v.has_bubbles())
            for (int j = 0; j <= d; ++j)
                for (int c = 0; c < d; ++c)
                    ts.push_back({v.bubble_dof(e, c), q.vertex_dof(ev[j]),
                                  alpha * cb * g.volume * bub_factor * g.grad[j][c]});
    }
    return SparseMatrix::from_triplets(ts, v.n_dofs, q.n_dofs);
}

/// Pressure stiffness (K grad p, grad q); symmetric positive semidefinite
/// with the constants in its kernel before elimination.
inline SparseMatrix assemble_pressure_stiffness(const FeSpace& q, double conductivity)
{
    if (!(conductivity > 0.0))
        throw InvalidArgument("assemble_pressure_stiffness: conductivity must be positive");
    const Mesh& mesh = *q.mesh;
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(mesh.n_elements()) * (d + 1) * (d + 1));
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const int* ev = mesh.element_vertices(e);
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j) {
                double gij = 0.0;
                for (int k = 0; k < d; ++k)
                    gij += g.grad[i][k] * g.grad[j][k];
                ts.push_back({q.vertex_dof(ev[i]), q.vertex_dof(ev[j]),
                              conductivity * g.volume * gij});
            }
    }
    return SparseMatrix::from_triplets(ts, q.n_dofs, q.n_dofs);
}

inline SparseMatrix assemble_mass(const FeSpace& q)
{
    const Mesh& mesh = *q.mesh;
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(mesh.n_elements()) * (d + 1) * (d + 1));
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const int* ev = mesh.element_vertices(e);
        const double base = g.volume / ((d + 1.0) * (d + 2.0));
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j)
                ts.push_back({q.vertex_dof(ev[i]), q.vertex_dof(ev[j]),
                              base * (i == j ? 2.0 : 1.0)});
    }
    return SparseMatrix::from_triplets(ts, q.n_dofs, q.n_dofs);
}

/// Diagonal lumped mass: each vertex receives |T|/(d+1) per incident element.
inline SparseMatrix lump_mass(const FeSpace& q)
{
    const Mesh& mesh = *q.mesh;
    const int d = mesh.dim;
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(mesh.n_elements()) * (d + 1));
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const ElementGeometry g = element_geometry(mesh, e);
        const int* ev = mesh.element_vertices(e);
        for (int i = 0; i <= d; ++i)
            ts.push_back({q.vertex_dof(ev[i]), q.vertex_dof(ev[i]), g.volume / (d + 1)});
    }
    return SparseMatrix::from_triplets(ts, q.n_dofs, q.n_dofs);
}

using SpatialScalar = std::function<double(const std::array<double, 3>&, double)>;
using SpatialVector = std::function<std::array<double, 3>(const std::array<double, 3>&, double)>;

/// Load vectors at time t: f collects body force and boundary tractions
/// (interpolated body force, exact for per-element linear data); g collects
/// the distributed source, the gravity term and point sources evaluated
/// through the pressure basis.
inline std::pair<Vec, Vec> assemble_rhs(const FeSpace& v, const FeSpace& q,
                                        const BoundaryConditions& bcs,
                                        const SpatialVector& body_force,
                                        const SpatialScalar& fluid_source,
                                        const std::array<double, 3>& gravity_flux, double t)
{
    const Mesh& mesh = *v.mesh;
    const int d = mesh.dim;
    Vec f = Vec::Zero(v.n_dofs);
    Vec g = Vec::Zero(q.n_dofs);

    const bool grav = gravity_flux[0] != 0.0 || gravity_flux[1] != 0.0 || gravity_flux[2] != 0.0;
    if (body_force || fluid_source || grav) {
        const double cb = detail::bubble_scale(d);
        const double bub_mass = 2.0 * cb * detail::factorial(d) / detail::factorial(2 * d + 1);
        for (int e = 0; e < mesh.n_elements(); ++e) {
            const ElementGeometry ge = element_geometry(mesh, e);
            const int* ev = mesh.element_vertices(e);
            const double base = ge.volume / ((d + 1.0) * (d + 2.0));
            for (int j = 0; j <= d; ++j) {
                const auto xj = mesh.vertex(ev[j]);
                if (body_force) {
                    const auto fj = body_force(xj, t);
                    for (int i = 0; i <= d; ++i)
                        for (int c = 0; c < d; ++c)
                            f[v.vertex_dof(ev[i], c)] += base * (i == j ? 2.0 : 1.0) * fj[c];
                    if (v.has_bubbles())
                        for (int c = 0; c < d; ++c)
                            f[v.bubble_dof(e, c)] += bub_mass * ge.volume * fj[c];
                }
                if (fluid_source) {
                    const double sj = fluid_source(xj, t);
                    for (int i = 0; i <= d; ++i)
                        g[q.vertex_dof(ev[i])] += base * (i == j ? 2.0 : 1.0) * sj;
                }
            }
            if (grav)
                for (int i = 0; i <= d; ++i) {
                    double s = 0.0;
                    for (int k = 0; k < d; ++k)
                        s += gravity_flux[k] * ge.grad[i][k];
                    g[q.vertex_dof(ev[i])] += s * ge.volume;
                }
        }
    }

    const double tol = 1e-12 * mesh.h;
    for (const auto& patch : bcs.tractions) {
        for (const auto& facet : mesh.boundary) {
            if (facet.side != patch.side)
                continue;
            if (patch.restricted) {
                bool inside = true;
                for (int s = 0; s < d; ++s) {
                    const auto x = mesh.vertex(facet.vertices[s]);
                    for (int k = 0; k < d; ++k)
                        if (x[k] < patch.box_lo[k] - tol || x[k] > patch.box_hi[k] + tol)
                            inside = false;
                }
                if (!inside)
                    continue;
            }
            for (int s = 0; s < d; ++s)
                for (int c = 0; c < d; ++c)
                    f[v.vertex_dof(facet.vertices[s], c)] +=
                        patch.traction[c] * facet.measure / d;
        }
    }

    for (const auto& src : bcs.point_sources) {
        const auto [e, lam] = locate_point(mesh, src.location);
        const int* ev = mesh.element_vertices(e);
        const double amp = src.amplitude ? src.amplitude(t) : 0.0;
        for (int i = 0; i <= d; ++i)
            g[q.vertex_dof(ev[i])] += amp * lam[i];
    }
    return {f, g};
}

/// Essential-constraint bookkeeping for one (block) system.
struct ConstraintSet {
    std::vector<int> dofs;
    std::vector<double> values;

    static ConstraintSet from_space(const FeSpace& s, int offset = 0)
    {
        ConstraintSet c;
        c.dofs.reserve(s.constrained_dofs.size());
        for (std::size_t k = 0; k < s.constrained_dofs.size(); ++k) {
            c.dofs.push_back(s.constrained_dofs[k] + offset);
            c.values.push_back(s.constrained_values[k]);
        }
        return c;
    }

    static ConstraintSet merged(const ConstraintSet& a, const ConstraintSet& b)
    {
        ConstraintSet c = a;
        c.dofs.insert(c.dofs.end(), b.dofs.begin(), b.dofs.end());
        c.values.insert(c.values.end(), b.values.begin(), b.values.end());
        return c;
    }

    bool homogeneous() const
    {
        for (double v : values)
            if (v != 0.0)
                return false;
        return true;
    }

    void set_entries(Vec& rhs) const
    {
        for (std::size_t k = 0; k < dofs.size(); ++k)
            rhs[dofs[k]] = values[k];
    }

    /// rhs <- rhs - raw * x_bc, then prescribed entries; `raw` must be the
    /// unconstrained matrix so free rows lose the constrained-column terms.
    void lift(const SparseMatrix& raw, Vec& rhs) const
    {
        if (!homogeneous()) {
            Vec xbc = Vec::Zero(raw.cols());
            for (std::size_t k = 0; k < dofs.size(); ++k)
                xbc[dofs[k]] = values[k];
            rhs -= raw * xbc;
        }
        set_entries(rhs);
    }
};

/// Symmetric elimination of essential constraints on a square system:
/// constrained rows/columns zeroed, unit diagonal, rhs lifted so the solution
/// carries the prescribed values exactly.
inline void apply_dirichlet(SparseMatrix& m, Vec& rhs, const ConstraintSet& cs)
{
    if (m.rows() != m.cols() || rhs.size() != m.rows())
        throw InvalidArgument("apply_dirichlet: shape mismatch");
    cs.lift(m, rhs);
    m = eliminate(m, cs.dofs, cs.dofs, true);
}

} // namespace biotstab
