#pragma once

#include "biotstab/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace biotstab {

enum class Side { Left, Right, Bottom, Top, Front, Back };

inline const char* to_string(Side s)
{
    switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
    case Side::Front: return "front";
    case Side::Back: return "back";
    }
    return "?";
}

/// Facet on the domain boundary: the d vertices of the face, the adjacent
/// element, the side of the bounding box it lies on, its measure (length in
/// 2D, area in 3D, 1 in 1D) and the outward unit normal.
struct BoundaryFacet {
    std::array<int, 3> vertices{-1, -1, -1}; // first dim entries valid
    int element = -1;
    Side side = Side::Left;
    double measure = 0.0;
    std::array<double, 3> normal{0, 0, 0};
};

/// Per-element geometry used by assembly: volume, barycentric gradients,
/// diameter h_T, edge lengths and the shape constant
/// c_T = max_{j != k} h_T^2 / (|h_j| |h_k|).
struct ElementGeometry {
    double volume = 0.0;
    double diameter = 0.0;
    double shape_constant = 0.0;
    std::vector<double> edge_lengths;                // all vertex-pair distances
    std::array<std::array<double, 3>, 4> grad{};     // grad of barycentric coords
};

/// Uniform simplicial partition of an interval / rectangle / box.
/// Each grid cell is split into d! simplices sharing the main diagonal
/// (Kuhn split); in 2D this is the right-triangular grid with all diagonals
/// oriented the same way. Element vertex lists are sorted by global index,
/// which makes assembly deterministic; geometry is orientation-corrected.
class Mesh {
public:
    int dim = 0;
    int cells_per_axis = 0;
    double h = 0.0;                      // nominal mesh size, max over axes
    std::array<double, 3> extent{1, 1, 1};
    std::vector<double> coords;          // n_vertices * dim
    std::vector<int> elements;           // n_elements * (dim + 1), sorted per element
    std::vector<BoundaryFacet> boundary;

    int n_vertices() const { return static_cast<int>(coords.size()) / dim; }
    int n_elements() const { return static_cast<int>(elements.size()) / (dim + 1); }

    const int* element_vertices(int e) const { return elements.data() + e * (dim + 1); }

    std::array<double, 3> vertex(int v) const
    {
        std::array<double, 3> x{0, 0, 0};
        for (int k = 0; k < dim; ++k)
            x[k] = coords[static_cast<std::size_t>(v) * dim + k];
        return x;
    }

    /// All boundary facets on one side of the bounding box.
    std::vector<BoundaryFacet> boundary_facets(Side side) const
    {
        if (dim == 1 && side != Side::Left && side != Side::Right)
            throw InvalidArgument("boundary_facets: side not present in 1D");
        if (dim == 2 && (side == Side::Front || side == Side::Back))
            throw InvalidArgument("boundary_facets: side not present in 2D");
        std::vector<BoundaryFacet> out;
        for (const auto& f : boundary)
            if (f.side == side)
                out.push_back(f);
        return out;
    }
};

namespace detail {

inline void permutations(int d, std::vector<std::array<int, 3>>& perms)
{
    std::array<int, 3> axes{0, 1, 2};
    std::vector<int> a(axes.begin(), axes.begin() + d);
    std::sort(a.begin(), a.end());
    do {
        std::array<int, 3> p{0, 0, 0};
        for (int i = 0; i < d; ++i)
            p[i] = a[i];
        perms.push_back(p);
    } while (std::next_permutation(a.begin(), a.end()));
}

} // namespace detail

inline Mesh build_simplicial_mesh(int dim, int n, const std::vector<double>& extent)
{
    if (dim < 1 || dim > 3)
        throw InvalidArgument("build_simplicial_mesh: dimension must be 1, 2 or 3");
    if (n < 1)
        throw InvalidArgument("build_simplicial_mesh: need at least one cell per axis");
    if (static_cast<int>(extent.size()) != dim)
        throw InvalidArgument("build_simplicial_mesh: extent size must match dimension");
    for (double L : extent)
        if (!(L > 0.0))
            throw InvalidArgument("build_simplicial_mesh: extent components must be positive");

    Mesh mesh;
    mesh.dim = dim;
    mesh.cells_per_axis = n;
    std::array<double, 3> dx{0, 0, 0};
    for (int k = 0; k < dim; ++k) {
        mesh.extent[k] = extent[k];
        dx[k] = extent[k] / n;
        mesh.h = std::max(mesh.h, dx[k]);
    }

    const int nv1 = n + 1;
    auto vid = [&](int i, int j, int k) {
        return (dim == 1) ? i : (dim == 2) ? j * nv1 + i : (k * nv1 + j) * nv1 + i;
    };

    const int nk = (dim == 3) ? nv1 : 1;
    const int nj = (dim >= 2) ? nv1 : 1;
    mesh.coords.reserve(static_cast<std::size_t>(nv1) * nj * nk * dim);
    for (int k = 0; k < nk; ++k)
        for (int j = 0; j < nj; ++j)
            for (int i = 0; i < nv1; ++i) {
                mesh.coords.push_back(i * dx[0]);
                if (dim >= 2) mesh.coords.push_back(j * dx[1]);
                if (dim == 3) mesh.coords.push_back(k * dx[2]);
            }

    std::vector<std::array<int, 3>> perms;
    detail::permutations(dim, perms);

    const int ck = (dim == 3) ? n : 1;
    const int cj = (dim >= 2) ? n : 1;
    for (int k = 0; k < ck; ++k)
        for (int j = 0; j < cj; ++j)
            for (int i = 0; i < n; ++i)
                for (const auto& perm : perms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> verts{};
                    verts[0] = vid(c[0], c[1], c[2]);
                    for (int s = 0; s < dim; ++s) {
                        c[perm[s]] += 1;
                        verts[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    std::sort(verts.begin(), verts.begin() + dim + 1);
                    for (int s = 0; s <= dim; ++s)
                        mesh.elements.push_back(verts[s]);
                }

    // Boundary facets: a facet (element face) that occurs exactly once.
    std::map<std::array<int, 3>, std::pair<int, int>> facets; // key -> (count, element)
    const int ne = mesh.n_elements();
    for (int e = 0; e < ne; ++e) {
        const int* ev = mesh.element_vertices(e);
        for (int skip = 0; skip <= dim; ++skip) {
            std::array<int, 3> key{-1, -1, -1};
            int m = 0;
            for (int s = 0; s <= dim; ++s)
                if (s != skip)
                    key[m++] = ev[s];
            std::sort(key.begin(), key.begin() + dim);
            auto [it, inserted] = facets.try_emplace(key, std::pair<int, int>{0, e});
            it->second.first += 1;
        }
    }
    const double tol = 1e-12 * mesh.h;
    for (const auto& [key, ce] : facets) {
        if (ce.first == 1) {
            BoundaryFacet f;
            f.vertices = key;
            f.element = ce.second;
            // which side: all facet vertices share an extreme coordinate
            bool tagged = false;
            for (int axis = 0; axis < dim && !tagged; ++axis) {
                for (double val : {0.0, mesh.extent[axis]}) {
                    bool all = true;
                    for (int s = 0; s < dim; ++s)
                        if (std::abs(mesh.vertex(key[s])[axis] - val) > tol)
                            all = false;
                    if (all) {
                        const bool lo = (val == 0.0);
                        if (axis == 0)
                            f.side = lo ? Side::Left : Side::Right;
                        else if ((axis == 1 && dim == 2) || (axis == 2))
                            f.side = lo ? Side::Bottom : Side::Top;
                        else
                            f.side = lo ? Side::Front : Side::Back;
                        f.normal = {0, 0, 0};
                        f.normal[axis] = lo ? -1.0 : 1.0;
                        tagged = true;
                        break;
                    }
                }
            }
            if (!tagged)
                throw SolverError("mesh construction: boundary facet not on a box side");
            if (dim == 1) {
                f.measure = 1.0;
            } else if (dim == 2) {
                auto a = mesh.vertex(key[0]);
                auto b = mesh.vertex(key[1]);
                f.measure = std::hypot(b[0] - a[0], b[1] - a[1]);
            } else {
                auto a = mesh.vertex(key[0]);
                auto b = mesh.vertex(key[1]);
                auto c = mesh.vertex(key[2]);
                std::array<double, 3> u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
                std::array<double, 3> v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
                std::array<double, 3> w{u[1] * v[2] - u[2] * v[1],
                                        u[2] * v[0] - u[0] * v[2],
                                        u[0] * v[1] - u[1] * v[0]};
                f.measure = 0.5 * std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
            }
            mesh.boundary.push_back(f);
        } else if (ce.first != 2) {
            throw SolverError("mesh construction: facet shared by more than two elements");
        }
    }
    return mesh;
}

inline ElementGeometry element_geometry(const Mesh& mesh, int e)
{
    if (e < 0 || e >= mesh.n_elements())
        throw InvalidArgument("element_geometry: element id out of range");
    const int d = mesh.dim;
    const int* ev = mesh.element_vertices(e);

    Eigen::Matrix3d E = Eigen::Matrix3d::Identity();
    auto p0 = mesh.vertex(ev[0]);
    for (int c = 1; c <= d; ++c) {
        auto pc = mesh.vertex(ev[c]);
        for (int r = 0; r < d; ++r)
            E(r, c - 1) = pc[r] - p0[r];
    }
    double det = E.topLeftCorner(d, d).determinant();
    if (det == 0.0)
        throw SolverError("element_geometry: degenerate element");
    double fact = 1.0;
    for (int k = 2; k <= d; ++k)
        fact *= k;

    ElementGeometry g;
    g.volume = std::abs(det) / fact;

    // gradients: rows of inv(E)^T give grad(lambda_1..d); grad(lambda_0) = -sum
    Eigen::MatrixXd Einv = E.topLeftCorner(d, d).inverse();
    for (int i = 1; i <= d; ++i)
        for (int k = 0; k < d; ++k)
            g.grad[i][k] = Einv(i - 1, k);
    for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int i = 1; i <= d; ++i)
            s += g.grad[i][k];
        g.grad[0][k] = -s;
    }

    for (int a = 0; a <= d; ++a)
        for (int b = a + 1; b <= d; ++b) {
            auto pa = mesh.vertex(ev[a]);
            auto pb = mesh.vertex(ev[b]);
            double len2 = 0.0;
            for (int k = 0; k < d; ++k)
                len2 += (pb[k] - pa[k]) * (pb[k] - pa[k]);
            double len = std::sqrt(len2);
            g.edge_lengths.push_back(len);
            g.diameter = std::max(g.diameter, len);
        }
    g.shape_constant = 0.0;
    const int nedge = static_cast<int>(g.edge_lengths.size());
    for (int a = 0; a < nedge; ++a)
        for (int b = 0; b < nedge; ++b)
            if (a != b || nedge == 1)
                g.shape_constant = std::max(
                    g.shape_constant,
                    g.diameter * g.diameter / (g.edge_lengths[a] * g.edge_lengths[b]));
    return g;
}

/// Locate the element containing x; returns (element, barycentric coords).
inline std::pair<int, std::array<double, 4>> locate_point(const Mesh& mesh,
                                                          const std::array<double, 3>& x)
{
    const int d = mesh.dim;
    const double tol = 1e-10;
    for (int k = 0; k < d; ++k)
        if (x[k] < -tol * mesh.extent[k] || x[k] > (1.0 + tol) * mesh.extent[k])
            throw InvalidArgument("locate_point: point outside domain");

    // candidate cell, then test its simplices (neighbors as fallback near faces)
    const int ne = mesh.n_elements();
    auto bary_of = [&](int e, std::array<double, 4>& lam) {
        const int* ev = mesh.element_vertices(e);
        ElementGeometry g = element_geometry(mesh, e);
        auto p0 = mesh.vertex(ev[0]);
        for (int i = 0; i <= d; ++i) {
            double v = (i == 0) ? 1.0 : 0.0;
            for (int k = 0; k < d; ++k)
                v += g.grad[i][k] * (x[k] - p0[k]);
            lam[i] = v;
        }
        for (int i = 0; i <= d; ++i)
            if (lam[i] < -1e-11)
                return false;
        return true;
    };

    int fact = 1;
    for (int k = 2; k <= d; ++k)
        fact *= k;
    std::array<int, 3> cell{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        double dxk = mesh.extent[k] / mesh.cells_per_axis;
        cell[k] = std::clamp(static_cast<int>(std::floor(x[k] / dxk)), 0, mesh.cells_per_axis - 1);
    }
    const int n = mesh.cells_per_axis;
    int cell_index = (d == 1) ? cell[0] : (d == 2) ? cell[1] * n + cell[0]
                                                   : (cell[2] * n + cell[1]) * n + cell[0];
    std::array<double, 4> lam{};
    for (int s = 0; s < fact; ++s) {
        int e = cell_index * fact + s;
        if (e < ne && bary_of(e, lam))
            return {e, lam};
    }
    for (int e = 0; e < ne; ++e) // robust fallback
        if (bary_of(e, lam))
            return {e, lam};
    throw InvalidArgument("locate_point: point not found in any element");
}

} // namespace biotstab
