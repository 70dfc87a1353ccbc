#pragma once

#include "biotstab/mesh.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>

namespace biotstab {

enum class Scheme { P1P1, Mini };

inline const char* to_string(Scheme s) { return s == Scheme::P1P1 ? "p1p1" : "mini"; }

/// Constant traction applied on one side, optionally restricted to an
/// axis-aligned patch (used for the footing load).
struct TractionPatch {
    Side side;
    std::array<double, 3> traction{0, 0, 0};
    bool restricted = false;
    std::array<double, 3> box_lo{0, 0, 0};
    std::array<double, 3> box_hi{0, 0, 0};
};

/// Point source in the flow equation with a time-dependent amplitude.
struct PointSource {
    std::array<double, 3> location{0, 0, 0};
    std::function<double(double)> amplitude;
};

struct BoundaryConditions {
    // essential constraints: per side, per displacement component / pressure
    std::map<Side, std::array<std::optional<double>, 3>> displacement;
    std::map<Side, std::optional<double>> pressure;
    std::vector<TractionPatch> tractions;
    std::vector<PointSource> point_sources;

    BoundaryConditions& fix_displacement(Side s, int component, double value = 0.0)
    {
        displacement[s][component] = value;
        return *this;
    }
    BoundaryConditions& fix_displacement_all(Side s, int dim, double value = 0.0)
    {
        for (int c = 0; c < dim; ++c)
            displacement[s][c] = value;
        return *this;
    }
    BoundaryConditions& drain(Side s, double value = 0.0)
    {
        pressure[s] = value;
        return *this;
    }
};

/// Finite-element space with its dof map and essential-constraint set.
/// VectorMini is the vector P1 space enriched with d bubble dofs per element;
/// bubbles live in element interiors and are never constrained.
class FeSpace {
public:
    enum class Kind { ScalarP1, VectorP1, VectorMini };

    Kind kind = Kind::ScalarP1;
    const Mesh* mesh = nullptr;
    int components = 1;
    int n_dofs = 0;

    std::vector<int> constrained_dofs;      // sorted
    std::vector<double> constrained_values; // parallel to constrained_dofs
    std::vector<char> constrained_mask;     // size n_dofs

    int vertex_dof(int v, int c = 0) const { return v * components + c; }

    int bubble_dof(int e, int c) const
    {
        return mesh->n_vertices() * components + e * components + c;
    }

    bool has_bubbles() const { return kind == Kind::VectorMini; }

    void set_constraints(const std::map<int, double>& cs)
    {
        constrained_dofs.clear();
        constrained_values.clear();
        constrained_mask.assign(n_dofs, 0);
        for (const auto& [dof, val] : cs) {
            constrained_dofs.push_back(dof);
            constrained_values.push_back(val);
            constrained_mask[dof] = 1;
        }
    }
};

namespace detail {

inline std::set<int> side_vertices(const Mesh& mesh, Side s)
{
    std::set<int> verts;
    for (const auto& f : mesh.boundary)
        if (f.side == s)
            for (int k = 0; k < mesh.dim; ++k)
                verts.insert(f.vertices[k]);
    return verts;
}

inline void insert_constraint(std::map<int, double>& cs, int dof, double value)
{
    auto [it, inserted] = cs.emplace(dof, value);
    if (!inserted && it->second != value)
        throw InvalidArgument("conflicting essential constraints on dof " + std::to_string(dof));
}

} // namespace detail

inline FeSpace make_pressure_space(const Mesh& mesh, const BoundaryConditions& bcs)
{
    FeSpace q;
    q.kind = FeSpace::Kind::ScalarP1;
    q.mesh = &mesh;
    q.components = 1;
    q.n_dofs = mesh.n_vertices();
    std::map<int, double> cs;
    for (const auto& [side, val] : bcs.pressure)
        if (val)
            for (int v : detail::side_vertices(mesh, side))
                detail::insert_constraint(cs, q.vertex_dof(v), *val);
    q.set_constraints(cs);
    return q;
}

inline FeSpace make_displacement_space(const Mesh& mesh, Scheme scheme,
                                       const BoundaryConditions& bcs)
{
    FeSpace v;
    v.kind = scheme == Scheme::Mini ? FeSpace::Kind::VectorMini : FeSpace::Kind::VectorP1;
    v.mesh = &mesh;
    v.components = mesh.dim;
    v.n_dofs = mesh.n_vertices() * mesh.dim +
               (scheme == Scheme::Mini ? mesh.n_elements() * mesh.dim : 0);
    std::map<int, double> cs;
    for (const auto& [side, comps] : bcs.displacement) {
        auto verts = detail::side_vertices(mesh, side);
        for (int c = 0; c < mesh.dim; ++c)
            if (comps[c])
                for (int vert : verts)
                    detail::insert_constraint(cs, v.vertex_dof(vert, c), *comps[c]);
    }
    v.set_constraints(cs);
    return v;
}

} // namespace biotstab
