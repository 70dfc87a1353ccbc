#pragma once

#include "biotstab/assembly.hpp"
#include "biotstab/solve.hpp"

#include <memory>
#include <optional>

namespace biotstab {

/// Isotropic poroelastic material. Storage is kept as 1/beta so the
/// incompressible-fluid limit is the exact value zero.
struct MaterialParams {
    double mu = 0.0;
    double lambda = 0.0;
    double alpha = 1.0;
    double inv_beta = 0.0;
    double conductivity = 1.0;                 // hydraulic conductivity K
    std::array<double, 3> gravity_flux{0, 0, 0}; // K * rho_f * g

    static MaterialParams from_lame(double mu, double lambda, double alpha = 1.0,
                                    double inv_beta = 0.0, double conductivity = 1.0)
    {
        MaterialParams m;
        m.mu = mu;
        m.lambda = lambda;
        m.alpha = alpha;
        m.inv_beta = inv_beta;
        m.conductivity = conductivity;
        m.validate();
        return m;
    }

    static MaterialParams from_young_poisson(double E, double nu, double alpha = 1.0,
                                             double inv_beta = 0.0, double conductivity = 1.0)
    {
        if (!(E > 0.0))
            throw InvalidArgument("MaterialParams: Young's modulus must be positive");
        if (!(nu > 0.0) || nu >= 0.5)
            throw InvalidArgument("MaterialParams: Poisson ratio must lie in (0, 1/2)");
        return from_lame(E / (2.0 * (1.0 + nu)), E * nu / ((1.0 - 2.0 * nu) * (1.0 + nu)),
                         alpha, inv_beta, conductivity);
    }

    /// 1D convention: only lambda + 2 mu enters, fix it directly.
    static MaterialParams from_constrained_modulus(double lam2mu, double alpha = 1.0,
                                                   double inv_beta = 0.0,
                                                   double conductivity = 1.0)
    {
        return from_lame(0.5 * lam2mu, 0.0, alpha, inv_beta, conductivity);
    }

    double constrained_modulus(int d) const { return lambda + 2.0 * mu / d; }

    void validate() const
    {
        if (!(mu > 0.0))
            throw InvalidArgument("MaterialParams: mu must be positive");
        if (lambda < 0.0)
            throw InvalidArgument("MaterialParams: lambda must be nonnegative");
        if (!(alpha > 0.0) || alpha > 1.0)
            throw InvalidArgument("MaterialParams: alpha must lie in (0, 1]");
        if (inv_beta < 0.0)
            throw InvalidArgument("MaterialParams: 1/beta must be nonnegative");
        if (!(conductivity > 0.0))
            throw InvalidArgument("MaterialParams: conductivity must be positive");
    }
};

enum class StorageRegime { SmallStorage, General };

/// Stabilization coefficient of the lumping-defect term L (M_l - M).
/// The general regime adds the storage coefficient so the choice stays
/// oscillation-removing when 1/beta is not small.
inline double stabilization_coefficient(Scheme scheme, const MaterialParams& m, int d,
                                        StorageRegime regime = StorageRegime::SmallStorage)
{
    m.validate();
    const double md = m.constrained_modulus(d);
    double L = (scheme == Scheme::P1P1) ? 1.5 * m.alpha * m.alpha / md
                                        : m.alpha * m.alpha / md;
    if (regime == StorageRegime::General)
        L += m.inv_beta;
    return L;
}

struct ProblemDefinition {
    std::shared_ptr<const Mesh> mesh;
    MaterialParams material;
    BoundaryConditions bcs;
    SpatialVector body_force;   // null = zero
    SpatialScalar fluid_source; // null = zero
    double t_final = 1.0;
    int n_steps = 1;
    Vec u0, p0; // empty = zero

    double tau() const
    {
        if (n_steps < 1)
            throw InvalidArgument("ProblemDefinition: need at least one time step");
        return t_final / n_steps;
    }
};

struct SolutionState {
    Vec u;
    Vec p;
    double t = 0.0;
};

/// Assembled backward-Euler system with the flow row scaled by the time
/// step: pressure block C = tau A_p + (1/beta) M + L (M_l - M). Raw blocks
/// are kept for right-hand-side history terms; the monolithic matrix and the
/// elasticity block carry the eliminated essential constraints.
class DiscreteBiotSystem {
public:
    ProblemDefinition problem;
    Scheme scheme = Scheme::P1P1;
    double tau = 0.0;
    double stabilization = 0.0; // L

    FeSpace space_v, space_q;
    int n_u = 0, n_p = 0;

    SparseMatrix A, G, D, Ap, M, Ml, Z, C; // raw blocks
    SparseMatrix mono_raw, mono;           // block system, raw + constrained
    SparseMatrix A_c;                      // constrained elasticity block
    ConstraintSet cs_u, cs_p, cs_mono;

    Vec zero_u() const { return Vec::Zero(n_u); }
    Vec zero_p() const { return Vec::Zero(n_p); }

    SolutionState initial_state() const
    {
        SolutionState s;
        s.u = problem.u0.size() ? problem.u0 : zero_u();
        s.p = problem.p0.size() ? problem.p0 : zero_p();
        s.t = 0.0;
        if (s.u.size() != n_u || s.p.size() != n_p)
            throw InvalidArgument("initial state has wrong size");
        return s;
    }

    std::pair<Vec, Vec> loads_at(double t) const
    {
        return assemble_rhs(space_v, space_q, problem.bcs, problem.body_force,
                            problem.fluid_source, problem.material.gravity_flux, t);
    }

    /// Flow-row right-hand side carrying the backward-Euler history terms.
    Vec flow_history(const SolutionState& prev) const
    {
        return D * prev.u + problem.material.inv_beta * (M * prev.p) +
               stabilization * (Z * prev.p);
    }

    /// Left operator of the coupling iteration (before constraint
    /// elimination): tau A_p + (1/beta) M + g1 L M_l - g2 L M.
    SparseMatrix flow_operator_raw(double gamma1, double gamma2) const
    {
        SparseMatrix p = tau * Ap + problem.material.inv_beta * M +
                         (gamma1 * stabilization) * Ml;
        if (gamma2 != 0.0)
            p = p - (gamma2 * stabilization) * M;
        return p;
    }

    SparseMatrix flow_operator(double gamma1, double gamma2) const
    {
        return eliminate(flow_operator_raw(gamma1, gamma2), cs_p.dofs, cs_p.dofs, true);
    }

    const LuOperator& monolithic_factorization() const
    {
        if (!mono_lu_)
            mono_lu_ = std::make_unique<LuOperator>(mono);
        return *mono_lu_;
    }

private:
    mutable std::unique_ptr<LuOperator> mono_lu_;
};

inline DiscreteBiotSystem build_stabilized_system(const ProblemDefinition& problem, Scheme scheme,
                                                  double tau,
                                                  std::optional<double> L_override = {},
                                                  StorageRegime regime = StorageRegime::SmallStorage)
{
    if (!problem.mesh)
        throw InvalidArgument("build_stabilized_system: problem has no mesh");
    if (!(tau > 0.0))
        throw InvalidArgument("build_stabilized_system: time step must be positive");
    problem.material.validate();

    DiscreteBiotSystem s;
    s.problem = problem;
    s.scheme = scheme;
    s.tau = tau;
    const Mesh& mesh = *problem.mesh;
    const int d = mesh.dim;
    s.stabilization = L_override ? *L_override
                                 : stabilization_coefficient(scheme, problem.material, d, regime);
    if (s.stabilization < 0.0)
        throw InvalidArgument("build_stabilized_system: negative stabilization coefficient");

    s.space_v = make_displacement_space(mesh, scheme, problem.bcs);
    s.space_q = make_pressure_space(mesh, problem.bcs);
    s.n_u = s.space_v.n_dofs;
    s.n_p = s.space_q.n_dofs;

    const MaterialParams& m = problem.material;
    s.A = assemble_elasticity(s.space_v, m.mu, m.lambda);
    s.G = assemble_coupling(s.space_v, s.space_q, m.alpha);
    s.D = -1.0 * s.G.transpose();
    s.Ap = assemble_pressure_stiffness(s.space_q, m.conductivity);
    s.M = assemble_mass(s.space_q);
    s.Ml = lump_mass(s.space_q);
    s.Z = s.Ml - s.M;
    s.C = tau * s.Ap + m.inv_beta * s.M + s.stabilization * s.Z;

    s.cs_u = ConstraintSet::from_space(s.space_v);
    s.cs_p = ConstraintSet::from_space(s.space_q);
    s.cs_mono = ConstraintSet::merged(s.cs_u, ConstraintSet::from_space(s.space_q, s.n_u));

    BlockOperator blocks{&s.A, &s.G, &s.D, &s.C};
    s.mono_raw = blocks.concatenate();
    s.mono = eliminate(s.mono_raw, s.cs_mono.dofs, s.cs_mono.dofs, true);
    s.A_c = eliminate(s.A, s.cs_u.dofs, s.cs_u.dofs, true);
    return s;
}

/// One backward-Euler step of the fully coupled system by direct solve.
inline SolutionState monolithic_step(const DiscreteBiotSystem& s, const SolutionState& prev)
{
    const double t_n = prev.t + s.tau;
    auto [f, g] = s.loads_at(t_n);
    Vec rhs(s.n_u + s.n_p);
    rhs.head(s.n_u) = f;
    rhs.tail(s.n_p) = s.tau * g + s.flow_history(prev);
    s.cs_mono.lift(s.mono_raw, rhs);
    Vec x = s.monolithic_factorization().solve(rhs);
    SolutionState out;
    out.u = x.head(s.n_u);
    out.p = x.tail(s.n_p);
    out.t = t_n;
    return out;
}

} // namespace biotstab
