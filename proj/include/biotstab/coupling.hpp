#pragma once

#include "biotstab/biot.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace biotstab {

enum class ParamMode { OneParameter, TwoParameter };
enum class StoppingRule { Residual, Increment };
enum class SolverChoice { Monolithic, Coupled };

struct SolverConfig {
    Scheme scheme = Scheme::P1P1;
    ParamMode mode = ParamMode::OneParameter;
    double gamma = 2.0 / 3.0;
    double gamma1 = 1.0;
    double gamma2 = 0.0;
    std::optional<double> L; // stabilization override; preset otherwise
    StoppingRule stopping = StoppingRule::Residual;
    double tol = 1e-8;
    int max_iterations = 200;
    InnerSolver inner = InnerSolver::Direct;
    double inner_tol = 1e-12;

    double g1() const { return mode == ParamMode::OneParameter ? gamma : gamma1; }
    double g2() const { return mode == ParamMode::OneParameter ? 0.0 : gamma2; }

    /// omega = (g1 - g2) L (lambda + 2 mu / d) / alpha^2; the convergence
    /// theory asks for omega >= 1.
    double omega(const MaterialParams& m, int d, double L_used) const
    {
        return (g1() - g2()) * L_used * m.constrained_modulus(d) / (m.alpha * m.alpha);
    }
};

/// Presets that make the splitting left factor equal the Schur complement of
/// the 1D consolidation system, so the iteration terminates in two sweeps.
/// The small-storage regime keeps the single relaxation parameter; the
/// general regime needs the two-parameter form.
inline SolverConfig optimal_parameters(Scheme scheme, const MaterialParams& m, int d,
                                       StorageRegime regime = StorageRegime::SmallStorage)
{
    m.validate();
    SolverConfig cfg;
    cfg.scheme = scheme;
    const double md = m.constrained_modulus(d);
    const double a2 = m.alpha * m.alpha;
    const double L = stabilization_coefficient(scheme, m, d, regime);
    cfg.L = L;
    if (regime == StorageRegime::SmallStorage) {
        cfg.mode = ParamMode::OneParameter;
        cfg.gamma = (scheme == Scheme::P1P1) ? 2.0 / 3.0 : 1.0;
    } else {
        cfg.mode = ParamMode::TwoParameter;
        if (scheme == Scheme::P1P1) {
            cfg.gamma1 = 1.0 - a2 / (2.0 * L * md);
            cfg.gamma2 = 1.0 - 3.0 * a2 / (2.0 * L * md);
        } else {
            cfg.gamma1 = 1.0;
            cfg.gamma2 = m.inv_beta / L;
        }
        if (!(cfg.gamma1 > cfg.gamma2) || cfg.gamma2 < 0.0)
            throw InvalidArgument("optimal_parameters: preset violates gamma1 > gamma2 >= 0");
    }
    return cfg;
}

struct IterationRecord {
    int iteration = 0;
    double residual_norm = 0.0;
    double dp_norm = 0.0;
    double du_norm = 0.0;
    double composite_error = std::numeric_limits<double>::quiet_NaN();
};

struct IterationReport {
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::vector<IterationRecord> history;
    std::vector<std::string> warnings;
};

inline std::vector<std::string> config_warnings(const SolverConfig& cfg,
                                                const DiscreteBiotSystem& s)
{
    std::vector<std::string> w;
    const double g1 = cfg.g1();
    if (!(g1 > 0.0))
        w.push_back("relaxation parameter is not positive");
    if (g1 <= 0.5 || g1 > 2.0)
        w.push_back("relaxation parameter outside the proven-convergent range (1/2, 2]");
    if (cfg.mode == ParamMode::TwoParameter && (!(cfg.gamma1 > cfg.gamma2) || cfg.gamma2 < 0.0))
        w.push_back("two-parameter mode expects gamma1 > gamma2 >= 0");
    const int d = s.problem.mesh->dim;
    if (cfg.omega(s.problem.material, d, s.stabilization) < 1.0 - 1e-12)
        w.push_back("omega < 1: contraction bound does not apply");
    return w;
}

/// Sequential-implicit solver for one time step: a flow sweep with the lumped
/// stabilized operator, then a mechanics sweep, iterated to tolerance. The
/// operators are constant over the iteration (and over time steps), so their
/// factorizations are built once here and reused.
class CoupledSolver {
public:
    CoupledSolver(const DiscreteBiotSystem& system, const SolverConfig& config)
        : s_(&system), cfg_(config)
    {
        if (cfg_.L && std::abs(*cfg_.L - system.stabilization) >
                          1e-12 * std::max(1.0, std::abs(*cfg_.L)))
            throw InvalidArgument(
                "CoupledSolver: config stabilization differs from the assembled system");
        flow_raw_ = system.flow_operator_raw(cfg_.g1(), cfg_.g2());
        flow_op_ = InnerOperator(eliminate(flow_raw_, system.cs_p.dofs, system.cs_p.dofs, true),
                                 cfg_.inner, cfg_.inner_tol);
        mech_op_ = InnerOperator(system.A_c, cfg_.inner, cfg_.inner_tol);
        warnings_ = config_warnings(cfg_, system);
    }

    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Step 1: given the previous iterate, solve the relaxed flow problem.
    Vec flow_step(const SolutionState& prev, const Vec& u_it, const Vec& p_it,
                  const Vec& g_n) const
    {
        const DiscreteBiotSystem& s = *s_;
        const double L = s.stabilization;
        const double g1 = cfg_.g1(), g2 = cfg_.g2();
        const double inv_beta = s.problem.material.inv_beta;
        Vec dp = p_it - prev.p;
        Vec du = u_it - prev.u;
        Vec rhs = s.tau * g_n - (s.D * du) + ((1.0 - g2) * L) * (s.M * dp) +
                  ((g1 - 1.0) * L) * (s.Ml * dp) + inv_beta * (s.M * prev.p) +
                  (g1 * L) * (s.Ml * prev.p) - (g2 * L) * (s.M * prev.p);
        s.cs_p.lift(flow_raw_, rhs);
        return flow_op_.solve(rhs);
    }

    /// Step 2: mechanics with the freshly computed pressure.
    Vec mechanics_step(const Vec& p_i, const Vec& f_n) const
    {
        const DiscreteBiotSystem& s = *s_;
        Vec rhs = f_n - (s.G * p_i);
        s.cs_u.lift(s.A, rhs);
        return mech_op_.solve(rhs);
    }

    /// Runs the coupling iteration for the step ending at prev.t + tau.
    /// When reference_p is supplied, the report records the composite error
    /// ||e_p||^2 + (|1-g1|/(g1-g2)) ||e_p||_Z^2 per iteration.
    std::pair<SolutionState, IterationReport> solve_step(const SolutionState& prev,
                                                         const Vec* reference_p = nullptr) const
    {
        const DiscreteBiotSystem& s = *s_;
        const double t_n = prev.t + s.tau;
        auto [f, g] = s.loads_at(t_n);

        Vec b(s.n_u + s.n_p);
        b.head(s.n_u) = f;
        b.tail(s.n_p) = s.tau * g + s.flow_history(prev);
        s.cs_mono.lift(s.mono_raw, b);

        IterationReport report;
        report.warnings = warnings_;

        const double zweight = composite_weight();
        Vec u = prev.u, p = prev.p;
        double min_increment = std::numeric_limits<double>::infinity();
        for (int it = 1; it <= cfg_.max_iterations; ++it) {
            Vec p_new = flow_step(prev, u, p, g);
            Vec u_new = mechanics_step(p_new, f);
            const double dp = (p_new - p).norm();
            const double du = (u_new - u).norm();
            p = std::move(p_new);
            u = std::move(u_new);

            Vec x(s.n_u + s.n_p);
            x.head(s.n_u) = u;
            x.tail(s.n_p) = p;
            const double residual = (b - s.mono * x).norm();

            IterationRecord rec;
            rec.iteration = it;
            rec.residual_norm = residual;
            rec.dp_norm = dp;
            rec.du_norm = du;
            if (reference_p) {
                Vec e = p - *reference_p;
                rec.composite_error = e.squaredNorm() + zweight * e.dot(s.Z * e);
            }
            report.history.push_back(rec);
            report.iterations = it;

            const double increment = dp + du;
            if (!std::isfinite(increment) || !std::isfinite(residual)) {
                report.diverged = true;
                break;
            }
            min_increment = std::min(min_increment, increment);
            const double quantity = cfg_.stopping == StoppingRule::Residual ? residual
                                                                            : increment;
            if (quantity <= cfg_.tol) {
                report.converged = true;
                break;
            }
            if (increment > 1e6 * min_increment && min_increment > 0.0) {
                report.diverged = true;
                break;
            }
        }
        if (!report.converged)
            report.diverged = true; // exhausted budget counts as divergence
        SolutionState out;
        out.u = std::move(u);
        out.p = std::move(p);
        out.t = t_n;
        return {out, report};
    }

    double composite_weight() const
    {
        const double g1 = cfg_.g1(), g2 = cfg_.g2();
        return std::abs(1.0 - g1) / (g1 - g2);
    }

private:
    const DiscreteBiotSystem* s_;
    SolverConfig cfg_;
    SparseMatrix flow_raw_;
    InnerOperator flow_op_;
    InnerOperator mech_op_;
    std::vector<std::string> warnings_;
};

struct TransientResult {
    std::vector<SolutionState> states;
    std::vector<IterationReport> reports; // one per step when coupled
};

/// Marches the problem over its uniform time grid with the requested solver.
inline TransientResult run_transient(const ProblemDefinition& problem, Scheme scheme,
                                     SolverChoice choice, const SolverConfig& config,
                                     StorageRegime regime = StorageRegime::SmallStorage)
{
    DiscreteBiotSystem system = build_stabilized_system(problem, scheme, problem.tau(),
                                                        config.L, regime);
    TransientResult result;
    SolutionState state = system.initial_state();
    std::unique_ptr<CoupledSolver> coupled;
    if (choice == SolverChoice::Coupled)
        coupled = std::make_unique<CoupledSolver>(system, config);
    for (int n = 1; n <= problem.n_steps; ++n) {
        try {
            if (choice == SolverChoice::Monolithic) {
                state = monolithic_step(system, state);
            } else {
                auto [next, report] = coupled->solve_step(state);
                state = std::move(next);
                result.reports.push_back(std::move(report));
            }
        } catch (const SolverError& err) {
            throw SolverError("time step " + std::to_string(n) + ": " + err.what());
        }
        result.states.push_back(state);
    }
    return result;
}

} // namespace biotstab
