#pragma once

#include "biotstab/sparse.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>

namespace biotstab {

/// Diagonal-preconditioned conjugate gradients for symmetric positive
/// definite systems. Returns x with ||m x - b|| <= tol * ||b||; b = 0 gives
/// x = 0. Throws NonConvergence (carrying the achieved relative residual)
/// when the budget is exhausted, and SolverError on loss of definiteness.
inline Vec solve_spd(const SparseMatrix& m, const Vec& b, double tol = 1e-12, int max_it = 10000)
{
    if (m.rows() != m.cols())
        throw InvalidArgument("solve_spd: matrix not square");
    if (b.size() != m.rows())
        throw InvalidArgument("solve_spd: rhs size mismatch");
    if (!(tol > 0.0))
        throw InvalidArgument("solve_spd: tolerance must be positive");

    const double bnorm = b.norm();
    if (bnorm == 0.0)
        return Vec::Zero(m.rows());

    Vec dinv(m.rows());
    {
        const auto& s = m.eigen();
        for (int r = 0; r < s.rows(); ++r) {
            double d = s.coeff(r, r);
            if (!(d > 0.0))
                throw SolverError("solve_spd: nonpositive diagonal entry at row " +
                                  std::to_string(r));
            dinv[r] = 1.0 / d;
        }
    }

    Vec x = Vec::Zero(m.rows());
    Vec r = b;
    Vec z = dinv.asDiagonal() * r;
    Vec p = z;
    double rz = r.dot(z);
    double rel = r.norm() / bnorm;
    for (int it = 0; it < max_it && rel > tol; ++it) {
        Vec ap = m * p;
        double pap = p.dot(ap);
        if (!(pap > 0.0))
            throw SolverError("solve_spd: matrix not positive definite (p'Ap <= 0)");
        double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        rel = r.norm() / bnorm;
        if (rel <= tol)
            break;
        z = dinv.asDiagonal() * r;
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (rel > tol)
        throw NonConvergence("solve_spd: no convergence within budget", rel, max_it);
    return x;
}

/// Direct sparse LU solve for general square nonsingular systems.
inline Vec solve_general(const SparseMatrix& m, const Vec& b)
{
    if (m.rows() != m.cols())
        throw InvalidArgument("solve_general: matrix not square");
    if (b.size() != m.rows())
        throw InvalidArgument("solve_general: rhs size mismatch");
    Eigen::SparseMatrix<double> a = m.eigen();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw SolverError("solve_general: singular matrix (" + lu.lastErrorMessage() + ")");
    return lu.solve(b);
}

/// Reusable LU factorization for repeated solves against one matrix.
class LuOperator {
public:
    LuOperator() = default;
    explicit LuOperator(const SparseMatrix& m) { factorize(m); }

    void factorize(const SparseMatrix& m)
    {
        if (m.rows() != m.cols())
            throw InvalidArgument("LuOperator: matrix not square");
        a_ = m.eigen();
        lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu_->analyzePattern(a_);
        lu_->factorize(a_);
        if (lu_->info() != Eigen::Success)
            throw SolverError("LuOperator: singular matrix (" + lu_->lastErrorMessage() + ")");
    }

    Vec solve(const Vec& b) const
    {
        if (!lu_)
            throw SolverError("LuOperator: not factorized");
        return lu_->solve(b);
    }

private:
    Eigen::SparseMatrix<double> a_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// Reusable LDL^T factorization for SPD operators (flow and mechanics
/// blocks). Definiteness is checked via the factor's diagonal so an
/// indefinite operator is reported before any solve.
class SpdOperator {
public:
    SpdOperator() = default;
    explicit SpdOperator(const SparseMatrix& m) { factorize(m); }

    void factorize(const SparseMatrix& m)
    {
        if (m.rows() != m.cols())
            throw InvalidArgument("SpdOperator: matrix not square");
        a_ = m.eigen();
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(a_);
        if (ldlt_->info() != Eigen::Success)
            throw SolverError("SpdOperator: factorization failed");
        const Vec d = ldlt_->vectorD();
        for (int i = 0; i < d.size(); ++i)
            if (!(d[i] > 0.0))
                throw SolverError("SpdOperator: operator is not positive definite (pivot " +
                                  std::to_string(i) + " = " + std::to_string(d[i]) + ")");
    }

    Vec solve(const Vec& b) const
    {
        if (!ldlt_)
            throw SolverError("SpdOperator: not factorized");
        return ldlt_->solve(b);
    }

private:
    Eigen::SparseMatrix<double> a_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

enum class InnerSolver { Direct, ConjugateGradient };

/// Uniform interface over the cached-direct and CG inner solvers.
class InnerOperator {
public:
    InnerOperator() = default;
    InnerOperator(const SparseMatrix& m, InnerSolver kind, double cg_tol = 1e-12)
        : kind_(kind), cg_tol_(cg_tol)
    {
        if (kind_ == InnerSolver::Direct)
            direct_ = std::make_shared<SpdOperator>(m);
        else
            matrix_ = std::make_shared<SparseMatrix>(m);
    }

    Vec solve(const Vec& b) const
    {
        if (kind_ == InnerSolver::Direct)
            return direct_->solve(b);
        return solve_spd(*matrix_, b, cg_tol_, 20000);
    }

private:
    InnerSolver kind_ = InnerSolver::Direct;
    double cg_tol_ = 1e-12;
    std::shared_ptr<SpdOperator> direct_;
    std::shared_ptr<SparseMatrix> matrix_;
};

} // namespace biotstab
