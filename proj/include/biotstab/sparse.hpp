#pragma once

#include "biotstab/core.hpp"

#include <Eigen/Sparse>

#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace biotstab {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed-sparse-row matrix. Thin wrapper over Eigen's row-major sparse
/// storage that enforces canonical form (sorted column indices, duplicates
/// summed at assembly) and carries the contracts the solvers rely on.
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    SparseMatrix() = default;
    explicit SparseMatrix(Storage m) : m_(std::move(m)) { m_.makeCompressed(); }

    static SparseMatrix from_triplets(const std::vector<Triplet>& triplets, int rows, int cols)
    {
        if (rows < 0 || cols < 0)
            throw InvalidArgument("from_triplets: negative shape");
        for (const auto& t : triplets)
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
                throw InvalidArgument("from_triplets: index out of range at (" +
                                      std::to_string(t.row) + "," + std::to_string(t.col) + ")");
        std::vector<Eigen::Triplet<double>> ts;
        ts.reserve(triplets.size());
        for (const auto& t : triplets)
            ts.emplace_back(t.row, t.col, t.value);
        Storage m(rows, cols);
        m.setFromTriplets(ts.begin(), ts.end());
        m.makeCompressed();
        return SparseMatrix(std::move(m));
    }

    int rows() const { return static_cast<int>(m_.rows()); }
    int cols() const { return static_cast<int>(m_.cols()); }
    long nnz() const { return m_.nonZeros(); }

    std::span<const int> row_offsets() const
    {
        return {m_.outerIndexPtr(), static_cast<std::size_t>(m_.rows() + 1)};
    }
    std::span<const int> col_indices() const
    {
        return {m_.innerIndexPtr(), static_cast<std::size_t>(m_.nonZeros())};
    }
    std::span<const double> values() const
    {
        return {m_.valuePtr(), static_cast<std::size_t>(m_.nonZeros())};
    }

    const Storage& eigen() const { return m_; }

    Vec operator*(const Vec& x) const
    {
        if (x.size() != m_.cols())
            throw InvalidArgument("spmv: size mismatch");
        return m_ * x;
    }

    SparseMatrix transpose() const { return SparseMatrix(Storage(m_.transpose())); }

    friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw InvalidArgument("sparse add: shape mismatch");
        return SparseMatrix(Storage(a.m_ + b.m_));
    }
    friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw InvalidArgument("sparse sub: shape mismatch");
        return SparseMatrix(Storage(a.m_ - b.m_));
    }
    friend SparseMatrix operator*(double s, const SparseMatrix& a)
    {
        return SparseMatrix(Storage(s * a.m_));
    }

    DenseMat to_dense() const
    {
        if (static_cast<long>(rows()) * cols() > 10'000'000L)
            throw InvalidArgument("to_dense: matrix too large for dense storage");
        return DenseMat(m_);
    }

    double max_abs() const
    {
        double m = 0.0;
        for (long k = 0; k < m_.nonZeros(); ++k)
            m = std::max(m, std::abs(m_.valuePtr()[k]));
        return m;
    }

    std::vector<Triplet> to_triplets() const
    {
        std::vector<Triplet> out;
        out.reserve(static_cast<std::size_t>(m_.nonZeros()));
        for (int r = 0; r < m_.outerSize(); ++r)
            for (Storage::InnerIterator it(m_, r); it; ++it)
                out.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
        return out;
    }

    /// MatrixMarket coordinate text format, for external verification.
    void write_matrix_market(const std::string& path) const
    {
        std::ofstream os(path);
        if (!os)
            throw InvalidArgument("write_matrix_market: cannot open " + path);
        os << "%%MatrixMarket matrix coordinate real general\n";
        os << rows() << " " << cols() << " " << nnz() << "\n";
        char buf[64];
        for (int r = 0; r < m_.outerSize(); ++r)
            for (Storage::InnerIterator it(m_, r); it; ++it) {
                std::snprintf(buf, sizeof(buf), "%d %d %.17g\n",
                              static_cast<int>(it.row()) + 1, static_cast<int>(it.col()) + 1,
                              it.value());
                os << buf;
            }
    }

private:
    Storage m_;
};

/// Rows in `rows` (and columns in `cols`) are zeroed; when `unit_diagonal`
/// the diagonal of each constrained row is set to one. Symmetric elimination
/// for square blocks, one-sided for rectangular coupling blocks.
inline SparseMatrix eliminate(const SparseMatrix& m, const std::vector<int>& rows,
                              const std::vector<int>& cols, bool unit_diagonal)
{
    std::vector<char> crow(m.rows(), 0), ccol(m.cols(), 0);
    for (int r : rows)
        crow[r] = 1;
    for (int c : cols)
        ccol[c] = 1;
    std::vector<Triplet> ts;
    ts.reserve(static_cast<std::size_t>(m.nnz()) + rows.size());
    for (const auto& t : m.to_triplets())
        if (!crow[t.row] && !ccol[t.col])
            ts.push_back(t);
    if (unit_diagonal)
        for (int r : rows)
            ts.push_back({r, r, 1.0});
    return SparseMatrix::from_triplets(ts, m.rows(), m.cols());
}

/// 2x2 block arrangement; off-diagonal blocks couple the two fields.
struct BlockOperator {
    const SparseMatrix* a00 = nullptr;
    const SparseMatrix* a01 = nullptr;
    const SparseMatrix* a10 = nullptr;
    const SparseMatrix* a11 = nullptr;

    void check() const
    {
        if (!a00 || !a01 || !a10 || !a11)
            throw InvalidArgument("BlockOperator: missing block");
        if (a00->rows() != a01->rows() || a10->rows() != a11->rows() ||
            a00->cols() != a10->cols() || a01->cols() != a11->cols())
            throw InvalidArgument("BlockOperator: block shapes do not conform");
    }

    int rows() const { return a00->rows() + a10->rows(); }
    int cols() const { return a00->cols() + a01->cols(); }

    Vec apply(const Vec& x) const
    {
        check();
        const int n0 = a00->cols();
        const int n1 = a01->cols();
        if (x.size() != n0 + n1)
            throw InvalidArgument("BlockOperator::apply: size mismatch");
        Vec x0 = x.head(n0), x1 = x.tail(n1);
        Vec y(rows());
        y.head(a00->rows()) = (*a00) * x0 + (*a01) * x1;
        y.tail(a10->rows()) = (*a10) * x0 + (*a11) * x1;
        return y;
    }

    SparseMatrix concatenate() const
    {
        check();
        const int r0 = a00->rows();
        const int c0 = a00->cols();
        std::vector<Triplet> ts;
        ts.reserve(static_cast<std::size_t>(a00->nnz() + a01->nnz() + a10->nnz() + a11->nnz()));
        auto push = [&](const SparseMatrix& m, int ro, int co) {
            for (const auto& t : m.to_triplets())
                ts.push_back({t.row + ro, t.col + co, t.value});
        };
        push(*a00, 0, 0);
        push(*a01, 0, c0);
        push(*a10, r0, 0);
        push(*a11, r0, c0);
        return SparseMatrix::from_triplets(ts, rows(), cols());
    }
};

} // namespace biotstab
