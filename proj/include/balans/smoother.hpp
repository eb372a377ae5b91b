#ifndef BALANS_SMOOTHER_HPP
#define BALANS_SMOOTHER_HPP

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "core.hpp"
#include "parallel.hpp"

/**
 * @file smoother.hpp
 *
 * @brief Corrected profiles from sampled affinity rows.
 *
 * The default path is the pseudoinverse-free smoother: rows of `A_S` are scaled to unit sum to give `A_r`,
 * and the profiles are mapped through `diag(1 / c) A_r^T A_r X` with `c = A_r^T 1`, evaluated as two sparse-dense products.
 * The exact Nystrom estimator `A_S^T pinv(A_SS) A_S` is available for small numbers of sampled rows.
 */

namespace balans {

/**
 * @brief Row-stochastic version of the sampled rows plus the column weights used for renormalization.
 */
struct SmoothingOperator {
    SparseAffinityRows normalized_rows;

    /** `column_weights[j]` is the total normalized affinity received by column `j`; zero for untouched columns. */
    std::vector<double> column_weights;

    Index n() const { return normalized_rows.n(); }

    std::size_t uncovered() const {
        std::size_t count = 0;
        for (auto c : column_weights) {
            count += (c == 0);
        }
        return count;
    }
};

inline SmoothingOperator row_normalize(const SparseAffinityRows& rows) {
    std::vector<double> vals(rows.values());
    std::vector<double> weights(rows.n(), 0.0);
    const auto& ptr = rows.row_ptr();
    const auto& cols = rows.col_indices();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double total = 0;
        for (auto e = ptr[r]; e < ptr[r + 1]; ++e) {
            if (vals[e] < 0) {
                throw NumericError("negative affinity in row " + std::to_string(r));
            }
            total += vals[e];
        }
        if (!(total > 0)) {
            throw NumericError("sampled row " + std::to_string(r) + " (index " + std::to_string(rows.anchors()[r]) + ") has zero sum");
        }
        for (auto e = ptr[r]; e < ptr[r + 1]; ++e) {
            vals[e] /= total;
            weights[cols[e]] += vals[e];
        }
    }
    return SmoothingOperator{SparseAffinityRows(rows.n(), rows.anchors(), ptr, cols, std::move(vals)), std::move(weights)};
}

/**
 * @brief Smoothed profiles plus the number of samples that received no affinity.
 */
struct SmoothResult {
    Matrix profiles;
    std::size_t uncovered = 0;
};

/**
 * Apply `diag(1 / c) A_r^T (A_r X)` to a dense matrix with n rows.
 * Rows whose column weight is zero are copied from the input unchanged.
 */
inline SmoothResult smooth(const SmoothingOperator& op, const Matrix& X, int threads = 1) {
    if (static_cast<Index>(X.rows()) != op.n()) {
        throw InputError("operator has " + std::to_string(op.n()) + " columns but the profiles have " + std::to_string(X.rows()) + " rows");
    }
    const auto& rows = op.normalized_rows;
    const auto& ptr = rows.row_ptr();
    const auto& cols = rows.col_indices();
    const auto& vals = rows.values();
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto d = X.cols();

    Matrix Y = Matrix::Zero(m, d);
    parallel_for(rows.size(), threads, [&](std::size_t start, std::size_t end) {
        for (auto r = start; r < end; ++r) {
            for (auto e = ptr[r]; e < ptr[r + 1]; ++e) {
                Y.row(static_cast<Eigen::Index>(r)) += vals[e] * X.row(static_cast<Eigen::Index>(cols[e]));
            }
        }
    });

    // Scatter A_r^T Y sequentially in row order so the summation order never depends on the thread count.
    Matrix Z = Matrix::Zero(X.rows(), d);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        for (auto e = ptr[ur]; e < ptr[ur + 1]; ++e) {
            Z.row(static_cast<Eigen::Index>(cols[e])) += vals[e] * Y.row(r);
        }
    }

    SmoothResult out;
    for (Eigen::Index j = 0; j < X.rows(); ++j) {
        const double c = op.column_weights[static_cast<std::size_t>(j)];
        if (c > 0) {
            Z.row(j) /= c;
        } else {
            Z.row(j) = X.row(j);
            ++out.uncovered;
        }
    }
    out.profiles = std::move(Z);
    return out;
}

inline SmoothResult smooth(const SmoothingOperator& op, const ProfileMatrix& profiles, int threads = 1) {
    return smooth(op, profiles.data(), threads);
}

/**
 * Moore-Penrose pseudoinverse via SVD; singular values below `rel_tol * sigma_max` are treated as zero.
 */
inline Matrix pseudoinverse(const Matrix& M, double rel_tol = 1e-10) {
    if (M.size() == 0) {
        return Matrix(M.cols(), M.rows());
    }
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = rel_tol * (s.size() ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/**
 * @brief Guard for the dense Nystrom path.
 */
struct NystromOptions {
    std::size_t max_rows = 2000;
    double pinv_tol = 1e-10;
};

/**
 * Square block `A_SS` of the sampled rows, read from the stored (possibly sparsified) entries.
 */
inline Matrix sampled_block(const SparseAffinityRows& rows) {
    const auto m = rows.size();
    std::vector<long> position(rows.n(), -1);
    for (std::size_t r = 0; r < m; ++r) {
        position[rows.anchors()[r]] = static_cast<long>(r);
    }
    Matrix block = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
        auto rv = rows.row(r);
        for (std::size_t e = 0; e < rv.nnz(); ++e) {
            const auto p = position[rv.cols[e]];
            if (p >= 0) {
                block(static_cast<Eigen::Index>(r), p) = rv.vals[e];
            }
        }
    }
    return block;
}

namespace detail {

inline void check_nystrom_cap(const SparseAffinityRows& rows, const NystromOptions& opt) {
    if (rows.size() > opt.max_rows) {
        throw InputError(std::to_string(rows.size()) + " sampled rows exceed the dense Nystrom cap of " + std::to_string(opt.max_rows) + "; use smooth() instead");
    }
    if (rows.size() == 0) {
        throw InputError("Nystrom reconstruction needs at least one sampled row");
    }
}

}

/**
 * Dense n-by-n Nystrom reconstruction `A_S^T pinv(A_SS) A_S`.
 * The result is symmetric whenever `A_SS` is.
 */
inline Matrix nystrom_exact(const SparseAffinityRows& rows, const NystromOptions& opt = {}) {
    detail::check_nystrom_cap(rows, opt);
    const Matrix AS = rows.to_dense();
    const Matrix P = pseudoinverse(sampled_block(rows), opt.pinv_tol);
    return AS.transpose() * (P * AS);
}

/**
 * Nystrom reconstruction applied to profiles, `A_S^T pinv(A_SS) (A_S X)`, without forming the n-by-n matrix.
 */
inline Matrix nystrom_apply(const SparseAffinityRows& rows, const Matrix& X, const NystromOptions& opt = {}) {
    detail::check_nystrom_cap(rows, opt);
    if (static_cast<Index>(X.rows()) != rows.n()) {
        throw InputError("profile row count does not match the affinity column count");
    }
    const Matrix AS = rows.to_dense();
    const Matrix P = pseudoinverse(sampled_block(rows), opt.pinv_tol);
    return AS.transpose() * (P * (AS * X));
}

}

#endif
