#ifndef BALANS_CORE_HPP
#define BALANS_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

/**
 * @file core.hpp
 *
 * @brief Shared data types for profiles, labels, sparse affinity rows and hyperparameters.
 */

namespace balans {

using Index = std::size_t;

/**
 * Dense row-major matrix used for profiles and small dense affinity blocks.
 */
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vector = Eigen::VectorXd;

/**
 * @brief Error categories, which map onto the CLI exit codes.
 */
enum class ErrorKind {
    invalid_input, ///< bad user input; exit code 2
    numeric        ///< numerical failure during a run; exit code 3
};

/**
 * @brief Base exception for all library errors.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const { return kind_ == ErrorKind::invalid_input ? 2 : 3; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(ErrorKind::invalid_input, msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

/**
 * @brief Non-finite profile entry; carries the offending position.
 */
class NonFiniteError : public InputError {
public:
    NonFiniteError(Index row, Index col)
        : InputError("non-finite value at (" + std::to_string(row) + "," + std::to_string(col) + ")"), row_(row), col_(col) {}

    Index row() const { return row_; }
    Index col() const { return col_; }

private:
    Index row_, col_;
};

/**
 * @brief n-by-d matrix of finite feature profiles, one row per sample.
 *
 * Immutable once constructed; the constructor checks that every entry is finite and that both dimensions are positive.
 */
class ProfileMatrix {
public:
    ProfileMatrix() = default;

    explicit ProfileMatrix(Matrix data) : data_(std::move(data)) {
        if (data_.rows() < 1 || data_.cols() < 1) {
            throw InputError("profile matrix must have at least one row and one column");
        }
        for (Eigen::Index i = 0; i < data_.rows(); ++i) {
            for (Eigen::Index j = 0; j < data_.cols(); ++j) {
                if (!std::isfinite(data_(i, j))) {
                    throw NonFiniteError(static_cast<Index>(i), static_cast<Index>(j));
                }
            }
        }
    }

    Index rows() const { return static_cast<Index>(data_.rows()); }
    Index cols() const { return static_cast<Index>(data_.cols()); }

    const Matrix& data() const { return data_; }

    auto row(Index i) const { return data_.row(static_cast<Eigen::Index>(i)); }

    double operator()(Index i, Index j) const {
        return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

private:
    Matrix data_;
};

/**
 * @brief Dense categorical labels with ids in `[0, count)`, each of which occurs at least once.
 *
 * The tag only distinguishes batch labels from cluster labels at the type level.
 * Externally ids are reported 1-based; internally they are 0-based.
 */
template <class Tag>
class LabelVector {
public:
    LabelVector() = default;

    /**
     * @param ids 0-based ids. The label count is taken to be `max(ids) + 1`.
     */
    explicit LabelVector(std::vector<int> ids) : ids_(std::move(ids)) {
        if (ids_.empty()) {
            throw InputError("label vector must not be empty");
        }
        int top = -1;
        for (auto id : ids_) {
            if (id < 0) {
                throw InputError("label ids must be non-negative");
            }
            top = std::max(top, id);
        }
        count_ = static_cast<std::size_t>(top) + 1;
        std::vector<char> seen(count_, 0);
        for (auto id : ids_) {
            seen[static_cast<std::size_t>(id)] = 1;
        }
        for (std::size_t b = 0; b < count_; ++b) {
            if (!seen[b]) {
                throw InputError("label id " + std::to_string(b + 1) + " has no members");
            }
        }
    }

    /**
     * Map arbitrary string labels to dense ids in first-appearance order.
     */
    static LabelVector from_strings(const std::vector<std::string>& raw, std::vector<std::string>* names = nullptr) {
        std::unordered_map<std::string, int> mapping;
        std::vector<int> ids;
        ids.reserve(raw.size());
        std::vector<std::string> order;
        for (const auto& r : raw) {
            auto it = mapping.find(r);
            if (it == mapping.end()) {
                it = mapping.emplace(r, static_cast<int>(order.size())).first;
                order.push_back(r);
            }
            ids.push_back(it->second);
        }
        if (names) {
            *names = std::move(order);
        }
        return LabelVector(std::move(ids));
    }

    std::size_t size() const { return ids_.size(); }
    std::size_t count() const { return count_; }
    int operator[](Index i) const { return ids_[i]; }
    const std::vector<int>& ids() const { return ids_; }

private:
    std::vector<int> ids_;
    std::size_t count_ = 0;
};

struct BatchTag {};
struct ClusterTag {};

using BatchLabels = LabelVector<BatchTag>;
using ClusterLabels = LabelVector<ClusterTag>;

/**
 * @brief Read-only view of one compressed sparse row.
 */
struct SparseRowView {
    std::span<const Index> cols;
    std::span<const double> vals;

    std::size_t nnz() const { return cols.size(); }

    double sum() const {
        double s = 0;
        for (auto v : vals) {
            s += v;
        }
        return s;
    }
};

/**
 * @brief Owning sparse vector of (column, value) pairs.
 */
struct SparseRow {
    std::vector<Index> cols;
    std::vector<double> vals;

    std::size_t nnz() const { return cols.size(); }

    SparseRowView view() const { return SparseRowView{cols, vals}; }

    /**
     * Sort entries by column. Duplicate columns are not merged.
     */
    void canonicalize() {
        std::vector<std::size_t> order(cols.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cols[a] < cols[b]; });
        std::vector<Index> c(order.size());
        std::vector<double> v(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            c[i] = cols[order[i]];
            v[i] = vals[order[i]];
        }
        cols = std::move(c);
        vals = std::move(v);
    }

    bool operator==(const SparseRow&) const = default;
};

/**
 * @brief The sampled rows of an n-by-n affinity matrix, stored row-compressed.
 *
 * Row `r` belongs to the global sample index `anchors()[r]`.
 * Values are not range-checked on insertion so that the same container can hold rows of a synthetic block model;
 * `check_affinity_invariants()` verifies the kernel-level guarantees.
 */
class SparseAffinityRows {
public:
    SparseAffinityRows() : row_ptr_{0} {}

    explicit SparseAffinityRows(Index n) : n_(n), row_ptr_{0} {}

    SparseAffinityRows(Index n, std::vector<Index> anchors, std::vector<std::size_t> row_ptr, std::vector<Index> cols, std::vector<double> vals)
        : n_(n), anchors_(std::move(anchors)), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {
        check_structure();
    }

    /**
     * Append a row; columns must be strictly increasing and within `[0, n)`.
     */
    void push_row(Index anchor, std::span<const Index> cols, std::span<const double> vals) {
        if (cols.size() != vals.size()) {
            throw InputError("sparse row has mismatched column and value lengths");
        }
        if (anchor >= n_) {
            throw InputError("row anchor out of range");
        }
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] >= n_ || (i && cols[i] <= cols[i - 1])) {
                throw InputError("sparse row columns must be strictly increasing and below n");
            }
        }
        anchors_.push_back(anchor);
        cols_.insert(cols_.end(), cols.begin(), cols.end());
        vals_.insert(vals_.end(), vals.begin(), vals.end());
        row_ptr_.push_back(cols_.size());
    }

    void push_row(Index anchor, const SparseRow& row) { push_row(anchor, row.cols, row.vals); }

    Index n() const { return n_; }
    std::size_t size() const { return anchors_.size(); }
    std::size_t nnz() const { return cols_.size(); }

    const std::vector<Index>& anchors() const { return anchors_; }
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<Index>& col_indices() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

    SparseRowView row(std::size_t r) const {
        auto start = row_ptr_[r];
        auto len = row_ptr_[r + 1] - start;
        return SparseRowView{std::span<const Index>(cols_).subspan(start, len), std::span<const double>(vals_).subspan(start, len)};
    }

    /**
     * Anchors distinct, stored values in (0, 1].
     */
    void check_affinity_invariants() const {
        std::vector<char> seen(n_, 0);
        for (auto a : anchors_) {
            if (seen[a]) {
                throw InputError("duplicate sampled index " + std::to_string(a));
            }
            seen[a] = 1;
        }
        for (auto v : vals_) {
            if (!(v > 0 && v <= 1)) {
                throw InputError("stored affinity outside (0, 1]");
            }
        }
    }

    Matrix to_dense() const {
        Matrix out = Matrix::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(n_));
        for (std::size_t r = 0; r < size(); ++r) {
            auto rv = row(r);
            for (std::size_t e = 0; e < rv.nnz(); ++e) {
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(rv.cols[e])) = rv.vals[e];
            }
        }
        return out;
    }

    bool operator==(const SparseAffinityRows&) const = default;

private:
    void check_structure() const {
        if (row_ptr_.size() != anchors_.size() + 1 || row_ptr_.front() != 0 || row_ptr_.back() != cols_.size() || cols_.size() != vals_.size()) {
            throw InputError("inconsistent row-compressed structure");
        }
        for (std::size_t r = 0; r < anchors_.size(); ++r) {
            if (anchors_[r] >= n_ || row_ptr_[r + 1] < row_ptr_[r]) {
                throw InputError("inconsistent row-compressed structure");
            }
            for (auto e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
                if (cols_[e] >= n_ || (e > row_ptr_[r] && cols_[e] <= cols_[e - 1])) {
                    throw InputError("sparse row columns must be strictly increasing and below n");
                }
            }
        }
    }

    Index n_ = 0;
    std::vector<Index> anchors_;
    std::vector<std::size_t> row_ptr_;
    std::vector<Index> cols_;
    std::vector<double> vals_;
};

/**
 * @brief Which coverage vector decides whether a sampled row contributed anything new.
 *
 * See `CoverageState::update()`.
 */
enum class NoveltyReference {
    cumulative, ///< a column counts as new if no sampled row has touched it yet
    block       ///< a column counts as new if no row of the current block has touched it yet
};

/**
 * @brief Hyperparameters of a correction run.
 */
struct HyperParams {
    /** Neighbor rank used for the batch-specific local scale. */
    int k = 5;

    /** Consecutive sampling steps without new coverage before stopping. */
    int tau = 50;

    /** Number of sampling steps between resets of the block coverage vector. */
    int block_len = 50;

    std::optional<int> pca_dims;

    std::uint64_t seed = 0;

    NoveltyReference novelty = NoveltyReference::cumulative;
};

/**
 * @brief Profiles, batches and hyperparameters that passed `validate_inputs()`.
 */
struct ValidatedInputs {
    const ProfileMatrix& profiles;
    const BatchLabels& batches;
    const HyperParams& params;
};

inline void validate_params(const HyperParams& params, std::optional<Index> dims = std::nullopt) {
    if (params.k < 1) {
        throw InputError("k must be at least 1");
    }
    if (params.tau < 1) {
        throw InputError("tau must be at least 1");
    }
    if (params.block_len < 1) {
        throw InputError("block length must be at least 1");
    }
    if (params.pca_dims) {
        if (*params.pca_dims < 1 || (dims && static_cast<Index>(*params.pca_dims) > *dims)) {
            throw InputError("PCA dimension must lie in [1, d]");
        }
    }
}

inline ValidatedInputs validate_inputs(const ProfileMatrix& profiles, const BatchLabels& batches, const HyperParams& params) {
    if (batches.size() != profiles.rows()) {
        throw InputError("batch label count " + std::to_string(batches.size()) + " does not match the " + std::to_string(profiles.rows()) + " profile rows");
    }
    validate_params(params, profiles.cols());
    return ValidatedInputs{profiles, batches, params};
}

}

#endif
