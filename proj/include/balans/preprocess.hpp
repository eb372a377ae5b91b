#ifndef BALANS_PREPROCESS_HPP
#define BALANS_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"

/**
 * @file preprocess.hpp
 *
 * @brief Profile preprocessing: variation filter, control-based MAD normalization,
 * rank-based inverse normal transform, correlation-based feature selection and optional PCA.
 *
 * When all are enabled they run in that order.
 */

namespace balans {

/**
 * @brief Control samples and the grouping (plate or batch) that normalization statistics are computed over.
 */
class ControlMask {
public:
    ControlMask(std::vector<char> is_control, std::vector<int> group) : is_control_(std::move(is_control)), group_(std::move(group)) {
        if (is_control_.size() != group_.size() || group_.empty()) {
            throw InputError("control mask and grouping must have the same non-zero length");
        }
        int top = -1;
        for (auto g : group_) {
            if (g < 0) {
                throw InputError("group ids must be non-negative");
            }
            top = std::max(top, g);
        }
        ngroups_ = static_cast<std::size_t>(top) + 1;
        std::vector<std::size_t> members(ngroups_, 0), controls(ngroups_, 0);
        for (std::size_t i = 0; i < group_.size(); ++i) {
            ++members[static_cast<std::size_t>(group_[i])];
            controls[static_cast<std::size_t>(group_[i])] += (is_control_[i] != 0);
        }
        for (std::size_t g = 0; g < ngroups_; ++g) {
            if (members[g] && controls[g] < 2) {
                throw InputError("group " + std::to_string(g + 1) + " has fewer than two control samples");
            }
        }
    }

    /** Every sample is a control; groups follow the batches. */
    static ControlMask all_controls(const BatchLabels& batches) {
        return ControlMask(std::vector<char>(batches.size(), 1), batches.ids());
    }

    std::size_t size() const { return group_.size(); }
    std::size_t groups() const { return ngroups_; }
    bool is_control(Index i) const { return is_control_[i] != 0; }
    int group(Index i) const { return group_[i]; }

    /** Control sample indices per group. */
    std::vector<std::vector<Index>> controls_by_group() const {
        std::vector<std::vector<Index>> out(ngroups_);
        for (Index i = 0; i < group_.size(); ++i) {
            if (is_control_[i]) {
                out[static_cast<std::size_t>(group_[i])].push_back(i);
            }
        }
        return out;
    }

private:
    std::vector<char> is_control_;
    std::vector<int> group_;
    std::size_t ngroups_ = 0;
};

/**
 * Median of a non-empty sample; even lengths average the two middle values.
 */
inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw InputError("median of an empty sample");
    }
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), mid);
    return lower + (upper - lower) / 2;
}

/**
 * @brief Median and unscaled median absolute deviation.
 */
struct RobustCenter {
    double median = 0;
    double mad = 0;
};

inline RobustCenter robust_center(const std::vector<double>& values) {
    RobustCenter out;
    out.median = median(values);
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        dev[i] = std::abs(values[i] - out.median);
    }
    out.mad = median(std::move(dev));
    return out;
}

namespace detail {

inline std::vector<double> gather(const Matrix& X, const std::vector<Index>& rows, Eigen::Index col) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        out.push_back(X(static_cast<Eigen::Index>(r), col));
    }
    return out;
}

}

/**
 * Features whose control coefficient of variation `MAD / |median|` reaches `threshold` in every group.
 * A zero MAD gives a zero coefficient; a zero median with positive MAD gives an infinite one.
 */
inline std::vector<Index> variation_filter(const ProfileMatrix& profiles, const ControlMask& controls, double threshold = 1e-3) {
    if (controls.size() != profiles.rows()) {
        throw InputError("control mask length does not match the profiles");
    }
    const auto groups = controls.controls_by_group();
    std::vector<Index> kept;
    for (Index f = 0; f < profiles.cols(); ++f) {
        bool keep = true;
        for (const auto& members : groups) {
            if (members.empty()) {
                continue;
            }
            const auto rc = robust_center(detail::gather(profiles.data(), members, static_cast<Eigen::Index>(f)));
            double cvar = 0;
            if (rc.mad > 0) {
                cvar = rc.median == 0 ? INFINITY : rc.mad / std::abs(rc.median);
            }
            if (cvar < threshold) {
                keep = false;
                break;
            }
        }
        if (keep) {
            kept.push_back(f);
        }
    }
    return kept;
}

/**
 * Shift each value by its group's control median and scale by the group's control MAD.
 *
 * @throws NumericError naming the feature and group if some control MAD is zero.
 */
inline Matrix mad_normalize(const Matrix& X, const ControlMask& controls) {
    if (controls.size() != static_cast<Index>(X.rows())) {
        throw InputError("control mask length does not match the profiles");
    }
    const auto groups = controls.controls_by_group();
    std::vector<RobustCenter> stats(groups.size());
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) {
                continue;
            }
            stats[g] = robust_center(detail::gather(X, groups[g], f));
            if (!(stats[g].mad > 0)) {
                throw NumericError("zero control MAD for feature " + std::to_string(f) + " in group " + std::to_string(g + 1));
            }
        }
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const auto& s = stats[static_cast<std::size_t>(controls.group(static_cast<Index>(i)))];
            out(i, f) = (X(i, f) - s.median) / s.mad;
        }
    }
    return out;
}

/**
 * Inverse of the standard normal distribution function.
 * Acklam's rational approximation (relative error below 1.2e-9) followed by one Halley step against `erfc`,
 * which brings the error to the level of double rounding over (1e-10, 1 - 1e-10).
 * The upper half is evaluated by symmetry, since `1 - p` is exact there and the lower tail is where `erfc` is accurate.
 */
inline double normal_quantile(double p) {
    if (!(p > 0 && p < 1)) {
        if (p == 0) {
            return -INFINITY;
        }
        if (p == 1) {
            return INFINITY;
        }
        throw InputError("normal quantile needs p in (0, 1)");
    }
    if (p > 0.5) {
        return -normal_quantile(1 - p);
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02, 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02, 6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00, -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double low = 0.02425;

    double x;
    if (p < low) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }

    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
    return x - u / (1 + x * u / 2);
}

/** Offset of the rank-based inverse normal transform. */
inline constexpr double rank_int_offset = 3.0 / 8.0;

/**
 * Average ranks (1-based), ties sharing the mean of their positions.
 */
inline std::vector<double> average_ranks(std::span<const double> values) {
    const auto n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) {
            ++j;
        }
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
        for (auto k = i; k < j; ++k) {
            ranks[order[k]] = r;
        }
        i = j;
    }
    return ranks;
}

/**
 * Rank-based inverse normal transform `Phi^-1((r - c) / (N - 2c + 1))` with `c = 3/8` and average ranks for ties.
 */
inline std::vector<double> rank_int(std::span<const double> column) {
    const auto n = column.size();
    if (n < 2) {
        throw InputError("rank-based inverse normal transform needs at least two values");
    }
    auto ranks = average_ranks(column);
    const double denom = static_cast<double>(n) - 2 * rank_int_offset + 1;
    for (auto& r : ranks) {
        r = normal_quantile((r - rank_int_offset) / denom);
    }
    return ranks;
}

inline Matrix rank_int(const Matrix& X) {
    Matrix out(X.rows(), X.cols());
    std::vector<double> col(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            col[static_cast<std::size_t>(i)] = X(i, f);
        }
        const auto t = rank_int(col);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            out(i, f) = t[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

/**
 * Absolute Pearson correlations between all feature pairs. Constant features correlate 0 with everything.
 */
inline Matrix abs_correlation(const Matrix& X) {
    const auto d = X.cols();
    Matrix centered = X.rowwise() - X.colwise().mean();
    Vector norms = centered.colwise().norm();
    Matrix out = Matrix::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a + 1; b < d; ++b) {
            double r = 0;
            if (norms(a) > 0 && norms(b) > 0) {
                r = centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b));
            }
            out(a, b) = out(b, a) = std::min(1.0, std::abs(r));
        }
    }
    return out;
}

/**
 * Greedy removal of redundant features.
 * While some retained pair has `|r| > threshold`, drop the feature among those in such pairs with the largest summed `|r|`
 * to the other retained features; on ties the higher index is dropped.
 *
 * @return Retained feature indices in increasing order.
 */
inline std::vector<Index> correlation_select(const Matrix& X, double threshold = 0.9) {
    if (!(threshold > 0 && threshold < 1)) {
        throw InputError("correlation threshold must lie in (0, 1)");
    }
    const auto d = static_cast<Index>(X.cols());
    const Matrix corr = abs_correlation(X);
    std::vector<char> alive(d, 1);
    while (true) {
        std::vector<char> flagged(d, 0);
        bool any = false;
        for (Index a = 0; a < d; ++a) {
            for (Index b = a + 1; b < d; ++b) {
                if (alive[a] && alive[b] && corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > threshold) {
                    flagged[a] = flagged[b] = 1;
                    any = true;
                }
            }
        }
        if (!any) {
            break;
        }
        Index worst = d;
        double worst_total = -1;
        for (Index a = 0; a < d; ++a) {
            if (!flagged[a]) {
                continue;
            }
            double total = 0;
            for (Index b = 0; b < d; ++b) {
                if (alive[b] && b != a) {
                    total += corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
            if (total >= worst_total) {
                worst_total = total;
                worst = a;
            }
        }
        alive[worst] = 0;
    }
    std::vector<Index> kept;
    for (Index a = 0; a < d; ++a) {
        if (alive[a]) {
            kept.push_back(a);
        }
    }
    return kept;
}

/**
 * @brief Principal component projection.
 */
struct PcaResult {
    Matrix scores;

    /** Variances along the retained axes, decreasing. */
    Vector explained_variance;

    /** Columns are the unit-norm principal axes. */
    Matrix components;
};

/**
 * Project mean-centered data onto the leading `dims` eigenvectors of its covariance.
 * Each axis is signed so that its largest-magnitude loading is positive.
 */
inline PcaResult pca_project(const Matrix& X, int dims) {
    if (dims < 1 || dims > X.cols()) {
        throw InputError("PCA dimension must lie in [1, d]");
    }
    const Matrix centered = X.rowwise() - X.colwise().mean();
    const double denom = X.rows() > 1 ? static_cast<double>(X.rows() - 1) : 1.0;
    const Matrix cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw NumericError("covariance eigendecomposition failed");
    }

    const auto d = X.cols();
    PcaResult out;
    out.components.resize(d, dims);
    out.explained_variance.resize(dims);
    for (int k = 0; k < dims; ++k) {
        Vector axis = eig.eigenvectors().col(d - 1 - k);
        Eigen::Index big;
        axis.cwiseAbs().maxCoeff(&big);
        if (axis(big) < 0) {
            axis = -axis;
        }
        out.components.col(k) = axis;
        out.explained_variance(k) = std::max(0.0, eig.eigenvalues()(d - 1 - k));
    }
    out.scores = centered * out.components;
    return out;
}

/**
 * @brief Which preprocessing steps to run.
 */
struct PreprocessOptions {
    std::optional<double> variation_threshold;
    bool mad_normalize = false;
    bool rank_int = false;
    std::optional<double> correlation_threshold;
    std::optional<int> pca_dims;

    bool any() const { return variation_threshold || mad_normalize || rank_int || correlation_threshold || pca_dims; }
};

/**
 * @brief Output of the preprocessing pipeline.
 */
struct PreprocessResult {
    /** Transformed features before PCA. */
    Matrix features;

    /** Columns of the input that survived the filters. */
    std::vector<Index> retained;

    /** Representation used for affinities: PCA scores if requested, otherwise `features`. */
    Matrix embedding;
};

inline PreprocessResult preprocess(const ProfileMatrix& profiles, const ControlMask& controls, const PreprocessOptions& opt) {
    PreprocessResult out;
    out.retained.resize(profiles.cols());
    std::iota(out.retained.begin(), out.retained.end(), Index(0));

    auto select = [](const Matrix& X, const std::vector<Index>& cols) {
        Matrix sub(X.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(cols[c]));
        }
        return sub;
    };

    Matrix X = profiles.data();
    if (opt.variation_threshold) {
        out.retained = variation_filter(profiles, controls, *opt.variation_threshold);
        if (out.retained.empty()) {
            throw InputError("variation filter removed every feature");
        }
        X = select(X, out.retained);
    }
    if (opt.mad_normalize) {
        X = mad_normalize(X, controls);
    }
    if (opt.rank_int) {
        X = rank_int(X);
    }
    if (opt.correlation_threshold) {
        const auto keep = correlation_select(X, *opt.correlation_threshold);
        std::vector<Index> mapped;
        for (auto k : keep) {
            mapped.push_back(out.retained[k]);
        }
        out.retained = std::move(mapped);
        X = select(X, keep);
    }
    out.features = X;
    if (opt.pca_dims) {
        out.embedding = pca_project(X, *opt.pca_dims).scores;
    } else {
        out.embedding = std::move(X);
    }
    return out;
}

}

#endif
