#ifndef BALANS_KERNEL_HPP
#define BALANS_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "core.hpp"

/**
 * @file kernel.hpp
 *
 * @brief Batch-dependent local-scale affinity rows and their elbow sparsification.
 */

namespace balans {

/**
 * Squared Euclidean distances from `anchor` to every sample.
 */
inline std::vector<double> distance_row(const ProfileMatrix& profiles, Index anchor) {
    if (anchor >= profiles.rows()) {
        throw InputError("anchor index out of range");
    }
    const auto& X = profiles.data();
    const auto d = X.cols();
    const auto a = static_cast<Eigen::Index>(anchor);
    std::vector<double> out(profiles.rows());
    for (Eigen::Index j = 0; j < X.rows(); ++j) {
        double s = 0;
        for (Eigen::Index f = 0; f < d; ++f) {
            const double diff = X(a, f) - X(j, f);
            s += diff * diff;
        }
        out[static_cast<std::size_t>(j)] = s;
    }
    return out;
}

/**
 * @brief Squared local scales of one anchor, one per batch.
 */
struct LocalScaleTable {
    Index anchor = 0;

    /** `squared[b]` is the squared distance from the anchor to its k-th nearest neighbor in batch `b`. */
    std::vector<double> squared;

    /** Whether batch `b` had fewer than k candidates, so its farthest candidate was used instead. */
    std::vector<char> short_batch;
};

/**
 * Compute the per-batch local scales for an anchor.
 * The anchor is never a candidate neighbor of itself.
 * A zero k-th distance (exact duplicates) is replaced by the smallest nonzero distance in that batch.
 *
 * @throws InputError if some batch has no candidates at all.
 * @throws NumericError if every candidate of some batch coincides with the anchor.
 */
inline LocalScaleTable batch_local_scales(std::span<const double> dist, const BatchLabels& batches, Index anchor, int k) {
    if (k < 1) {
        throw InputError("k must be at least 1");
    }
    if (dist.size() != batches.size()) {
        throw InputError("distance row length does not match the batch labels");
    }
    if (anchor >= dist.size()) {
        throw InputError("anchor index out of range");
    }

    const auto nbatches = batches.count();
    std::vector<std::vector<double>> buckets(nbatches);
    for (Index j = 0; j < dist.size(); ++j) {
        if (j != anchor) {
            buckets[static_cast<std::size_t>(batches[j])].push_back(dist[j]);
        }
    }

    LocalScaleTable table;
    table.anchor = anchor;
    table.squared.resize(nbatches);
    table.short_batch.resize(nbatches);
    for (std::size_t b = 0; b < nbatches; ++b) {
        auto& cand = buckets[b];
        if (cand.empty()) {
            throw InputError("batch " + std::to_string(b + 1) + " has no neighbor candidates for anchor " + std::to_string(anchor));
        }
        const auto rank = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
        table.short_batch[b] = rank < static_cast<std::size_t>(k);
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(rank - 1), cand.end());
        double scale = cand[rank - 1];
        if (scale == 0) {
            double smallest = 0;
            for (auto c : cand) {
                if (c > 0 && (smallest == 0 || c < smallest)) {
                    smallest = c;
                }
            }
            if (smallest == 0) {
                throw NumericError("zero local scale: every candidate in batch " + std::to_string(b + 1) + " duplicates anchor " + std::to_string(anchor));
            }
            scale = smallest;
        }
        table.squared[b] = scale;
    }
    return table;
}

/**
 * Dense affinity row `exp(-d_j / sigma^2_{b_j})`.
 * Entries that underflow to zero are left as zero and later dropped by sparsification.
 */
inline std::vector<double> affinity_row(std::span<const double> dist, const LocalScaleTable& scales, const BatchLabels& batches) {
    if (dist.size() != batches.size()) {
        throw InputError("distance row length does not match the batch labels");
    }
    std::vector<double> out(dist.size());
    for (Index j = 0; j < dist.size(); ++j) {
        const double s = scales.squared[static_cast<std::size_t>(batches[j])];
        if (s > 0) {
            out[j] = std::exp(-dist[j] / s);
        } else if (dist[j] == 0) {
            out[j] = 1;
        } else {
            throw NumericError("zero local scale with nonzero distance at column " + std::to_string(j));
        }
    }
    return out;
}

/**
 * @brief Outcome of the elbow scan over a descending-sorted row.
 */
struct ElbowCut {
    /** Number of leading sorted entries to keep. Equals the row length when no cut was accepted. */
    std::size_t keep = 0;

    /** Largest between-segment drop observed. */
    double max_drop = 0;

    /** 80th percentile of all drops. */
    double threshold = 0;

    bool accepted = false;
};

/**
 * Width of the sliding window for a row of length `n`.
 */
inline std::size_t elbow_window(std::size_t n) {
    const std::size_t w = std::max<std::size_t>(4, (n + 99) / 100);
    return std::min(w, n);
}

/**
 * Linear-interpolation percentile, `q` in [0, 1]. Reorders `values`.
 */
inline double percentile(std::vector<double>& values, double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double vlo = values[lo];
    if (frac == 0 || lo + 1 >= values.size()) {
        return vlo;
    }
    const double vhi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return vlo + frac * (vhi - vlo);
}

/**
 * Locate the change point in a descending-sorted sequence.
 *
 * A window of `elbow_window(n)` entries slides with stride 1; at each cut the window is split into a left half and a right half,
 * and the drop is the total within-window sum of squares minus the two within-segment sums of squares,
 * which equals `(nl * nr / (nl + nr)) * (mean_left - mean_right)^2`.
 * The cut with the largest drop is accepted if that drop is strictly above the 80th percentile of all drops; the first such cut wins ties.
 */
inline ElbowCut elbow_cut(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    ElbowCut out;
    out.keep = n;
    if (n < 2) {
        return out;
    }

    const std::size_t w = elbow_window(n);
    const std::size_t left = w / 2, right = w - left;

    std::vector<long double> prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + sorted[i];
    }

    const long double weight = static_cast<long double>(left) * static_cast<long double>(right) / static_cast<long double>(w);
    std::vector<double> drops;
    drops.reserve(n - w + 1);
    std::size_t best = left;
    double best_drop = -1;
    for (std::size_t c = left; c + right <= n; ++c) {
        const long double ml = (prefix[c] - prefix[c - left]) / static_cast<long double>(left);
        const long double mr = (prefix[c + right] - prefix[c]) / static_cast<long double>(right);
        const double drop = static_cast<double>(weight * (ml - mr) * (ml - mr));
        drops.push_back(drop);
        if (drop > best_drop) {
            best_drop = drop;
            best = c;
        }
    }

    out.max_drop = best_drop;
    out.threshold = percentile(drops, 0.8);
    if (best_drop > out.threshold) {
        out.accepted = true;
        out.keep = best;
    }
    return out;
}

/**
 * Sparsify a dense affinity row by keeping the entries above its elbow.
 * Entries are ranked by decreasing value with ties broken by column; exact zeros are never stored.
 */
inline SparseRow elbow_sparsify(std::span<const double> row) {
    if (row.size() < 2) {
        throw InputError("elbow sparsification needs at least two entries");
    }
    std::vector<Index> order(row.size());
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (row[a] != row[b]) {
            return row[a] > row[b];
        }
        return a < b;
    });
    std::vector<double> sorted(row.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted[i] = row[order[i]];
    }

    const auto cut = elbow_cut(sorted);
    SparseRow out;
    for (std::size_t i = 0; i < cut.keep; ++i) {
        if (sorted[i] > 0) {
            out.cols.push_back(order[i]);
            out.vals.push_back(sorted[i]);
        }
    }
    out.canonicalize();
    return out;
}

/**
 * Sparse, batch-aware affinity row of one anchor: distances, per-batch scales, kernel, elbow.
 * A single-sample dataset yields the trivial row `{(0, 1)}`.
 */
inline SparseRow compute_sparse_row(const ProfileMatrix& profiles, const BatchLabels& batches, Index anchor, int k) {
    const auto dist = distance_row(profiles, anchor);
    if (dist.size() == 1) {
        return SparseRow{{0}, {1.0}};
    }
    const auto scales = batch_local_scales(dist, batches, anchor, k);
    const auto dense = affinity_row(dist, scales, batches);
    return elbow_sparsify(dense);
}

}

#endif
