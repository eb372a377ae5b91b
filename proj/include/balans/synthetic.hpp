#ifndef BALANS_SYNTHETIC_HPP
#define BALANS_SYNTHETIC_HPP

#include <cstdint>
#include <numeric>
#include <vector>

#include "core.hpp"
#include "random.hpp"

/**
 * @file synthetic.hpp
 *
 * @brief Synthetic data: a hierarchical Gaussian mixture with label, batch and noise levels,
 * and block-diagonal affinity matrices with symmetric exponential noise.
 */

namespace balans {

struct GmmSpec {
    int labels = 10;
    int batches = 5;
    int dims = 10;

    /** Points per (label, batch) cell. */
    int n_per = 20;

    double sigma_label = 1.0;
    double sigma_batch = 0.5;
    double sigma_noise = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (labels < 1 || batches < 1 || dims < 1 || n_per < 1) {
            throw InputError("GMM counts must all be at least 1");
        }
        if (sigma_label < 0 || sigma_batch < 0 || sigma_noise < 0) {
            throw InputError("GMM standard deviations must be non-negative");
        }
    }

    Index size() const { return static_cast<Index>(labels) * static_cast<Index>(batches) * static_cast<Index>(n_per); }
};

struct SyntheticDataset {
    ProfileMatrix profiles;
    BatchLabels batches;
    ClusterLabels labels;

    /** Cell means `mu_{l,b}`, row `l * B + b`. */
    Matrix cell_means;
};

/**
 * Draw `mu_l ~ N(0, s_label^2 I)`, `mu_{l,b} ~ N(mu_l, s_batch^2 I)` and points `x ~ N(mu_{l,b}, s_noise^2 I)`.
 * Rows are ordered by label, then batch, then point.
 */
inline SyntheticDataset generate_gmm(const GmmSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto d = spec.dims;
    Matrix label_means(spec.labels, d);
    for (int l = 0; l < spec.labels; ++l) {
        for (int f = 0; f < d; ++f) {
            label_means(l, f) = rng.normal(0, spec.sigma_label);
        }
    }
    Matrix cell_means(spec.labels * spec.batches, d);
    for (int l = 0; l < spec.labels; ++l) {
        for (int b = 0; b < spec.batches; ++b) {
            for (int f = 0; f < d; ++f) {
                cell_means(l * spec.batches + b, f) = rng.normal(label_means(l, f), spec.sigma_batch);
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(spec.size());
    Matrix X(n, d);
    std::vector<int> batch_ids, label_ids;
    batch_ids.reserve(static_cast<std::size_t>(n));
    label_ids.reserve(static_cast<std::size_t>(n));
    Eigen::Index row = 0;
    for (int l = 0; l < spec.labels; ++l) {
        for (int b = 0; b < spec.batches; ++b) {
            for (int p = 0; p < spec.n_per; ++p, ++row) {
                for (int f = 0; f < d; ++f) {
                    X(row, f) = rng.normal(cell_means(l * spec.batches + b, f), spec.sigma_noise);
                }
                batch_ids.push_back(b);
                label_ids.push_back(l);
            }
        }
    }
    return SyntheticDataset{ProfileMatrix(std::move(X)), BatchLabels(std::move(batch_ids)), ClusterLabels(std::move(label_ids)), std::move(cell_means)};
}

struct BlockModelSpec {
    std::vector<Index> sizes;
    std::vector<double> affinities;

    /** Exponential noise rate; 0 means noiseless. */
    double lambda = 0;

    std::uint64_t seed = 0;

    /** Permute rows and columns jointly so that clusters are not contiguous. */
    bool shuffle = false;

    void validate() const {
        if (sizes.empty() || sizes.size() != affinities.size()) {
            throw InputError("block model needs matching, non-empty size and affinity lists");
        }
        for (auto s : sizes) {
            if (s < 1) {
                throw InputError("block sizes must be positive");
            }
        }
        for (auto p : affinities) {
            if (!(p > 0)) {
                throw InputError("block affinities must be positive");
            }
        }
        if (lambda < 0) {
            throw InputError("noise rate must be non-negative");
        }
    }

    Index size() const { return std::accumulate(sizes.begin(), sizes.end(), Index(0)); }
};

/**
 * @brief Noisy block affinity matrix and its ground truth.
 */
struct BlockModel {
    /** Observed matrix `A_0 + E`. */
    Matrix observed;

    /** Cluster id of every row. */
    std::vector<int> cluster;

    std::vector<double> affinities;

    std::size_t clusters() const { return affinities.size(); }

    /** Noiseless block-diagonal matrix `A_0`. */
    Matrix ground_truth() const {
        const auto n = static_cast<Eigen::Index>(cluster.size());
        Matrix A0 = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (cluster[static_cast<std::size_t>(i)] == cluster[static_cast<std::size_t>(j)]) {
                    A0(i, j) = affinities[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])];
                }
            }
        }
        return A0;
    }
};

/**
 * Block-diagonal `A_0` with blocks `p_k * 1` plus symmetric noise, `E_ij = E_ji ~ Exp(lambda)` off the diagonal and `E_ii ~ Exp(lambda / 2)`.
 */
inline BlockModel generate_block_affinity(const BlockModelSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto n = spec.size();

    BlockModel out;
    out.affinities = spec.affinities;
    out.cluster.reserve(n);
    for (std::size_t k = 0; k < spec.sizes.size(); ++k) {
        out.cluster.insert(out.cluster.end(), spec.sizes[k], static_cast<int>(k));
    }
    if (spec.shuffle) {
        for (Index i = n; i > 1; --i) {
            std::swap(out.cluster[i - 1], out.cluster[rng.below(i)]);
        }
    }

    const auto N = static_cast<Eigen::Index>(n);
    out.observed = Matrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i; j < N; ++j) {
            const auto ci = out.cluster[static_cast<std::size_t>(i)], cj = out.cluster[static_cast<std::size_t>(j)];
            double v = ci == cj ? spec.affinities[static_cast<std::size_t>(ci)] : 0.0;
            if (spec.lambda > 0) {
                v += rng.exponential(i == j ? spec.lambda / 2 : spec.lambda);
            }
            out.observed(i, j) = v;
            out.observed(j, i) = v;
        }
    }
    return out;
}

/**
 * Row `i` of a dense matrix as a sparse row, zeros dropped.
 */
inline SparseRow dense_row(const Matrix& M, Index i) {
    SparseRow row;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const double v = M(static_cast<Eigen::Index>(i), j);
        if (v != 0) {
            row.cols.push_back(static_cast<Index>(j));
            row.vals.push_back(v);
        }
    }
    return row;
}

}

#endif
