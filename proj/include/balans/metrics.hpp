#ifndef BALANS_METRICS_HPP
#define BALANS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "core.hpp"
#include "parallel.hpp"
#include "random.hpp"

/**
 * @file metrics.hpp
 *
 * @brief Batch-removal and bio-conservation metrics, each normalized so that 1 is ideal.
 */

namespace balans {

/**
 * Exact k nearest neighbors of every row by brute force, self excluded.
 * Neighbors are ordered by increasing distance, ties by index.
 */
inline std::vector<std::vector<Index>> knn_graph(const Matrix& X, std::size_t k, int threads = 1) {
    const auto n = static_cast<Index>(X.rows());
    if (k < 1 || k >= n) {
        throw InputError("neighborhood size must lie in [1, n - 1]");
    }
    std::vector<std::vector<Index>> out(n);
    parallel_for(n, threads, [&](std::size_t start, std::size_t end) {
        std::vector<std::pair<double, Index>> cand(n - 1);
        for (auto i = start; i < end; ++i) {
            std::size_t c = 0;
            for (Index j = 0; j < n; ++j) {
                if (j != i) {
                    cand[c++] = {(X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).squaredNorm(), j};
                }
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
            out[i].resize(k);
            for (std::size_t e = 0; e < k; ++e) {
                out[i][e] = cand[e].second;
            }
        }
    });
    return out;
}

namespace detail {

inline std::vector<int> dense_ids(const std::vector<int>& labels, std::size_t* count = nullptr) {
    std::map<int, int> mapping;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = mapping.emplace(labels[i], static_cast<int>(mapping.size())).first;
        out[i] = it->second;
    }
    if (count) {
        *count = mapping.size();
    }
    return out;
}

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}

/**
 * @brief Mean silhouette width and its two normalized readings.
 */
struct SilhouetteScore {
    /** Mean of `s(i)`, in [-1, 1]. */
    double mean = 0;

    /** `(mean + 1) / 2`: high when the labels are well separated. */
    double label_score() const { return detail::clamp01((mean + 1) / 2); }

    /** `1 - (mean + 1) / 2`: high when the labels are well mixed. */
    double batch_score() const { return detail::clamp01(1 - (mean + 1) / 2); }
};

/**
 * Average silhouette width with Euclidean distances.
 * Members of singleton labels contribute `s(i) = 0`.
 */
inline SilhouetteScore silhouette(const Matrix& X, const std::vector<int>& labels, int threads = 1) {
    const auto n = static_cast<Index>(X.rows());
    if (labels.size() != n) {
        throw InputError("label count does not match the profiles");
    }
    std::size_t nlabels = 0;
    const auto ids = detail::dense_ids(labels, &nlabels);
    if (nlabels < 2) {
        throw InputError("silhouette needs at least two distinct labels");
    }
    std::vector<std::size_t> sizes(nlabels, 0);
    for (auto id : ids) {
        ++sizes[static_cast<std::size_t>(id)];
    }

    std::vector<double> s(n, 0.0);
    parallel_for(n, threads, [&](std::size_t start, std::size_t end) {
        std::vector<double> sums(nlabels);
        for (auto i = start; i < end; ++i) {
            const auto own = static_cast<std::size_t>(ids[i]);
            if (sizes[own] < 2) {
                continue;
            }
            std::fill(sums.begin(), sums.end(), 0.0);
            for (Index j = 0; j < n; ++j) {
                if (j != i) {
                    sums[static_cast<std::size_t>(ids[j])] += (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).norm();
                }
            }
            const double a = sums[own] / static_cast<double>(sizes[own] - 1);
            double b = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < nlabels; ++l) {
                if (l != own) {
                    b = std::min(b, sums[l] / static_cast<double>(sizes[l]));
                }
            }
            const double denom = std::max(a, b);
            s[i] = denom > 0 ? (b - a) / denom : 0.0;
        }
    });
    SilhouetteScore out;
    out.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
    return out;
}

/**
 * @brief Mean local inverse Simpson's index and its normalized readings.
 */
struct LisiScore {
    /** Mean inverse Simpson's index, in [1, number of labels]. */
    double mean = 1;
    std::size_t nlabels = 1;

    /** `(LISI - 1) / (L - 1)`: high when neighborhoods mix all labels. */
    double batch_score() const { return nlabels > 1 ? detail::clamp01((mean - 1) / static_cast<double>(nlabels - 1)) : 1.0; }

    /** `1 - (LISI - 1) / (L - 1)`: high when neighborhoods are pure. */
    double label_score() const { return nlabels > 1 ? detail::clamp01(1 - (mean - 1) / static_cast<double>(nlabels - 1)) : 1.0; }
};

inline LisiScore lisi_from_neighbors(const std::vector<std::vector<Index>>& neighbors, const std::vector<int>& labels) {
    std::size_t nlabels = 0;
    const auto ids = detail::dense_ids(labels, &nlabels);
    std::vector<double> counts(nlabels);
    double total = 0;
    for (const auto& nb : neighbors) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (auto j : nb) {
            counts[static_cast<std::size_t>(ids[j])] += 1;
        }
        double simpson = 0;
        const double k = static_cast<double>(nb.size());
        for (auto c : counts) {
            simpson += (c / k) * (c / k);
        }
        total += 1 / simpson;
    }
    return LisiScore{total / static_cast<double>(neighbors.size()), nlabels};
}

/**
 * LISI over the `neighborhood` nearest neighbors of every point (self excluded), with plain label proportions.
 */
inline LisiScore lisi(const Matrix& X, const std::vector<int>& labels, int neighborhood, int threads = 1) {
    if (neighborhood < 1) {
        throw InputError("LISI neighborhood must be at least 1");
    }
    if (labels.size() != static_cast<Index>(X.rows())) {
        throw InputError("label count does not match the profiles");
    }
    return lisi_from_neighbors(knn_graph(X, static_cast<std::size_t>(neighborhood), threads), labels);
}

/**
 * Upper tail of the chi-square distribution.
 */
inline double chi_square_upper_tail(double statistic, double dof) {
    if (dof <= 0) {
        return 1.0;
    }
    if (statistic <= 0) {
        return 1.0;
    }
    return boost::math::gamma_q(dof / 2, statistic / 2);
}

/**
 * @brief kBET acceptance rate plus the per-point p-values.
 */
struct KbetResult {
    double acceptance = 1;
    std::vector<double> p_values;
};

inline KbetResult kbet_from_neighbors(const std::vector<std::vector<Index>>& neighbors, const std::vector<int>& batches, double alpha = 0.05) {
    std::size_t nb = 0;
    const auto ids = detail::dense_ids(batches, &nb);
    std::vector<double> global(nb, 0.0);
    for (auto id : ids) {
        global[static_cast<std::size_t>(id)] += 1;
    }
    for (auto& g : global) {
        g /= static_cast<double>(ids.size());
    }

    KbetResult out;
    out.p_values.resize(neighbors.size());
    std::size_t accepted = 0;
    std::vector<double> counts(nb);
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (auto j : neighbors[i]) {
            counts[static_cast<std::size_t>(ids[j])] += 1;
        }
        const double k = static_cast<double>(neighbors[i].size());
        double stat = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            const double expected = k * global[b];
            stat += (counts[b] - expected) * (counts[b] - expected) / expected;
        }
        out.p_values[i] = chi_square_upper_tail(stat, static_cast<double>(nb) - 1);
        accepted += (out.p_values[i] >= alpha);
    }
    out.acceptance = static_cast<double>(accepted) / static_cast<double>(neighbors.size());
    return out;
}

/**
 * Fraction of points whose neighborhood batch composition passes a Pearson chi-square test against the global composition.
 */
inline KbetResult kbet(const Matrix& X, const std::vector<int>& batches, int neighborhood, double alpha = 0.05, int threads = 1) {
    std::size_t nb = 0;
    detail::dense_ids(batches, &nb);
    if (neighborhood < static_cast<int>(nb)) {
        throw InputError("kBET neighborhood must be at least the number of batches");
    }
    if (batches.size() != static_cast<Index>(X.rows())) {
        throw InputError("batch count does not match the profiles");
    }
    return kbet_from_neighbors(knn_graph(X, static_cast<std::size_t>(neighborhood), threads), batches, alpha);
}

/**
 * Mean over labels of the fraction of ordered within-label pairs joined in the symmetrized kNN graph, self-pairs included.
 */
inline double graph_connectivity_from_neighbors(const std::vector<std::vector<Index>>& neighbors, const std::vector<int>& labels) {
    std::size_t nlabels = 0;
    const auto ids = detail::dense_ids(labels, &nlabels);
    std::vector<std::pair<Index, Index>> edges;
    for (Index i = 0; i < neighbors.size(); ++i) {
        for (auto j : neighbors[i]) {
            if (ids[i] == ids[j]) {
                edges.emplace_back(std::min(i, j), std::max(i, j));
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<double> sizes(nlabels, 0.0), linked(nlabels, 0.0);
    for (auto id : ids) {
        sizes[static_cast<std::size_t>(id)] += 1;
        linked[static_cast<std::size_t>(id)] += 1;
    }
    for (const auto& e : edges) {
        linked[static_cast<std::size_t>(ids[e.first])] += 2;
    }
    double total = 0;
    for (std::size_t l = 0; l < nlabels; ++l) {
        total += linked[l] / (sizes[l] * sizes[l]);
    }
    return total / static_cast<double>(nlabels);
}

inline double graph_connectivity(const Matrix& X, const std::vector<int>& labels, int neighborhood, int threads = 1) {
    if (neighborhood < 1) {
        throw InputError("connectivity neighborhood must be at least 1");
    }
    if (labels.size() != static_cast<Index>(X.rows())) {
        throw InputError("label count does not match the profiles");
    }
    return graph_connectivity_from_neighbors(knn_graph(X, static_cast<std::size_t>(neighborhood), threads), labels);
}

namespace detail {

struct Contingency {
    std::vector<double> row_sums, col_sums;
    std::vector<double> cells;
    double n = 0;
};

inline Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw InputError("label vectors differ in length");
    }
    std::size_t na = 0, nb = 0;
    const auto ia = dense_ids(a, &na);
    const auto ib = dense_ids(b, &nb);
    Contingency out;
    out.row_sums.assign(na, 0.0);
    out.col_sums.assign(nb, 0.0);
    std::vector<double> table(na * nb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto r = static_cast<std::size_t>(ia[i]), c = static_cast<std::size_t>(ib[i]);
        table[r * nb + c] += 1;
        out.row_sums[r] += 1;
        out.col_sums[c] += 1;
    }
    for (auto v : table) {
        if (v > 0) {
            out.cells.push_back(v);
        }
    }
    out.n = static_cast<double>(a.size());
    return out;
}

inline double choose2(double x) { return x * (x - 1) / 2; }

}

/**
 * Adjusted Rand index. When the chance-corrected denominator vanishes (both partitions trivial),
 * identical partitions score 1 and anything else 0.
 */
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const auto t = detail::contingency(a, b);
    double index = 0, sa = 0, sb = 0;
    for (auto v : t.cells) {
        index += detail::choose2(v);
    }
    for (auto v : t.row_sums) {
        sa += detail::choose2(v);
    }
    for (auto v : t.col_sums) {
        sb += detail::choose2(v);
    }
    const double total = detail::choose2(t.n);
    const double expected = total > 0 ? sa * sb / total : 0;
    const double maximum = (sa + sb) / 2;
    if (maximum == expected) {
        return t.cells.size() == t.row_sums.size() && t.cells.size() == t.col_sums.size() ? 1.0 : 0.0;
    }
    return (index - expected) / (maximum - expected);
}

/**
 * Normalized mutual information `2 I / (H(a) + H(b))`; two constant partitions score 1.
 */
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const auto t = detail::contingency(a, b);
    auto entropy = [&](const std::vector<double>& sums) {
        double h = 0;
        for (auto v : sums) {
            const double p = v / t.n;
            h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(t.row_sums), hb = entropy(t.col_sums);
    if (ha + hb == 0) {
        return 1.0;
    }
    // I = H(a) + H(b) - H(a, b)
    double hab = 0;
    for (auto v : t.cells) {
        const double p = v / t.n;
        hab -= p * std::log(p);
    }
    const double mi = std::max(0.0, ha + hb - hab);
    return detail::clamp01(2 * mi / (ha + hb));
}

/**
 * @brief Output of `kmeans_cluster()`.
 */
struct KMeansResult {
    std::vector<int> labels;
    Matrix centers;

    /** Within-cluster sum of squares after each assignment step. */
    std::vector<double> objective;
};

/**
 * Lloyd's k-means with farthest-point initialization.
 * The first center is a seeded uniform pick; each further center is the point farthest from the chosen ones (lowest index on ties).
 * Empty clusters keep their previous center. Stops when assignments no longer change.
 */
inline KMeansResult kmeans_cluster(const Matrix& X, int K, std::uint64_t seed = 0, int max_iter = 100) {
    const auto n = X.rows();
    if (K < 1) {
        throw InputError("number of clusters must be at least 1");
    }
    if (K > n) {
        throw InputError("number of clusters exceeds the number of samples");
    }
    Rng rng(seed);
    KMeansResult out;
    out.centers.resize(K, X.cols());
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    for (int c = 0; c < K; ++c) {
        out.centers.row(c) = X.row(pick);
        Eigen::Index far = 0;
        double far_d = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& nd = nearest[static_cast<std::size_t>(i)];
            nd = std::min(nd, (X.row(i) - out.centers.row(c)).squaredNorm());
            if (nd > far_d) {
                far_d = nd;
                far = i;
            }
        }
        pick = far;
    }

    out.labels.assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double objective = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < K; ++c) {
                const double dd = (X.row(i) - out.centers.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            objective += best_d;
            if (out.labels[static_cast<std::size_t>(i)] != best) {
                out.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        out.objective.push_back(objective);
        if (!changed) {
            break;
        }
        Matrix sums = Matrix::Zero(K, X.cols());
        std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto l = out.labels[static_cast<std::size_t>(i)];
            sums.row(l) += X.row(i);
            counts[static_cast<std::size_t>(l)] += 1;
        }
        for (int c = 0; c < K; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                out.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            }
        }
    }
    return out;
}

/**
 * @brief Settings for `evaluate()`.
 */
struct EvalConfig {
    /** Neighborhood size for LISI, kBET and connectivity; clamped to n - 1. */
    int neighborhood = 30;

    double alpha = 0.05;

    /** Number of k-means clusters for ARI/NMI; defaults to the number of true labels. */
    std::optional<int> clusters;

    std::uint64_t seed = 0;
    int threads = 1;
};

/**
 * @brief Normalized metric scores in [0, 1] plus group averages.
 */
struct MetricReport {
    double graph_connectivity = 0;
    double kbet = 0;
    double lisi_batch = 0;
    double silhouette_batch = 0;

    double lisi_label = 0;
    double ari = 0;
    double nmi = 0;
    double silhouette_label = 0;

    double avg_batch = 0;
    double avg_label = 0;
    double avg_all = 0;
};

/**
 * Run the batch-removal group (connectivity, kBET, batch LISI, batch silhouette) and the bio-conservation group
 * (label LISI, ARI, NMI, label silhouette) on one representation. ARI below zero is reported as 0.
 */
inline MetricReport evaluate(const Matrix& X, const BatchLabels& batches, const ClusterLabels& labels, const EvalConfig& cfg = {}) {
    const auto n = static_cast<Index>(X.rows());
    if (batches.size() != n || labels.size() != n) {
        throw InputError("label counts do not match the profiles");
    }
    if (n < 2) {
        throw InputError("evaluation needs at least two samples");
    }
    const auto k = static_cast<std::size_t>(std::min<Index>(static_cast<Index>(std::max(cfg.neighborhood, 1)), n - 1));
    const auto neighbors = knn_graph(X, k, cfg.threads);

    MetricReport r;
    r.graph_connectivity = graph_connectivity_from_neighbors(neighbors, labels.ids());
    r.kbet = kbet_from_neighbors(neighbors, batches.ids(), cfg.alpha).acceptance;
    r.lisi_batch = lisi_from_neighbors(neighbors, batches.ids()).batch_score();
    r.silhouette_batch = batches.count() > 1 ? silhouette(X, batches.ids(), cfg.threads).batch_score() : 1.0;

    r.lisi_label = lisi_from_neighbors(neighbors, labels.ids()).label_score();
    const int K = cfg.clusters.value_or(static_cast<int>(labels.count()));
    const auto clustering = kmeans_cluster(X, std::min<int>(K, static_cast<int>(n)), cfg.seed);
    r.ari = detail::clamp01(ari(clustering.labels, labels.ids()));
    r.nmi = nmi(clustering.labels, labels.ids());
    r.silhouette_label = labels.count() > 1 ? silhouette(X, labels.ids(), cfg.threads).label_score() : 1.0;

    r.avg_batch = (r.graph_connectivity + r.kbet + r.lisi_batch + r.silhouette_batch) / 4;
    r.avg_label = (r.lisi_label + r.ari + r.nmi + r.silhouette_label) / 4;
    r.avg_all = (r.avg_batch + r.avg_label) / 2;
    return r;
}

}

#endif
