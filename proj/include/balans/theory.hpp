#ifndef BALANS_THEORY_HPP
#define BALANS_THEORY_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "sampler.hpp"
#include "smoother.hpp"
#include "synthetic.hpp"

/**
 * @file theory.hpp
 *
 * @brief Monte Carlo experiments on synthetic block models: cluster coverage of the adaptive sampler,
 * decay of the Nystrom reconstruction error, and runtime scaling of the full pipeline.
 *
 * The sampler runs directly on rows of the observed block matrix, without the kernel and without sparsification,
 * and the block length equals the number of clusters.
 */

namespace balans {

enum class SamplerChoice { adaptive, uniform };

namespace detail {

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial, std::uint64_t purpose) {
    return Rng(seed, (static_cast<std::uint64_t>(trial) << 8) | purpose).next();
}

/** `m` distinct indices of `[0, n)`, uniformly at random. */
inline std::vector<Index> uniform_rows(Index n, std::size_t m, Rng& rng) {
    std::vector<Index> pool(n);
    for (Index i = 0; i < n; ++i) {
        pool[i] = i;
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::swap(pool[i], pool[i + rng.below(n - i)]);
    }
    pool.resize(m);
    return pool;
}

inline SparseAffinityRows rows_of(const Matrix& M, const std::vector<Index>& anchors) {
    SparseAffinityRows out(static_cast<Index>(M.rows()));
    for (auto a : anchors) {
        out.push_row(a, dense_row(M, a));
    }
    return out;
}

}

/**
 * Draw `m` rows of a block model with the adaptive sampler (block length K) or uniformly without replacement.
 */
inline std::vector<Index> sample_block_rows(const BlockModel& model, std::size_t m, SamplerChoice choice, std::uint64_t seed) {
    const auto n = static_cast<Index>(model.observed.rows());
    if (m > n) {
        throw InputError("cannot sample more rows than the matrix has");
    }
    if (choice == SamplerChoice::uniform) {
        Rng rng(seed);
        return detail::uniform_rows(n, m, rng);
    }
    if (m == 0) {
        return {};
    }
    SamplerOptions opt;
    opt.block_len = static_cast<int>(model.clusters());
    opt.tau.reset();
    opt.max_rows = m;
    opt.seed = seed;
    auto res = run_adaptive_sampling(n, [&](Index a) { return dense_row(model.observed, a); }, opt);
    return res.rows.anchors();
}

struct CoverageExperimentResult {
    /** `counts[trial][k]` is the number of sampled rows from cluster k. */
    std::vector<std::vector<std::size_t>> counts;
    std::size_t m = 0;
    std::size_t t = 0;
    std::vector<char> success;
    double success_rate = 0;
};

/**
 * Empirical probability that every cluster receives at least `t` of `m` sampled rows.
 * Trial `r` uses a fresh block model (seed derived from `spec.seed` and `r`) and its own sampler stream.
 */
inline CoverageExperimentResult run_coverage_experiment(const BlockModelSpec& spec, std::size_t t, std::size_t m, std::size_t trials,
                                                        SamplerChoice choice, int threads = 1) {
    spec.validate();
    if (m > spec.size()) {
        throw InputError("m must not exceed n");
    }
    CoverageExperimentResult out;
    out.m = m;
    out.t = t;
    out.counts.assign(trials, std::vector<std::size_t>(spec.sizes.size(), 0));
    out.success.assign(trials, 0);

    parallel_for(trials, threads, [&](std::size_t start, std::size_t end) {
        for (auto r = start; r < end; ++r) {
            BlockModelSpec trial_spec = spec;
            trial_spec.seed = detail::trial_seed(spec.seed, r, 1);
            const auto model = generate_block_affinity(trial_spec);
            const auto rows = sample_block_rows(model, m, choice, detail::trial_seed(spec.seed, r, 2));
            for (auto a : rows) {
                ++out.counts[r][static_cast<std::size_t>(model.cluster[a])];
            }
            out.success[r] = std::all_of(out.counts[r].begin(), out.counts[r].end(), [&](std::size_t c) { return c >= t; });
        }
    });
    out.success_rate = trials ? static_cast<double>(std::count(out.success.begin(), out.success.end(), 1)) / static_cast<double>(trials) : 1.0;
    return out;
}

/**
 * Largest singular value by power iteration on `M^T M`.
 * Stops when the estimate changes by less than `tol` relative.
 */
inline double operator_norm(const Matrix& M, double tol = 1e-8, int max_iter = 20000) {
    if (M.size() == 0) {
        return 0;
    }
    Rng rng(0x5eed);
    Vector v(M.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = 1 + 0.1 * rng.uniform();
    }
    v.normalize();
    double estimate = 0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = M.transpose() * (M * v);
        const double nw = w.norm();
        if (nw == 0) {
            return 0;
        }
        const double next = std::sqrt(nw);
        v = w / nw;
        if (std::abs(next - estimate) <= tol * next) {
            return next;
        }
        estimate = next;
    }
    return estimate;
}

/**
 * Least-squares slope of `log(y)` against `log(x)`.
 */
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("slope fit needs at least two matched points");
    }
    double mx = 0, my = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

enum class SpectralStopping {
    /** Sample until every cluster holds at least t rows, using the true cluster ids. */
    per_cluster,

    /** Sample exactly `ceil(C t K log K)` rows. */
    budget
};

struct SpectralOptions {
    SpectralStopping stopping = SpectralStopping::per_cluster;
    double budget_constant = 2.0;
    NystromOptions nystrom;
    double norm_tol = 1e-8;
    int threads = 1;
};

struct SpectralExperimentResult {
    std::vector<std::size_t> t_values;

    /** `errors[i][trial]` is the operator-norm error for `t_values[i]`. */
    std::vector<std::vector<double>> errors;

    /** `rows[i][trial]` is the number of sampled rows. */
    std::vector<std::vector<std::size_t>> rows;

    std::vector<double> median_errors;
    double slope = 0;
};

/**
 * Operator-norm error of the Nystrom reconstruction against the noiseless blocks, as a function of rows per cluster.
 */
inline SpectralExperimentResult run_spectral_experiment(const BlockModelSpec& spec, const std::vector<std::size_t>& t_values, std::size_t trials,
                                                        const SpectralOptions& opt = {}) {
    spec.validate();
    const auto K = spec.sizes.size();
    const auto n = spec.size();
    const auto smallest = *std::min_element(spec.sizes.begin(), spec.sizes.end());
    for (auto t : t_values) {
        if (t < 1 || (opt.stopping == SpectralStopping::per_cluster && t > smallest)) {
            throw InputError("t must lie in [1, smallest cluster size]");
        }
    }

    SpectralExperimentResult out;
    out.t_values = t_values;
    out.errors.assign(t_values.size(), std::vector<double>(trials, 0.0));
    out.rows.assign(t_values.size(), std::vector<std::size_t>(trials, 0));

    for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
        const auto t = t_values[ti];
        parallel_for(trials, opt.threads, [&](std::size_t start, std::size_t end) {
            for (auto r = start; r < end; ++r) {
                BlockModelSpec trial_spec = spec;
                trial_spec.seed = detail::trial_seed(spec.seed, r * 1000 + ti, 3);
                const auto model = generate_block_affinity(trial_spec);

                SamplerOptions sopt;
                sopt.block_len = static_cast<int>(K);
                sopt.tau.reset();
                sopt.seed = detail::trial_seed(spec.seed, r * 1000 + ti, 4);
                std::vector<std::size_t> per_cluster(K, 0);
                if (opt.stopping == SpectralStopping::per_cluster) {
                    sopt.stop_when = [&](const CoverageState& state) {
                        ++per_cluster[static_cast<std::size_t>(model.cluster[state.sampled().back()])];
                        return std::all_of(per_cluster.begin(), per_cluster.end(), [&](std::size_t c) { return c >= t; });
                    };
                } else {
                    const double kk = static_cast<double>(K);
                    const auto budget = static_cast<std::size_t>(std::ceil(opt.budget_constant * static_cast<double>(t) * kk * std::log(std::max(kk, 2.0))));
                    sopt.max_rows = std::min<std::size_t>(budget, n);
                }
                auto sampled = run_adaptive_sampling(n, [&](Index a) { return dense_row(model.observed, a); }, sopt);

                const Matrix estimate = nystrom_exact(sampled.rows, opt.nystrom);
                out.errors[ti][r] = operator_norm(estimate - model.ground_truth(), opt.norm_tol);
                out.rows[ti][r] = sampled.rows.size();
            }
        });
        out.median_errors.push_back(median_of(out.errors[ti]));
    }

    if (t_values.size() >= 2) {
        std::vector<double> x(t_values.begin(), t_values.end());
        bool positive = std::all_of(out.median_errors.begin(), out.median_errors.end(), [](double e) { return e > 0; });
        out.slope = positive ? loglog_slope(x, out.median_errors) : 0.0;
    }
    return out;
}

struct RuntimeRow {
    Index n = 0;
    double seconds = 0;
    std::size_t sampled_rows = 0;
};

/**
 * Time the full correction pipeline on GMM data of increasing size.
 * The template's cell size is replaced by `n / (labels * batches)` (at least 1) for each requested n.
 */
inline std::vector<RuntimeRow> run_runtime_experiment(const std::vector<Index>& n_values, const GmmSpec& gmm_template, const CorrectionOptions& options = {}) {
    std::vector<RuntimeRow> out;
    for (auto n : n_values) {
        GmmSpec spec = gmm_template;
        const auto cells = static_cast<Index>(spec.labels) * static_cast<Index>(spec.batches);
        spec.n_per = static_cast<int>(std::max<Index>(1, n / cells));
        const auto data = generate_gmm(spec);

        const auto begin = std::chrono::steady_clock::now();
        const auto res = correct(data.profiles, data.batches, options);
        const auto end = std::chrono::steady_clock::now();

        out.push_back(RuntimeRow{data.profiles.rows(), std::chrono::duration<double>(end - begin).count(), res.rows.size()});
    }
    return out;
}

}

#endif
