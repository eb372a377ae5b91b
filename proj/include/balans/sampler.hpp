#ifndef BALANS_SAMPLER_HPP
#define BALANS_SAMPLER_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "kernel.hpp"
#include "random.hpp"

/**
 * @file sampler.hpp
 *
 * @brief Coverage-based adaptive selection of affinity rows.
 */

namespace balans {

/**
 * Sampling probabilities over all indices given the block coverage.
 * Unsampled indices with zero coverage share the mass uniformly if any exist;
 * otherwise unsampled indices receive mass proportional to `1 / coverage`.
 * Already-sampled indices always receive zero.
 *
 * @param sampled Either empty (nothing sampled) or one flag per index.
 *
 * @throws NumericError if every index has been sampled.
 */
inline std::vector<double> sampling_distribution(std::span<const double> block_cov, std::span<const char> sampled) {
    const auto n = block_cov.size();
    if (!sampled.empty() && sampled.size() != n) {
        throw InputError("sampled-flag length does not match coverage length");
    }
    auto eligible = [&](Index i) { return sampled.empty() || !sampled[i]; };

    std::vector<double> out(n, 0.0);
    std::size_t zeros = 0, nelig = 0;
    for (Index i = 0; i < n; ++i) {
        if (block_cov[i] < 0) {
            throw InputError("coverage must be non-negative");
        }
        if (eligible(i)) {
            ++nelig;
            zeros += (block_cov[i] == 0);
        }
    }
    if (nelig == 0) {
        throw NumericError("no unsampled index remains");
    }

    if (zeros) {
        const double p = 1.0 / static_cast<double>(zeros);
        for (Index i = 0; i < n; ++i) {
            if (eligible(i) && block_cov[i] == 0) {
                out[i] = p;
            }
        }
        return out;
    }

    double total = 0;
    for (Index i = 0; i < n; ++i) {
        if (eligible(i)) {
            out[i] = 1.0 / block_cov[i];
            total += out[i];
        }
    }
    for (auto& o : out) {
        o /= total;
    }
    return out;
}

/**
 * Categorical draw by inversion of the cumulative distribution; never returns a zero-probability index.
 */
inline Index draw_index(std::span<const double> dist, Rng& rng) {
    double total = 0;
    Index last_positive = dist.size();
    for (Index i = 0; i < dist.size(); ++i) {
        total += dist[i];
        if (dist[i] > 0) {
            last_positive = i;
        }
    }
    if (last_positive == dist.size()) {
        throw InputError("distribution has no positive mass");
    }
    const double target = rng.uniform() * total;
    double acc = 0;
    for (Index i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0) {
            continue;
        }
        acc += dist[i];
        if (target < acc) {
            return i;
        }
    }
    return last_positive;
}

/**
 * @brief Coverage bookkeeping for the sampling loop.
 *
 * Holds the cumulative coverage `c`, the block coverage `c_J` that is reset every `block_len` steps,
 * the ordered set of sampled indices and the count of consecutive steps that added no new coverage.
 */
class CoverageState {
public:
    CoverageState(Index n, int block_len, NoveltyReference novelty = NoveltyReference::cumulative)
        : cumulative_(n, 0.0), block_(n, 0.0), sampled_flag_(n, 0), block_len_(block_len), novelty_(novelty) {
        if (block_len < 1) {
            throw InputError("block length must be at least 1");
        }
    }

    /**
     * Add the row sampled at `anchor` to both coverage vectors.
     * The returned delta counts the columns with a positive entry whose reference coverage was still zero
     * (cumulative or block coverage, depending on the novelty reference).
     * The block vector is zeroed once `block_len` rows have been added since the last reset.
     */
    std::size_t update(Index anchor, SparseRowView row) {
        if (anchor >= cumulative_.size()) {
            throw InputError("anchor index out of range");
        }
        if (sampled_flag_[anchor]) {
            throw InputError("index " + std::to_string(anchor) + " was already sampled");
        }
        const auto& ref = (novelty_ == NoveltyReference::cumulative ? cumulative_ : block_);
        std::size_t delta = 0;
        for (std::size_t e = 0; e < row.nnz(); ++e) {
            if (row.cols[e] >= cumulative_.size()) {
                throw InputError("row column out of range");
            }
            if (row.vals[e] > 0 && ref[row.cols[e]] == 0) {
                ++delta;
            }
        }
        for (std::size_t e = 0; e < row.nnz(); ++e) {
            cumulative_[row.cols[e]] += row.vals[e];
            block_[row.cols[e]] += row.vals[e];
        }

        sampled_flag_[anchor] = 1;
        sampled_.push_back(anchor);
        no_change_count_ = delta ? 0 : no_change_count_ + 1;

        if (++steps_in_block_ == block_len_) {
            std::fill(block_.begin(), block_.end(), 0.0);
            steps_in_block_ = 0;
            ++blocks_completed_;
        }
        return delta;
    }

    const std::vector<double>& cumulative() const { return cumulative_; }
    const std::vector<double>& block() const { return block_; }
    const std::vector<Index>& sampled() const { return sampled_; }
    const std::vector<char>& sampled_flags() const { return sampled_flag_; }
    int no_change_count() const { return no_change_count_; }
    int steps_in_block() const { return steps_in_block_; }
    std::size_t blocks_completed() const { return blocks_completed_; }
    bool exhausted() const { return sampled_.size() == cumulative_.size(); }

private:
    std::vector<double> cumulative_;
    std::vector<double> block_;
    std::vector<char> sampled_flag_;
    std::vector<Index> sampled_;
    int block_len_;
    NoveltyReference novelty_;
    int no_change_count_ = 0;
    int steps_in_block_ = 0;
    std::size_t blocks_completed_ = 0;
};

/**
 * @brief One accepted sampling step, as reported to a trace sink.
 */
struct SampleEvent {
    std::size_t step;
    Index index;
    std::size_t delta;
    std::size_t nnz;
};

/**
 * @brief Options for the generic sampling loop.
 */
struct SamplerOptions {
    int block_len = 50;

    /** Stop after this many consecutive steps without new coverage. Unset means no coverage-based stopping. */
    std::optional<int> tau = 50;

    /** Hard cap on the number of sampled rows. */
    std::optional<std::size_t> max_rows;

    NoveltyReference novelty = NoveltyReference::cumulative;

    std::uint64_t seed = 0;

    std::function<void(const SampleEvent&)> trace;

    /** Extra stopping predicate, consulted after every step. */
    std::function<bool(const CoverageState&)> stop_when;
};

/**
 * @brief Sampled rows plus the final coverage bookkeeping.
 */
struct SamplingResult {
    SparseAffinityRows rows;
    std::vector<double> cumulative;
    int final_no_change_count = 0;
    bool exhausted = false;
};

/**
 * Adaptive sampling loop over an arbitrary row source.
 *
 * `source(anchor)` must return the sparse affinity row of `anchor` as a `SparseRow`.
 * Block `j` (0-based) draws from its own random stream `Rng(seed, j)`, so the draw sequence depends only on the seed and the coverage history.
 */
template <class RowSource>
SamplingResult run_adaptive_sampling(Index n, RowSource&& source, const SamplerOptions& opt) {
    if (n == 0) {
        throw InputError("cannot sample from an empty dataset");
    }
    if (opt.tau && *opt.tau < 1) {
        throw InputError("tau must be at least 1");
    }
    CoverageState state(n, opt.block_len, opt.novelty);
    SamplingResult result;
    result.rows = SparseAffinityRows(n);

    std::size_t block_id = 0;
    Rng rng(opt.seed, block_id);
    while (!state.exhausted()) {
        if (opt.max_rows && state.sampled().size() >= *opt.max_rows) {
            break;
        }
        if (state.blocks_completed() != block_id) {
            block_id = state.blocks_completed();
            rng = Rng(opt.seed, block_id);
        }
        const auto dist = sampling_distribution(state.block(), state.sampled_flags());
        const Index anchor = draw_index(dist, rng);
        SparseRow row = source(anchor);
        const auto delta = state.update(anchor, row.view());
        result.rows.push_row(anchor, row);
        if (opt.trace) {
            opt.trace(SampleEvent{state.sampled().size() - 1, anchor, delta, row.nnz()});
        }
        if (opt.tau && state.no_change_count() >= *opt.tau) {
            break;
        }
        if (opt.stop_when && opt.stop_when(state)) {
            break;
        }
    }

    result.cumulative = state.cumulative();
    result.final_no_change_count = state.no_change_count();
    result.exhausted = state.exhausted();
    return result;
}

/**
 * Sample batch-aware affinity rows of a profile matrix until `tau` consecutive steps add no coverage, or every row has been sampled.
 */
inline SamplingResult run_sampling(const ProfileMatrix& profiles, const BatchLabels& batches, const HyperParams& params,
                                   std::function<void(const SampleEvent&)> trace = {}) {
    validate_inputs(profiles, batches, params);
    SamplerOptions opt;
    opt.block_len = params.block_len;
    opt.tau = params.tau;
    opt.novelty = params.novelty;
    opt.seed = params.seed;
    opt.trace = std::move(trace);
    return run_adaptive_sampling(profiles.rows(), [&](Index anchor) { return compute_sparse_row(profiles, batches, anchor, params.k); }, opt);
}

}

#endif
