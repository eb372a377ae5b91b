#ifndef BALANS_PIPELINE_HPP
#define BALANS_PIPELINE_HPP

#include <functional>
#include <optional>
#include <vector>

#include "core.hpp"
#include "kernel.hpp"
#include "preprocess.hpp"
#include "sampler.hpp"
#include "smoother.hpp"

/**
 * @file pipeline.hpp
 *
 * @brief End-to-end batch correction: preprocessing, adaptive row sampling, smoothing.
 */

namespace balans {

struct CorrectionOptions {
    HyperParams params;

    /** Preprocessing applied before affinities are computed. PCA is controlled by `params.pca_dims`. */
    PreprocessOptions preprocess;

    /**
     * Smooth the preprocessed features instead of the input features.
     * By default the operator learned on the preprocessed representation is applied to the raw input columns,
     * so the output has the same columns as the input.
     */
    bool smooth_preprocessed = false;

    int threads = 1;

    std::function<void(const SampleEvent&)> trace;
};

struct CorrectionResult {
    Matrix corrected;

    /** Input columns present in `corrected`. */
    std::vector<Index> columns;

    SparseAffinityRows rows;

    /** Samples that no sampled row reached; their output equals their input. */
    std::size_t uncovered = 0;

    /** Sampling ended because every sample was drawn, not by the stopping rule. */
    bool exhausted = false;
};

inline CorrectionResult correct(const ProfileMatrix& profiles, const BatchLabels& batches, const CorrectionOptions& opt,
                                const std::optional<ControlMask>& controls = std::nullopt) {
    validate_inputs(profiles, batches, opt.params);

    auto pre = opt.preprocess;
    pre.pca_dims = opt.params.pca_dims;
    const ControlMask mask = controls ? *controls : ControlMask::all_controls(batches);

    CorrectionResult out;
    std::optional<PreprocessResult> prepared;
    if (pre.any()) {
        if (pre.variation_threshold || pre.mad_normalize) {
            if (profiles.rows() < 2) {
                throw InputError("control-based preprocessing needs at least two samples");
            }
        }
        prepared = preprocess(profiles, mask, pre);
    }

    const ProfileMatrix embedding = prepared ? ProfileMatrix(prepared->embedding) : profiles;
    auto sampled = run_sampling(embedding, batches, opt.params, opt.trace);
    out.rows = std::move(sampled.rows);
    out.exhausted = sampled.exhausted;

    const auto op = row_normalize(out.rows);
    if (prepared && opt.smooth_preprocessed) {
        out.columns = prepared->retained;
        auto res = smooth(op, prepared->features, opt.threads);
        out.corrected = std::move(res.profiles);
        out.uncovered = res.uncovered;
    } else {
        out.columns.resize(profiles.cols());
        for (Index c = 0; c < profiles.cols(); ++c) {
            out.columns[c] = c;
        }
        auto res = smooth(op, profiles, opt.threads);
        out.corrected = std::move(res.profiles);
        out.uncovered = res.uncovered;
    }
    return out;
}

}

#endif
