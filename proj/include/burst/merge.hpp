#pragma once

#include "burst/align.hpp"
#include "burst/scene.hpp"

namespace burst::merge {

struct MergeConfig {
    double eps = 1e-8;        // zero-weight fallback threshold
    double sat_thresh = 0.98; // classifies all-saturated pixels for re-admission
};

// Per-frame, per-channel inverse-variance weights at packed resolution.
struct MergeWeights {
    std::vector<PackedRaw> w;
    bool uniform = false; // noise model unavailable, masks used as-is
};

// Exposure-normalized linear radiance with per-pixel confidence.
struct MergedRadiance {
    PackedRaw radiance;
    ImagePlane confidence;
};

// Frame indices per exposure group (Low, Mid, High), order-preserving.
// Fails unless each group holds exactly three frames.
std::array<std::vector<int>, 3> group_exposures(const BurstScene& scene);

// w_k = mask_k / var_k with var_k(p) = xhat(p) * n_k / W + read_sigma^2 * n_k^2,
// where n_k is the normalization gain applied to frame k and xhat is the
// per-pixel median of the normalized frames over valid samples. Pixels
// saturated everywhere re-admit the lowest-gain trio at epsilon weight so
// clipped highlights resolve to the short exposure.
MergeWeights merge_weights(const align::AlignedBurst& aligned,
                           const std::vector<ExposureGroup>& groups,
                           const NoiseParams& noise, bool noise_known,
                           const MergeConfig& cfg);

// out(p) = sum_k w_k(p) f_k(p) / sum_k w_k(p); where the weight sum falls
// below eps the reference value passes through with zero confidence.
MergedRadiance merge(const std::vector<PackedRaw>& frames, const MergeWeights& weights,
                     const PackedRaw& reference, const MergeConfig& cfg);

} // namespace burst::merge
