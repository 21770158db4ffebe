#include "burst/merge.hpp"

#include <algorithm>
#include <cmath>

#include "burst/kernels.hpp"

namespace burst::merge {

std::array<std::vector<int>, 3> group_exposures(const BurstScene& scene) {
    if (scene.frames.size() != 9)
        fail_validation("group_exposures: expected 9 frames");
    std::array<std::vector<int>, 3> groups;
    for (int k = 0; k < 9; ++k)
        groups[static_cast<int>(scene.frames[k].group)].push_back(k);
    for (int g = 0; g < 3; ++g)
        if (groups[g].size() != 3)
            fail_validation(std::string("group_exposures: exposure group '") +
                            exposure_group_name(static_cast<ExposureGroup>(g)) + "' has " +
                            std::to_string(groups[g].size()) + " frames, expected 3");
    return groups;
}

MergeWeights merge_weights(const align::AlignedBurst& aligned,
                           const std::vector<ExposureGroup>& groups,
                           const NoiseParams& noise, bool noise_known,
                           const MergeConfig& cfg) {
    const int n = static_cast<int>(aligned.frames.size());
    if (n == 0 || n > 16 || static_cast<int>(groups.size()) != n)
        fail_validation("merge_weights: group metadata disagrees with frame count");
    const int pw = aligned.frames[0].width();
    const int ph = aligned.frames[0].height();
    const size_t npx = static_cast<size_t>(pw) * ph;

    MergeWeights mw;
    mw.w.resize(n);
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < 4; ++c)
            mw.w[k].planes[c] = ImagePlane(pw, ph);

    const bool shot = noise.shot_fullwell > 0 && std::isfinite(noise.shot_fullwell);
    mw.uniform = !noise_known;

    if (mw.uniform) {
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < 4; ++c)
                mw.w[k].planes[c].data = aligned.masks[k].data;
    } else {
        const double read_var = noise.read_sigma * noise.read_sigma;
        std::array<float, 16> vals; // bounded by frame count
        for (size_t i = 0; i < npx; ++i) {
            for (int c = 0; c < 4; ++c) {
                int nv = 0;
                for (int k = 0; k < n; ++k)
                    if (aligned.masks[k].data[i] > 0.0f)
                        vals[nv++] = aligned.frames[k].planes[c].data[i];
                double xhat;
                if (nv == 0) {
                    xhat = aligned.frames[0].planes[c].data[i];
                } else {
                    auto mid = vals.begin() + (nv - 1) / 2;
                    std::nth_element(vals.begin(), mid, vals.begin() + nv);
                    xhat = std::max(0.0f, *mid);
                }
                for (int k = 0; k < n; ++k) {
                    const double nk = aligned.gains[k];
                    // Variance of the normalized sample under the capture
                    // model: shot term scales with the applied gain, read
                    // noise with its square.
                    double var = read_var * nk * nk;
                    if (shot)
                        var += xhat * nk / noise.shot_fullwell;
                    var = std::max(var, 1e-12);
                    mw.w[k].planes[c].data[i] =
                        static_cast<float>(aligned.masks[k].data[i] / var);
                }
            }
        }
    }

    // Pixels saturated in every frame: re-admit the lowest-gain trio at
    // epsilon weight so clipped highlights resolve to the short exposure
    // instead of the (equally clipped, but darker-scaled) reference.
    std::vector<int> low_frames;
    for (int k = 0; k < n; ++k)
        if (groups[k] == ExposureGroup::Low)
            low_frames.push_back(k);
    if (!low_frames.empty()) {
        for (size_t i = 0; i < npx; ++i) {
            float msum = 0.0f;
            for (int k = 0; k < n; ++k)
                msum += aligned.masks[k].data[i];
            if (msum > 0.0f)
                continue;
            if (aligned.ref_prenorm_max.data[i] < static_cast<float>(cfg.sat_thresh))
                continue;
            for (int k : low_frames) {
                const float pad = aligned.padding[k].data[i];
                if (pad <= 0.5f)
                    continue;
                for (int c = 0; c < 4; ++c)
                    mw.w[k].planes[c].data[i] = 1e-6f * pad;
            }
        }
    }
    return mw;
}

MergedRadiance merge(const std::vector<PackedRaw>& frames, const MergeWeights& weights,
                     const PackedRaw& reference, const MergeConfig& cfg) {
    const int n = static_cast<int>(frames.size());
    if (n == 0 || weights.w.size() != frames.size())
        fail_validation("merge: weights disagree with frame count");
    const int pw = frames[0].width();
    const int ph = frames[0].height();
    const size_t npx = static_cast<size_t>(pw) * ph;

    MergedRadiance out;
    out.confidence = ImagePlane(pw, ph);
    ImagePlane acc_w_first; // channel-0 weight sum doubles as confidence source
    for (int c = 0; c < 4; ++c) {
        ImagePlane acc_v(pw, ph, 0.0f);
        ImagePlane acc_w(pw, ph, 0.0f);
        for (int k = 0; k < n; ++k)
            kernels::ops().weighted_accumulate(frames[k].planes[c].data.data(),
                                               weights.w[k].planes[c].data.data(),
                                               acc_v.data.data(), acc_w.data.data(), npx);
        ImagePlane merged(pw, ph);
        for (size_t i = 0; i < npx; ++i) {
            if (acc_w.data[i] < static_cast<float>(cfg.eps))
                merged.data[i] = reference.planes[c].data[i];
            else
                merged.data[i] = acc_v.data[i] / acc_w.data[i];
        }
        out.radiance.planes[c] = std::move(merged);
        if (c == 0)
            acc_w_first = std::move(acc_w);
    }

    float max_w = 0.0f;
    for (float v : acc_w_first.data)
        max_w = std::max(max_w, v);
    if (max_w > 0.0f)
        for (size_t i = 0; i < npx; ++i) {
            const float w = acc_w_first.data[i];
            out.confidence.data[i] = w < static_cast<float>(cfg.eps) ? 0.0f : w / max_w;
        }
    return out;
}

} // namespace burst::merge
