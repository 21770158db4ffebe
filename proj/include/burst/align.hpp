#pragma once

#include "burst/scene.hpp"

namespace burst::align {

struct GainEstimate {
    double gain = 1.0;
    double inlier_fraction = 0.0;
};

// Per-pixel weights in [0,1] at packed resolution; 0 marks saturated,
// dead-black or out-of-frame samples.
using ValidityMask = ImagePlane;

// Dense displacement at packed resolution, pixels.
struct FlowField {
    ImagePlane dx;
    ImagePlane dy;
};

struct FlowConfig {
    int levels = 3;
    int radius = 4; // integer search radius per level
    int block = 16; // tile edge, packed pixels
    int lk_iters = 5;
    double lk_damping = 1e-3;

    // Displacement budget at the finest level, pixels.
    double max_displacement() const {
        return static_cast<double>(radius) * ((1 << levels) - 1) + 2.0;
    }
};

struct AlignConfig {
    FlowConfig flow;
    double sat_thresh = 0.98;
    double floor_thresh = 0.02;
    double ramp_width = 0.02;
    bool estimate_gains = true; // false: use manifest gain ratios
    bool run_flow = true;       // false: identity flow for every frame
    int threads = 0;            // 0 = hardware concurrency
};

// Median ratio reference/target over pixels unclipped in both frames.
// Throws a validation error when fewer than 1% of pixels qualify.
GainEstimate estimate_exposure_gain(const PackedRaw& target, const PackedRaw& reference_longest,
                                    double sat_thresh, double floor_thresh);

// Multiply by the gain (no clamping, headroom is kept) and build the
// validity mask from the pre-normalization samples: hard zero at or past
// the thresholds, linear ramp of the given width to full validity.
std::pair<PackedRaw, ValidityMask> normalize_exposure(const PackedRaw& frame, const GainEstimate& g,
                                                      double sat_thresh, double floor_thresh,
                                                      double ramp_width);

// Coarse-to-fine block matching plus Lucas-Kanade subpixel refinement on
// the packed luminance proxy; returns a dense field at packed resolution.
FlowField estimate_flow(const PackedRaw& ref, const PackedRaw& tgt, const FlowConfig& cfg,
                        const ValidityMask* ref_mask = nullptr,
                        const ValidityMask* tgt_mask = nullptr);

// out(x,y) = bilinear sample of tgt at (x+dx, y+dy); zero-padded outside,
// with the fractional in-frame tap weight as mask.
std::pair<PackedRaw, ValidityMask> warp_bilinear(const PackedRaw& tgt, const FlowField& flow);

struct AlignedBurst {
    std::vector<PackedRaw> frames;      // normalized to the longest-exposure scale, warped
    std::vector<ValidityMask> masks;    // saturation validity x padding
    std::vector<ValidityMask> padding;  // padding-only component
    std::vector<FlowField> flows;
    std::vector<double> gains;          // normalization gain applied per frame
    std::vector<double> inlier_fractions;
    ImagePlane ref_prenorm_max;         // per-pixel max channel of the reference, pre-normalization
    bool gains_estimated = true;
};

AlignedBurst align_burst(const BurstScene& scene, const AlignConfig& cfg);

} // namespace burst::align
