#pragma once

#include "burst/align.hpp"
#include "burst/merge.hpp"
#include "burst/scene.hpp"

namespace burst::isp {

// Per-channel bilinear interpolation of missing sites, replicate borders.
// Measured samples pass through unchanged; output is linear and unclamped.
RgbImage demosaic_bilinear(const ImagePlane& mosaic, CfaPattern cfa);

// v_out = clamp(v / headroom, 0, 1) ^ (1/2.2), evaluated in double.
RgbImage tone_map(const RgbImage& linear, double headroom);

struct RestoreConfig {
    align::AlignConfig align;
    merge::MergeConfig merge;
    bool reference_only = false; // ISP over frame 0 only (baseline)
    double headroom = 0.0;       // 0: use manifest g_high / g_mid
    int threads = 0;
};

struct RestoreResult {
    RgbImage image; // 16-bit display render
    bool uniform_weights = false;
    std::vector<double> gains; // normalization gains used
};

// pack -> align_burst -> merge -> unpack -> demosaic -> tone map -> 16-bit.
RestoreResult restore_scene(const BurstScene& scene, const RestoreConfig& cfg);

// Overlapping tiles restored independently (tile-local statistics) and
// blended with a raised-cosine window across the overlap.
RgbImage tiled_restore(const BurstScene& scene, int tile, int overlap, const RestoreConfig& cfg);

} // namespace burst::isp
