#pragma once

#include "burst/scene.hpp"

namespace burst::synth {

// Linear scene radiance; nonnegative, may exceed 1 so highlights clip
// under high exposure gain.
struct HdrImage {
    std::array<ImagePlane, 3> ch;

    int width() const { return ch[0].width; }
    int height() const { return ch[0].height; }
};

// Deterministic test content: value-noise octaves, a global ramp, soft
// checker tiles, glyph-like strokes and highlight blobs, quantile-mapped so
// the bright/dark decile ratio comfortably exceeds 16:1.
HdrImage procedural_hdr(uint64_t seed, int width, int height);

// Inverse-mapped bilinear resampling about the image center; samples from
// outside the frame are zero.
ImagePlane apply_rigid(const ImagePlane& plane, const RigidTransform& t);

// 2-D convolution with replicate borders. Kernel taps must sum to 1.
ImagePlane apply_blur(const ImagePlane& plane, const BlurKernel& k);

// Sample each pixel's CFA channel; no filtering.
RawFrame mosaic(const std::array<ImagePlane, 3>& rgb, CfaPattern cfa);

// y = Poisson(x * fullwell) / fullwell + N(0, read_sigma^2), clamped to
// [0,1]. fullwell <= 0 disables shot noise. Exact Poisson sampling; the
// rng_key seeds independent per-pixel streams.
ImagePlane add_poisson_gaussian(const ImagePlane& plane, const NoiseParams& p, uint64_t rng_key);

// Full capture chain: rigid -> blur -> gain & sensor clamp -> mosaic ->
// noise -> 16-bit quantization.
RawFrame synth_frame(const HdrImage& hdr, const RigidTransform& t, double gain,
                     const BlurKernel& k, const NoiseParams& p, CfaPattern cfa,
                     uint64_t rng_key);

// Ground truth: the reference-aligned radiance at mid exposure, clipped to
// the usable headroom, taken through the same mosaic/demosaic/tone-map path
// the restorer uses, at 16 bits.
RgbImage render_gt(const HdrImage& hdr, const std::array<double, 3>& gains, CfaPattern cfa);

BurstScene synth_scene(const HdrImage& hdr, const SceneSpec& spec);

// Randomized degradation recipe within the given ranges.
struct SynthParams {
    std::array<double, 3> gains{1.0, 4.0, 16.0};
    double max_shift = 8.0;   // |tx|,|ty| bound, pixels
    double max_rot_deg = 1.0; // |theta| bound, degrees
    int max_blur_len = 7;     // blur length in [1, max]
    NoiseParams noise;
    CfaPattern cfa = CfaPattern::RGGB;
};

SceneSpec random_scene_spec(uint64_t seed, int width, int height, const SynthParams& params);

} // namespace burst::synth
