#pragma once

#include <map>
#include <optional>
#include <string>

#include "burst/types.hpp"

namespace burst::metrics {

struct LossValues {
    double charbonnier = 0.0;
    double fft_l1 = 0.0;
    double composite = 0.0; // L1 + 50*gradient-L1 + 0.8*YUV-L1 of the 8x pools
};

struct SceneScore {
    std::string scene_id;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::optional<LossValues> losses;
};

struct MetricsReport {
    std::vector<SceneScore> scenes;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;
    int n_scenes = 0;
    int bit_depth = 8;
};

// Both images quantized to 8 bits; MSE over all pixels and channels;
// 10*log10(255^2 / MSE), capped at 100 dB for identical images.
double psnr_8bit(const RgbImage& pred, const RgbImage& gt);

// SSIM on the 8-bit grayscale pair: 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, L=255, averaged over fully interior window positions.
double ssim_gray(const RgbImage& pred, const RgbImage& gt);

// mean sqrt((p-g)^2 + eps^2)
double charbonnier(const RgbImage& pred, const RgbImage& gt, double eps);

// Mean |delta| over the real and imaginary parts of the per-channel 2-D DFT
// spectra (unnormalized forward transform, mean over C*H*W*2 terms).
double fft_l1(const RgbImage& pred, const RgbImage& gt);

// L1 + 50 * L1 of forward-difference gradients + 0.8 * L1 in BT.601 YUV of
// the 8x mean-pooled pair.
double composite_grad_yuv(const RgbImage& pred, const RgbImage& gt,
                          const RgbImage& pred_ds8, const RgbImage& gt_ds8);

// 8x mean pooling with partial cells at the right/bottom edges.
RgbImage downsample8(const RgbImage& img);

struct EvalOptions {
    bool with_losses = false;
    int threads = 0;
};

// Scene IDs discovered as <dir>/<id>.tif or <dir>/<id>/gt.tif; both sides
// must cover the same set of IDs.
MetricsReport evaluate_set(const std::string& pred_dir, const std::string& gt_dir,
                           const EvalOptions& opts);

} // namespace burst::metrics
