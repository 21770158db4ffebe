#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace burst::kernels {

// Accumulator pair for masked sum-of-absolute-differences.
struct SadResult {
    double sad = 0.0;    // sum of m * |a - b|
    double weight = 0.0; // sum of m
};

// 2x2 normal equations accumulated by one Lucas-Kanade sweep.
struct LkAccum {
    double a00 = 0.0, a01 = 0.0, a11 = 0.0; // sum m*gx*gx, m*gx*gy, m*gy*gy
    double b0 = 0.0, b1 = 0.0;              // sum m*g*(tgt - ref)
    double weight = 0.0;
};

// Data-parallel inner loops used by the pipeline. Scalar reference versions
// define the semantics; the AVX2 variants must agree (bit-exact for the
// element-wise ops and the warp gather, tight tolerance for reductions,
// which reassociate sums).
struct Ops {
    const char* name;

    // y[i] = x[i] * gain
    void (*scale)(const float* x, float gain, float* y, size_t n);
    // y[i] = clamp(x[i], lo, hi)
    void (*clamp)(const float* x, float lo, float hi, float* y, size_t n);
    // y[i] = (a[i] + b[i] + c[i] + d[i]) * 0.25f
    void (*avg4)(const float* a, const float* b, const float* c, const float* d, float* y, size_t n);
    // out[i] = (r0[2i] + r0[2i+1] + r1[2i] + r1[2i+1]) * 0.25f  (2x mean pool row)
    void (*downsample2x_row)(const float* r0, const float* r1, float* out, size_t n_out);
    // acc_v[i] += w[i] * v[i]; acc_w[i] += w[i]
    void (*weighted_accumulate)(const float* v, const float* w, float* acc_v, float* acc_w, size_t n);
    // sum x[i]
    double (*sum)(const float* x, size_t n);
    // sum (a[i]-b[i])^2
    double (*sumsq_diff)(const float* a, const float* b, size_t n);

    // Masked SAD over a w x h window. Strides are in elements.
    SadResult (*sad_masked)(const float* a, int a_stride, const float* b, int b_stride,
                            const float* ma, int ma_stride, const float* mb, int mb_stride,
                            int w, int h);

    // Warp one output row: out[i] = bilinear(img, i + dx[i], y + dy[i]) with
    // zero padding outside img; mask[i] = sum of in-frame tap weights.
    void (*warp_row)(const float* img, int width, int height,
                     const float* dx, const float* dy, int y,
                     float* out, float* mask, size_t n);

    // Translational LK sweep over a tile: for tile pixel (i,j), sample tgt and
    // its gradient images at (x0+i, y0+j) with replicate-border bilinear
    // interpolation and accumulate the weighted normal equations against
    // ref[j*ref_stride + i].
    void (*lk_accumulate)(const float* tgt, const float* gx, const float* gy,
                          int width, int height,
                          const float* ref, int ref_stride,
                          const float* m, int m_stride,
                          int tile_w, int tile_h, float x0, float y0,
                          LkAccum* acc);
};

const Ops& scalar_ops();
#if defined(BURST_HAVE_AVX2)
const Ops& avx2_ops();
#endif

// Active implementation: picked once per process from CPU capability, or
// pinned via the BURST_SIMD environment variable ("scalar", "avx2", "auto").
const Ops& ops();
const char* active_name();

// Force a specific implementation (tests). Returns false if unavailable.
bool force_impl(const std::string& name);

} // namespace burst::kernels
