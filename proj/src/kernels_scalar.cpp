#include "burst/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace burst::kernels {
namespace {

void scale_scalar(const float* x, float gain, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i)
        y[i] = x[i] * gain;
}

void clamp_scalar(const float* x, float lo, float hi, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i)
        y[i] = std::min(std::max(x[i], lo), hi);
}

void avg4_scalar(const float* a, const float* b, const float* c, const float* d, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i)
        y[i] = (a[i] + b[i] + c[i] + d[i]) * 0.25f;
}

void downsample2x_row_scalar(const float* r0, const float* r1, float* out, size_t n_out) {
    for (size_t i = 0; i < n_out; ++i)
        out[i] = (r0[2 * i] + r0[2 * i + 1] + r1[2 * i] + r1[2 * i + 1]) * 0.25f;
}

void weighted_accumulate_scalar(const float* v, const float* w, float* acc_v, float* acc_w, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        acc_v[i] += w[i] * v[i];
        acc_w[i] += w[i];
    }
}

double sum_scalar(const float* x, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
        s += x[i];
    return s;
}

double sumsq_diff_scalar(const float* a, const float* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

SadResult sad_masked_scalar(const float* a, int a_stride, const float* b, int b_stride,
                            const float* ma, int ma_stride, const float* mb, int mb_stride,
                            int w, int h) {
    SadResult r;
    for (int y = 0; y < h; ++y) {
        const float* ar = a + static_cast<ptrdiff_t>(y) * a_stride;
        const float* br = b + static_cast<ptrdiff_t>(y) * b_stride;
        const float* mar = ma + static_cast<ptrdiff_t>(y) * ma_stride;
        const float* mbr = mb + static_cast<ptrdiff_t>(y) * mb_stride;
        double row_sad = 0.0;
        double row_w = 0.0;
        for (int x = 0; x < w; ++x) {
            float m = mar[x] * mbr[x];
            row_sad += m * std::fabs(ar[x] - br[x]);
            row_w += m;
        }
        r.sad += row_sad;
        r.weight += row_w;
    }
    return r;
}

void warp_row_scalar(const float* img, int width, int height,
                     const float* dx, const float* dy, int y,
                     float* out, float* mask, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        float sx = static_cast<float>(i) + dx[i];
        float sy = static_cast<float>(y) + dy[i];
        float fx = std::floor(sx);
        float fy = std::floor(sy);
        int x0 = static_cast<int>(fx);
        int y0 = static_cast<int>(fy);
        float ax = sx - fx;
        float ay = sy - fy;
        float w00 = (1.0f - ax) * (1.0f - ay);
        float w10 = ax * (1.0f - ay);
        float w01 = (1.0f - ax) * ay;
        float w11 = ax * ay;
        float v = 0.0f;
        float m = 0.0f;
        auto tap = [&](int tx, int ty, float tw) {
            if (tx >= 0 && tx < width && ty >= 0 && ty < height) {
                v += tw * img[static_cast<size_t>(ty) * width + tx];
                m += tw;
            }
        };
        tap(x0, y0, w00);
        tap(x0 + 1, y0, w10);
        tap(x0, y0 + 1, w01);
        tap(x0 + 1, y0 + 1, w11);
        out[i] = v;
        mask[i] = m;
    }
}

void lk_accumulate_scalar(const float* tgt, const float* gx, const float* gy,
                          int width, int height,
                          const float* ref, int ref_stride,
                          const float* m, int m_stride,
                          int tile_w, int tile_h, float x0, float y0,
                          LkAccum* acc) {
    for (int j = 0; j < tile_h; ++j) {
        const float* ref_row = ref + static_cast<ptrdiff_t>(j) * ref_stride;
        const float* m_row = m + static_cast<ptrdiff_t>(j) * m_stride;
        for (int i = 0; i < tile_w; ++i) {
            float mw = m_row[i];
            if (mw <= 0.0f)
                continue;
            float sx = std::min(std::max(x0 + static_cast<float>(i), 0.0f), static_cast<float>(width - 1));
            float sy = std::min(std::max(y0 + static_cast<float>(j), 0.0f), static_cast<float>(height - 1));
            int px = static_cast<int>(sx);
            int py = static_cast<int>(sy);
            px = std::min(px, width - 2);
            py = std::min(py, height - 2);
            float ax = sx - static_cast<float>(px);
            float ay = sy - static_cast<float>(py);
            float w00 = (1.0f - ax) * (1.0f - ay);
            float w10 = ax * (1.0f - ay);
            float w01 = (1.0f - ax) * ay;
            float w11 = ax * ay;
            size_t i00 = static_cast<size_t>(py) * width + px;
            size_t i01 = i00 + width;
            auto sample = [&](const float* p) {
                return w00 * p[i00] + w10 * p[i00 + 1] + w01 * p[i01] + w11 * p[i01 + 1];
            };
            double t = sample(tgt);
            double dgx = sample(gx);
            double dgy = sample(gy);
            double r = t - static_cast<double>(ref_row[i]);
            double wm = mw;
            acc->a00 += wm * dgx * dgx;
            acc->a01 += wm * dgx * dgy;
            acc->a11 += wm * dgy * dgy;
            acc->b0 += wm * dgx * r;
            acc->b1 += wm * dgy * r;
            acc->weight += wm;
        }
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        scale_scalar,
        clamp_scalar,
        avg4_scalar,
        downsample2x_row_scalar,
        weighted_accumulate_scalar,
        sum_scalar,
        sumsq_diff_scalar,
        sad_masked_scalar,
        warp_row_scalar,
        lk_accumulate_scalar,
    };
    return ops;
}

} // namespace burst::kernels
