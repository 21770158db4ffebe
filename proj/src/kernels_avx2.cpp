#include "burst/kernels.hpp"

#if defined(BURST_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace burst::kernels {
namespace {

inline double hsum_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline double hsum_ps_to_double(__m256 v) {
    __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    return hsum_pd(_mm256_add_pd(lo, hi));
}

void scale_avx2(const float* x, float gain, float* y, size_t n) {
    size_t i = 0;
    __m256 g = _mm256_set1_ps(gain);
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), g));
    for (; i < n; ++i)
        y[i] = x[i] * gain;
}

void clamp_avx2(const float* x, float lo, float hi, float* y, size_t n) {
    size_t i = 0;
    __m256 vlo = _mm256_set1_ps(lo);
    __m256 vhi = _mm256_set1_ps(hi);
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_min_ps(_mm256_max_ps(v, vlo), vhi));
    }
    for (; i < n; ++i)
        y[i] = std::min(std::max(x[i], lo), hi);
}

void avg4_avx2(const float* a, const float* b, const float* c, const float* d, float* y, size_t n) {
    size_t i = 0;
    __m256 q = _mm256_set1_ps(0.25f);
    for (; i + 8 <= n; i += 8) {
        __m256 s = _mm256_add_ps(_mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)),
                                 _mm256_add_ps(_mm256_loadu_ps(c + i), _mm256_loadu_ps(d + i)));
        _mm256_storeu_ps(y + i, _mm256_mul_ps(s, q));
    }
    for (; i < n; ++i)
        y[i] = (a[i] + b[i] + c[i] + d[i]) * 0.25f;
}

void downsample2x_row_avx2(const float* r0, const float* r1, float* out, size_t n_out) {
    size_t i = 0;
    __m256 q = _mm256_set1_ps(0.25f);
    for (; i + 8 <= n_out; i += 8) {
        // Pairwise sums of 16 consecutive inputs from each row.
        __m256 a0 = _mm256_loadu_ps(r0 + 2 * i);
        __m256 a1 = _mm256_loadu_ps(r0 + 2 * i + 8);
        __m256 b0 = _mm256_loadu_ps(r1 + 2 * i);
        __m256 b1 = _mm256_loadu_ps(r1 + 2 * i + 8);
        __m256 s0 = _mm256_add_ps(a0, b0); // column sums, interleaved pairs
        __m256 s1 = _mm256_add_ps(a1, b1);
        // hadd within 128-bit lanes, then fix lane order.
        __m256 h = _mm256_hadd_ps(s0, s1); // [p0 p1 q0 q1 | p2 p3 q2 q3]
        __m256d hd = _mm256_castps_pd(h);
        __m256 fixed = _mm256_castpd_ps(_mm256_permute4x64_pd(hd, _MM_SHUFFLE(3, 1, 2, 0)));
        _mm256_storeu_ps(out + i, _mm256_mul_ps(fixed, q));
    }
    for (; i < n_out; ++i)
        out[i] = (r0[2 * i] + r0[2 * i + 1] + r1[2 * i] + r1[2 * i + 1]) * 0.25f;
}

void weighted_accumulate_avx2(const float* v, const float* w, float* acc_v, float* acc_w, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 wv = _mm256_loadu_ps(w + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        _mm256_storeu_ps(acc_v + i, _mm256_add_ps(_mm256_loadu_ps(acc_v + i), _mm256_mul_ps(wv, vv)));
        _mm256_storeu_ps(acc_w + i, _mm256_add_ps(_mm256_loadu_ps(acc_w + i), wv));
    }
    for (; i < n; ++i) {
        acc_v[i] += w[i] * v[i];
        acc_w[i] += w[i];
    }
}

double sum_avx2(const float* x, size_t n) {
    size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double s = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        s += x[i];
    return s;
}

double sumsq_diff_avx2(const float* a, const float* b, size_t n) {
    size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        __m256 av = _mm256_loadu_ps(a + i);
        __m256 bv = _mm256_loadu_ps(b + i);
        __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(av)),
                                   _mm256_cvtps_pd(_mm256_castps256_ps128(bv)));
        __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(av, 1)),
                                   _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double s = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

SadResult sad_masked_avx2(const float* a, int a_stride, const float* b, int b_stride,
                          const float* ma, int ma_stride, const float* mb, int mb_stride,
                          int w, int h) {
    SadResult r;
    const __m256 sign_mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
    for (int y = 0; y < h; ++y) {
        const float* ar = a + static_cast<ptrdiff_t>(y) * a_stride;
        const float* br = b + static_cast<ptrdiff_t>(y) * b_stride;
        const float* mar = ma + static_cast<ptrdiff_t>(y) * ma_stride;
        const float* mbr = mb + static_cast<ptrdiff_t>(y) * mb_stride;
        __m256 sad_acc = _mm256_setzero_ps();
        __m256 w_acc = _mm256_setzero_ps();
        int x = 0;
        for (; x + 8 <= w; x += 8) {
            __m256 m = _mm256_mul_ps(_mm256_loadu_ps(mar + x), _mm256_loadu_ps(mbr + x));
            __m256 d = _mm256_and_ps(_mm256_sub_ps(_mm256_loadu_ps(ar + x), _mm256_loadu_ps(br + x)), sign_mask);
            sad_acc = _mm256_fmadd_ps(m, d, sad_acc);
            w_acc = _mm256_add_ps(w_acc, m);
        }
        double row_sad = hsum_ps_to_double(sad_acc);
        double row_w = hsum_ps_to_double(w_acc);
        for (; x < w; ++x) {
            float m = mar[x] * mbr[x];
            row_sad += m * std::fabs(ar[x] - br[x]);
            row_w += m;
        }
        r.sad += row_sad;
        r.weight += row_w;
    }
    return r;
}

void warp_row_avx2(const float* img, int width, int height,
                   const float* dx, const float* dy, int y,
                   float* out, float* mask, size_t n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256i vw = _mm256_set1_epi32(width);
    const __m256i vh = _mm256_set1_epi32(height);
    const __m256i zero = _mm256_setzero_si256();
    const __m256 fy_base = _mm256_set1_ps(static_cast<float>(y));
    alignas(32) const float lane_idx[8] = {0, 1, 2, 3, 4, 5, 6, 7};
    __m256 lanes = _mm256_load_ps(lane_idx);

    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 sx = _mm256_add_ps(_mm256_add_ps(lanes, _mm256_set1_ps(static_cast<float>(i))),
                                  _mm256_loadu_ps(dx + i));
        __m256 sy = _mm256_add_ps(fy_base, _mm256_loadu_ps(dy + i));
        __m256 fx = _mm256_floor_ps(sx);
        __m256 fy = _mm256_floor_ps(sy);
        __m256i x0 = _mm256_cvttps_epi32(fx);
        __m256i y0 = _mm256_cvttps_epi32(fy);
        __m256 ax = _mm256_sub_ps(sx, fx);
        __m256 ay = _mm256_sub_ps(sy, fy);
        __m256 bx = _mm256_sub_ps(one, ax);
        __m256 by = _mm256_sub_ps(one, ay);
        __m256 w00 = _mm256_mul_ps(bx, by);
        __m256 w10 = _mm256_mul_ps(ax, by);
        __m256 w01 = _mm256_mul_ps(bx, ay);
        __m256 w11 = _mm256_mul_ps(ax, ay);

        __m256 v = _mm256_setzero_ps();
        __m256 m = _mm256_setzero_ps();
        auto tap = [&](__m256i tx, __m256i ty, __m256 tw) {
            __m256i inside = _mm256_and_si256(
                _mm256_and_si256(_mm256_cmpgt_epi32(vw, tx), _mm256_cmpgt_epi32(vh, ty)),
                _mm256_and_si256(_mm256_cmpgt_epi32(tx, _mm256_sub_epi32(zero, _mm256_set1_epi32(1))),
                                 _mm256_cmpgt_epi32(ty, _mm256_sub_epi32(zero, _mm256_set1_epi32(1)))));
            __m256 fmask = _mm256_castsi256_ps(inside);
            __m256i idx = _mm256_add_epi32(_mm256_mullo_epi32(ty, vw), tx);
            __m256 g = _mm256_mask_i32gather_ps(_mm256_setzero_ps(), img, idx, fmask, 4);
            __m256 wm = _mm256_and_ps(tw, fmask);
            v = _mm256_add_ps(v, _mm256_mul_ps(wm, g));
            m = _mm256_add_ps(m, wm);
        };
        __m256i x1 = _mm256_add_epi32(x0, _mm256_set1_epi32(1));
        __m256i y1 = _mm256_add_epi32(y0, _mm256_set1_epi32(1));
        tap(x0, y0, w00);
        tap(x1, y0, w10);
        tap(x0, y1, w01);
        tap(x1, y1, w11);
        _mm256_storeu_ps(out + i, v);
        _mm256_storeu_ps(mask + i, m);
    }
    // Scalar tail, same per-lane arithmetic.
    for (; i < n; ++i) {
        float sx = static_cast<float>(i) + dx[i];
        float sy = static_cast<float>(y) + dy[i];
        float fx = std::floor(sx);
        float fyv = std::floor(sy);
        int x0 = static_cast<int>(fx);
        int y0 = static_cast<int>(fyv);
        float ax = sx - fx;
        float ay = sy - fyv;
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

void lk_accumulate_avx2(const float* tgt, const float* gx, const float* gy,
                        int width, int height,
                        const float* ref, int ref_stride,
                        const float* m, int m_stride,
                        int tile_w, int tile_h, float x0, float y0,
                        LkAccum* acc) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 max_x = _mm256_set1_ps(static_cast<float>(width - 1));
    const __m256 max_y = _mm256_set1_ps(static_cast<float>(height - 1));
    const __m256i max_px = _mm256_set1_epi32(width - 2);
    const __m256i max_py = _mm256_set1_epi32(height - 2);
    const __m256i vw = _mm256_set1_epi32(width);
    alignas(32) const float lane_idx[8] = {0, 1, 2, 3, 4, 5, 6, 7};
    __m256 lanes = _mm256_load_ps(lane_idx);

    __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
    __m256d b0 = _mm256_setzero_pd(), b1 = _mm256_setzero_pd(), wsum = _mm256_setzero_pd();

    auto accumulate_pd = [&](__m256 mw, __m256 dgx, __m256 dgy, __m256 res) {
        for (int half = 0; half < 2; ++half) {
            __m128 mwh = half ? _mm256_extractf128_ps(mw, 1) : _mm256_castps256_ps128(mw);
            __m128 gxh = half ? _mm256_extractf128_ps(dgx, 1) : _mm256_castps256_ps128(dgx);
            __m128 gyh = half ? _mm256_extractf128_ps(dgy, 1) : _mm256_castps256_ps128(dgy);
            __m128 rh = half ? _mm256_extractf128_ps(res, 1) : _mm256_castps256_ps128(res);
            __m256d mwd = _mm256_cvtps_pd(mwh);
            __m256d gxd = _mm256_cvtps_pd(gxh);
            __m256d gyd = _mm256_cvtps_pd(gyh);
            __m256d rd = _mm256_cvtps_pd(rh);
            a00 = _mm256_fmadd_pd(mwd, _mm256_mul_pd(gxd, gxd), a00);
            a01 = _mm256_fmadd_pd(mwd, _mm256_mul_pd(gxd, gyd), a01);
            a11 = _mm256_fmadd_pd(mwd, _mm256_mul_pd(gyd, gyd), a11);
            b0 = _mm256_fmadd_pd(mwd, _mm256_mul_pd(gxd, rd), b0);
            b1 = _mm256_fmadd_pd(mwd, _mm256_mul_pd(gyd, rd), b1);
            wsum = _mm256_add_pd(wsum, mwd);
        }
    };

    for (int j = 0; j < tile_h; ++j) {
        const float* ref_row = ref + static_cast<ptrdiff_t>(j) * ref_stride;
        const float* m_row = m + static_cast<ptrdiff_t>(j) * m_stride;
        __m256 syv = _mm256_min_ps(_mm256_max_ps(_mm256_set1_ps(y0 + static_cast<float>(j)), zero), max_y);
        int i = 0;
        for (; i + 8 <= tile_w; i += 8) {
            __m256 mw = _mm256_loadu_ps(m_row + i);
            __m256 active = _mm256_cmp_ps(mw, zero, _CMP_GT_OQ);
            if (_mm256_testz_ps(active, active))
                continue;
            mw = _mm256_and_ps(mw, active);
            __m256 sx = _mm256_min_ps(
                _mm256_max_ps(_mm256_add_ps(_mm256_set1_ps(x0 + static_cast<float>(i)), lanes), zero), max_x);
            __m256i px = _mm256_min_epi32(_mm256_cvttps_epi32(sx), max_px);
            __m256i py = _mm256_min_epi32(_mm256_cvttps_epi32(syv), max_py);
            px = _mm256_max_epi32(px, _mm256_setzero_si256());
            py = _mm256_max_epi32(py, _mm256_setzero_si256());
            __m256 ax = _mm256_sub_ps(sx, _mm256_cvtepi32_ps(px));
            __m256 ay = _mm256_sub_ps(syv, _mm256_cvtepi32_ps(py));
            __m256 bx = _mm256_sub_ps(one, ax);
            __m256 by = _mm256_sub_ps(one, ay);
            __m256 w00 = _mm256_mul_ps(bx, by);
            __m256 w10 = _mm256_mul_ps(ax, by);
            __m256 w01 = _mm256_mul_ps(bx, ay);
            __m256 w11 = _mm256_mul_ps(ax, ay);
            __m256i i00 = _mm256_add_epi32(_mm256_mullo_epi32(py, vw), px);
            __m256i i10 = _mm256_add_epi32(i00, _mm256_set1_epi32(1));
            __m256i i01 = _mm256_add_epi32(i00, vw);
            __m256i i11 = _mm256_add_epi32(i01, _mm256_set1_epi32(1));
            auto sample = [&](const float* p) {
                __m256 v00 = _mm256_i32gather_ps(p, i00, 4);
                __m256 v10 = _mm256_i32gather_ps(p, i10, 4);
                __m256 v01 = _mm256_i32gather_ps(p, i01, 4);
                __m256 v11 = _mm256_i32gather_ps(p, i11, 4);
                return _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(w00, v00), _mm256_mul_ps(w10, v10)),
                                     _mm256_add_ps(_mm256_mul_ps(w01, v01), _mm256_mul_ps(w11, v11)));
            };
            __m256 t = sample(tgt);
            __m256 dgx = sample(gx);
            __m256 dgy = sample(gy);
            __m256 res = _mm256_sub_ps(t, _mm256_loadu_ps(ref_row + i));
            accumulate_pd(mw, dgx, dgy, res);
        }
        for (; i < tile_w; ++i) {
            float mws = m_row[i];
            if (mws <= 0.0f)
                continue;
            float sx = std::min(std::max(x0 + static_cast<float>(i), 0.0f), static_cast<float>(width - 1));
            float sy = std::min(std::max(y0 + static_cast<float>(j), 0.0f), static_cast<float>(height - 1));
            int px = std::min(static_cast<int>(sx), width - 2);
            int py = std::min(static_cast<int>(sy), height - 2);
            px = std::max(px, 0);
            py = std::max(py, 0);
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
            double wm = mws;
            acc->a00 += wm * dgx * dgx;
            acc->a01 += wm * dgx * dgy;
            acc->a11 += wm * dgy * dgy;
            acc->b0 += wm * dgx * r;
            acc->b1 += wm * dgy * r;
            acc->weight += wm;
        }
    }
    acc->a00 += hsum_pd(a00);
    acc->a01 += hsum_pd(a01);
    acc->a11 += hsum_pd(a11);
    acc->b0 += hsum_pd(b0);
    acc->b1 += hsum_pd(b1);
    acc->weight += hsum_pd(wsum);
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",
        scale_avx2,
        clamp_avx2,
        avg4_avx2,
        downsample2x_row_avx2,
        weighted_accumulate_avx2,
        sum_avx2,
        sumsq_diff_avx2,
        sad_masked_avx2,
        warp_row_avx2,
        lk_accumulate_avx2,
    };
    return ops;
}

} // namespace burst::kernels

#endif // BURST_HAVE_AVX2
