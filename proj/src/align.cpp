#include "burst/align.hpp"

#include <algorithm>
#include <cmath>

#include "burst/imgcore.hpp"
#include "burst/kernels.hpp"
#include "burst/parallel.hpp"

namespace burst::align {

namespace {

struct TileAxis {
    std::vector<int> origin;   // tile start, clamped at the edge
    std::vector<double> center;
};

TileAxis make_axis(int extent, int block) {
    TileAxis axis;
    if (extent <= block) {
        axis.origin.push_back(0);
    } else {
        for (int o = 0; o + block <= extent; o += block)
            axis.origin.push_back(o);
        if (axis.origin.back() + block < extent)
            axis.origin.push_back(extent - block);
    }
    for (int o : axis.origin)
        axis.center.push_back(o + 0.5 * (std::min(block, extent) - 1));
    return axis;
}

ImagePlane luminance_proxy(const PackedRaw& p) {
    ImagePlane out(p.width(), p.height());
    kernels::ops().avg4(p.planes[0].data.data(), p.planes[1].data.data(),
                        p.planes[2].data.data(), p.planes[3].data.data(),
                        out.data.data(), out.size());
    return out;
}

ImagePlane downsample2x(const ImagePlane& src) {
    ImagePlane out(src.width / 2, src.height / 2);
    for (int y = 0; y < out.height; ++y)
        kernels::ops().downsample2x_row(src.row(2 * y), src.row(2 * y + 1), out.row(y), out.width);
    return out;
}

void central_gradients(const ImagePlane& p, ImagePlane& gx, ImagePlane& gy) {
    gx = ImagePlane(p.width, p.height);
    gy = ImagePlane(p.width, p.height);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, p.width - 1);
            const int yu = std::max(y - 1, 0);
            const int yd = std::min(y + 1, p.height - 1);
            gx.at(x, y) = 0.5f * (p.at(xr, y) - p.at(xl, y));
            gy.at(x, y) = 0.5f * (p.at(x, yd) - p.at(x, yu));
        }
}

// Bilinear lookup on the tile-center grid with clamped extrapolation. The
// lerp form v0 + t*(v1-v0) keeps constant fields exactly constant.
double grid_sample(const std::vector<double>& grid, const TileAxis& ax, const TileAxis& ay,
                   int nx, double x, double y) {
    auto locate = [](const std::vector<double>& centers, double v, int& i, double& t) {
        if (v <= centers.front()) { i = 0; t = 0.0; return; }
        if (v >= centers.back()) { i = static_cast<int>(centers.size()) - 1; t = 0.0; return; }
        int lo = 0;
        int hi = static_cast<int>(centers.size()) - 1;
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            (centers[mid] <= v ? lo : hi) = mid;
        }
        i = lo;
        t = (v - centers[lo]) / (centers[hi] - centers[lo]);
    };
    int ix, iy;
    double tx, ty;
    locate(ax.center, x, ix, tx);
    locate(ay.center, y, iy, ty);
    const int ix1 = std::min(ix + 1, static_cast<int>(ax.center.size()) - 1);
    const int iy1 = std::min(iy + 1, static_cast<int>(ay.center.size()) - 1);
    const double v00 = grid[static_cast<size_t>(iy) * nx + ix];
    const double v10 = grid[static_cast<size_t>(iy) * nx + ix1];
    const double v01 = grid[static_cast<size_t>(iy1) * nx + ix];
    const double v11 = grid[static_cast<size_t>(iy1) * nx + ix1];
    const double top = v00 + tx * (v10 - v00);
    const double bot = v01 + tx * (v11 - v01);
    return top + ty * (bot - top);
}

struct Level {
    ImagePlane ref, tgt, ref_mask, tgt_mask, gx, gy;
};

} // namespace

GainEstimate estimate_exposure_gain(const PackedRaw& target, const PackedRaw& reference_longest,
                                    double sat_thresh, double floor_thresh) {
    if (!target.same_size(reference_longest))
        fail_validation("estimate_exposure_gain: frame sizes disagree");
    std::vector<float> ratios;
    size_t total = 0;
    for (int c = 0; c < 4; ++c) {
        const auto& t = target.planes[c].data;
        const auto& r = reference_longest.planes[c].data;
        total += t.size();
        for (size_t i = 0; i < t.size(); ++i) {
            const float tv = t[i];
            const float rv = r[i];
            if (tv > floor_thresh && tv < sat_thresh && rv > floor_thresh && rv < sat_thresh)
                ratios.push_back(rv / tv);
        }
    }
    GainEstimate est;
    est.inlier_fraction = total ? static_cast<double>(ratios.size()) / total : 0.0;
    if (est.inlier_fraction < 0.01)
        fail_validation("estimate_exposure_gain: insufficient unclipped overlap (" +
                        std::to_string(100.0 * est.inlier_fraction) + "% inliers)");
    const size_t mid = (ratios.size() - 1) / 2;
    std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
    est.gain = ratios[mid];
    return est;
}

std::pair<PackedRaw, ValidityMask> normalize_exposure(const PackedRaw& frame, const GainEstimate& g,
                                                      double sat_thresh, double floor_thresh,
                                                      double ramp_width) {
    if (g.gain <= 0)
        fail_validation("normalize_exposure: gain must be positive");
    PackedRaw out;
    for (int c = 0; c < 4; ++c) {
        out.planes[c] = ImagePlane(frame.width(), frame.height());
        kernels::ops().scale(frame.planes[c].data.data(), static_cast<float>(g.gain),
                             out.planes[c].data.data(), frame.planes[c].size());
    }
    ValidityMask mask(frame.width(), frame.height());
    const float sat = static_cast<float>(sat_thresh);
    const float floor_t = static_cast<float>(floor_thresh);
    const float ramp = static_cast<float>(std::max(ramp_width, 1e-9));
    for (size_t i = 0; i < mask.data.size(); ++i) {
        const float r = frame.planes[0].data[i];
        const float g1 = frame.planes[1].data[i];
        const float g2 = frame.planes[2].data[i];
        const float b = frame.planes[3].data[i];
        const float mx = std::max(std::max(r, g1), std::max(g2, b));
        const float mean = (r + g1 + g2 + b) * 0.25f;
        float m_sat = mx >= sat ? 0.0f : std::min(1.0f, (sat - mx) / ramp);
        float m_floor = mean <= floor_t ? 0.0f : std::min(1.0f, (mean - floor_t) / ramp);
        mask.data[i] = m_sat * m_floor;
    }
    return {std::move(out), std::move(mask)};
}

FlowField estimate_flow(const PackedRaw& ref, const PackedRaw& tgt, const FlowConfig& cfg,
                        const ValidityMask* ref_mask, const ValidityMask* tgt_mask) {
    if (!ref.same_size(tgt))
        fail_validation("estimate_flow: frame sizes disagree");
    const int w = ref.width();
    const int h = ref.height();
    const int div = 1 << (cfg.levels - 1);
    if (cfg.levels < 1 || w % div != 0 || h % div != 0)
        fail_validation("estimate_flow: dimensions must be divisible by 2^(levels-1)");

    std::vector<Level> pyr(cfg.levels);
    pyr[0].ref = luminance_proxy(ref);
    pyr[0].tgt = luminance_proxy(tgt);
    pyr[0].ref_mask = ref_mask ? *ref_mask : ImagePlane(w, h, 1.0f);
    pyr[0].tgt_mask = tgt_mask ? *tgt_mask : ImagePlane(w, h, 1.0f);
    if (!pyr[0].ref_mask.same_size(pyr[0].ref) || !pyr[0].tgt_mask.same_size(pyr[0].tgt))
        fail_validation("estimate_flow: mask sizes disagree with frames");
    for (int l = 1; l < cfg.levels; ++l) {
        pyr[l].ref = downsample2x(pyr[l - 1].ref);
        pyr[l].tgt = downsample2x(pyr[l - 1].tgt);
        pyr[l].ref_mask = downsample2x(pyr[l - 1].ref_mask);
        pyr[l].tgt_mask = downsample2x(pyr[l - 1].tgt_mask);
    }
    for (auto& lv : pyr)
        central_gradients(lv.tgt, lv.gx, lv.gy);

    const double budget = cfg.max_displacement();
    std::vector<double> fx, fy;
    TileAxis ax_prev, ay_prev;
    int nx_prev = 0;

    for (int l = cfg.levels - 1; l >= 0; --l) {
        const Level& lv = pyr[l];
        const int lw = lv.ref.width;
        const int lh = lv.ref.height;
        const TileAxis ax = make_axis(lw, cfg.block);
        const TileAxis ay = make_axis(lh, cfg.block);
        const int nx = static_cast<int>(ax.origin.size());
        const int ny = static_cast<int>(ay.origin.size());
        std::vector<double> cur_fx(static_cast<size_t>(nx) * ny, 0.0);
        std::vector<double> cur_fy(cur_fx.size(), 0.0);

        for (int tyi = 0; tyi < ny; ++tyi) {
            for (int txi = 0; txi < nx; ++txi) {
                const int x0 = ax.origin[txi];
                const int y0 = ay.origin[tyi];
                const int bw = std::min(cfg.block, lw);
                const int bh = std::min(cfg.block, lh);
                double init_x = 0.0, init_y = 0.0;
                if (!fx.empty()) {
                    // Upsample the coarser grid: positions halve, values double.
                    init_x = 2.0 * grid_sample(fx, ax_prev, ay_prev, nx_prev,
                                               ax.center[txi] * 0.5, ay.center[tyi] * 0.5);
                    init_y = 2.0 * grid_sample(fy, ax_prev, ay_prev, nx_prev,
                                               ax.center[txi] * 0.5, ay.center[tyi] * 0.5);
                }
                const int base_x = static_cast<int>(std::lround(std::clamp(init_x, -budget, budget)));
                const int base_y = static_cast<int>(std::lround(std::clamp(init_y, -budget, budget)));

                const double min_weight = std::max(8.0, 0.05 * bw * bh);
                double best_cost = 0.0, worst_cost = 0.0;
                int best_dx = 0, best_dy = 0;
                bool any = false;
                for (int dy = -cfg.radius; dy <= cfg.radius; ++dy) {
                    for (int dx = -cfg.radius; dx <= cfg.radius; ++dx) {
                        const int ddx = base_x + dx;
                        const int ddy = base_y + dy;
                        // Clip the window so the displaced copy stays in frame.
                        const int cx0 = std::max(x0, -ddx);
                        const int cy0 = std::max(y0, -ddy);
                        const int cx1 = std::min(x0 + bw, lw - ddx);
                        const int cy1 = std::min(y0 + bh, lh - ddy);
                        if (cx1 - cx0 < 4 || cy1 - cy0 < 4)
                            continue;
                        const auto sad = kernels::ops().sad_masked(
                            lv.ref.row(cy0) + cx0, lw,
                            lv.tgt.row(cy0 + ddy) + cx0 + ddx, lw,
                            lv.ref_mask.row(cy0) + cx0, lw,
                            lv.tgt_mask.row(cy0 + ddy) + cx0 + ddx, lw,
                            cx1 - cx0, cy1 - cy0);
                        if (sad.weight < min_weight)
                            continue;
                        const double cost = sad.sad / sad.weight;
                        if (!any) {
                            any = true;
                            best_cost = worst_cost = cost;
                            best_dx = ddx;
                            best_dy = ddy;
                            continue;
                        }
                        worst_cost = std::max(worst_cost, cost);
                        const double n_new = static_cast<double>(ddx) * ddx + static_cast<double>(ddy) * ddy;
                        const double n_old = static_cast<double>(best_dx) * best_dx +
                                             static_cast<double>(best_dy) * best_dy;
                        const bool better =
                            cost < best_cost ||
                            (cost == best_cost &&
                             (n_new < n_old ||
                              (n_new == n_old && (ddy < best_dy || (ddy == best_dy && ddx < best_dx)))));
                        if (better) {
                            best_cost = cost;
                            best_dx = ddx;
                            best_dy = ddy;
                        }
                    }
                }

                double flow_x, flow_y;
                if (!any || worst_cost - best_cost <= 1e-9) {
                    // Degenerate (flat or fully masked) tile: keep the coarse flow.
                    flow_x = init_x;
                    flow_y = init_y;
                } else {
                    flow_x = best_dx;
                    flow_y = best_dy;
                    // Gauss-Newton subpixel refinement of the tile translation.
                    for (int it = 0; it < cfg.lk_iters; ++it) {
                        kernels::LkAccum acc;
                        kernels::ops().lk_accumulate(
                            lv.tgt.data.data(), lv.gx.data.data(), lv.gy.data.data(), lw, lh,
                            lv.ref.row(y0) + x0, lw,
                            lv.ref_mask.row(y0) + x0, lw,
                            bw, bh,
                            static_cast<float>(x0 + flow_x), static_cast<float>(y0 + flow_y), &acc);
                        if (acc.weight < min_weight)
                            break;
                        const double a00 = acc.a00 + cfg.lk_damping;
                        const double a11 = acc.a11 + cfg.lk_damping;
                        const double det = a00 * a11 - acc.a01 * acc.a01;
                        if (det <= 1e-12)
                            break;
                        double sx = (-acc.b0 * a11 + acc.b1 * acc.a01) / det;
                        double sy = (acc.a01 * acc.b0 - a00 * acc.b1) / det;
                        sx = std::clamp(sx, -1.0, 1.0);
                        sy = std::clamp(sy, -1.0, 1.0);
                        flow_x += sx;
                        flow_y += sy;
                        if (std::abs(sx) < 1e-4 && std::abs(sy) < 1e-4)
                            break;
                    }
                }
                cur_fx[static_cast<size_t>(tyi) * nx + txi] = std::clamp(flow_x, -budget, budget);
                cur_fy[static_cast<size_t>(tyi) * nx + txi] = std::clamp(flow_y, -budget, budget);
            }
        }
        fx = std::move(cur_fx);
        fy = std::move(cur_fy);
        ax_prev = ax;
        ay_prev = ay;
        nx_prev = nx;
    }

    // Densify: bilinear interpolation of the tile flows at every pixel.
    FlowField field;
    field.dx = ImagePlane(w, h);
    field.dy = ImagePlane(w, h);
    const TileAxis ax = ax_prev;
    const TileAxis ay = ay_prev;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            field.dx.at(x, y) = static_cast<float>(grid_sample(fx, ax, ay, nx_prev, x, y));
            field.dy.at(x, y) = static_cast<float>(grid_sample(fy, ax, ay, nx_prev, x, y));
        }
    return field;
}

namespace {

ImagePlane warp_plane(const ImagePlane& src, const FlowField& flow, ImagePlane* mask_out) {
    ImagePlane out(src.width, src.height);
    std::vector<float> mask_row(src.width);
    for (int y = 0; y < src.height; ++y) {
        kernels::ops().warp_row(src.data.data(), src.width, src.height,
                                flow.dx.row(y), flow.dy.row(y), y,
                                out.row(y), mask_row.data(), src.width);
        if (mask_out)
            std::copy(mask_row.begin(), mask_row.end(), mask_out->row(y));
    }
    return out;
}

} // namespace

std::pair<PackedRaw, ValidityMask> warp_bilinear(const PackedRaw& tgt, const FlowField& flow) {
    if (flow.dx.width != tgt.width() || flow.dx.height != tgt.height())
        fail_validation("warp_bilinear: flow size disagrees with frame");
    PackedRaw out;
    ValidityMask mask(tgt.width(), tgt.height());
    for (int c = 0; c < 4; ++c)
        out.planes[c] = warp_plane(tgt.planes[c], flow, c == 0 ? &mask : nullptr);
    return {std::move(out), std::move(mask)};
}

AlignedBurst align_burst(const BurstScene& scene, const AlignConfig& cfg) {
    if (scene.frames.size() != 9)
        fail_validation("align_burst: expected 9 frames, got " + std::to_string(scene.frames.size()));
    for (const auto& f : scene.frames)
        if (!f.plane.same_size(scene.frames[0].plane))
            fail_validation("align_burst: frame sizes disagree");

    const int n = 9;
    std::vector<PackedRaw> packed(n);
    for (int k = 0; k < n; ++k)
        packed[k] = img::pack_cfa(scene.frames[k]);

    int anchor = -1;
    for (int k = 0; k < n; ++k)
        if (scene.frames[k].group == ExposureGroup::High) {
            anchor = k;
            break;
        }
    if (anchor < 0)
        fail_validation("align_burst: no high-exposure frame present");

    AlignedBurst out;
    out.frames.resize(n);
    out.masks.resize(n);
    out.padding.resize(n);
    out.flows.resize(n);
    out.gains.assign(n, 1.0);
    out.inlier_fractions.assign(n, 0.0);
    out.gains_estimated = cfg.estimate_gains;

    // Pre-normalization highlight map of the reference, for merge fallback.
    out.ref_prenorm_max = ImagePlane(packed[0].width(), packed[0].height());
    for (size_t i = 0; i < out.ref_prenorm_max.data.size(); ++i) {
        float mx = packed[0].planes[0].data[i];
        for (int c = 1; c < 4; ++c)
            mx = std::max(mx, packed[0].planes[c].data[i]);
        out.ref_prenorm_max.data[i] = mx;
    }

    std::vector<PackedRaw> normed(n);
    std::vector<ValidityMask> satmask(n);
    const double nominal_high = scene.meta.gains[2];
    for (int k = 0; k < n; ++k) {
        GainEstimate g;
        if (cfg.estimate_gains) {
            try {
                g = estimate_exposure_gain(packed[k], packed[anchor], cfg.sat_thresh, cfg.floor_thresh);
            } catch (const Error&) {
                g.gain = nominal_high / scene.frames[k].exposure_gain;
                g.inlier_fraction = 0.0;
            }
        } else {
            g.gain = nominal_high / scene.frames[k].exposure_gain;
            g.inlier_fraction = 1.0;
        }
        out.gains[k] = g.gain;
        out.inlier_fractions[k] = g.inlier_fraction;
        auto [nf, nm] = normalize_exposure(packed[k], g, cfg.sat_thresh, cfg.floor_thresh, cfg.ramp_width);
        normed[k] = std::move(nf);
        satmask[k] = std::move(nm);
    }

    auto zero_flow = [&]() {
        FlowField f;
        f.dx = ImagePlane(packed[0].width(), packed[0].height(), 0.0f);
        f.dy = ImagePlane(packed[0].width(), packed[0].height(), 0.0f);
        return f;
    };

    // Reference passes through untouched; the others are aligned to it.
    out.frames[0] = normed[0];
    out.masks[0] = satmask[0];
    out.padding[0] = ImagePlane(packed[0].width(), packed[0].height(), 1.0f);
    out.flows[0] = zero_flow();

    parallel_for(n - 1, cfg.threads, [&](int idx) {
        const int k = idx + 1;
        FlowField flow = cfg.run_flow
                             ? estimate_flow(normed[0], normed[k], cfg.flow, &satmask[0], &satmask[k])
                             : zero_flow();
        auto [warped, pad] = warp_bilinear(normed[k], flow);
        ImagePlane warped_sat = warp_plane(satmask[k], flow, nullptr);
        ValidityMask combined(pad.width, pad.height);
        for (size_t i = 0; i < combined.data.size(); ++i)
            combined.data[i] = pad.data[i] * warped_sat.data[i];
        out.frames[k] = std::move(warped);
        out.padding[k] = std::move(pad);
        out.masks[k] = std::move(combined);
        out.flows[k] = std::move(flow);
    });
    return out;
}

} // namespace burst::align
