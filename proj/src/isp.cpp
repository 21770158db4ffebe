#include "burst/isp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "burst/imgcore.hpp"
#include "burst/kernels.hpp"
#include "burst/parallel.hpp"

namespace burst::isp {

namespace {

RgbImage quantize16(const RgbImage& img) {
    RgbImage out(img.width(), img.height(), 16);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < img.ch[c].data.size(); ++i)
            out.ch[c].data[i] = img::dequantize_sample(img::quantize_sample(img.ch[c].data[i], 65535), 65535);
    return out;
}

} // namespace

RgbImage demosaic_bilinear(const ImagePlane& mosaic, CfaPattern cfa) {
    if ((mosaic.width & 1) || (mosaic.height & 1) || mosaic.width < 2 || mosaic.height < 2)
        fail_validation("demosaic: dimensions must be even and positive");
    const int w = mosaic.width;
    const int h = mosaic.height;
    auto offs = cfa_offsets(cfa);
    const int rx = offs[CFA_R].first, ry = offs[CFA_R].second;
    const int bx = offs[CFA_B].first, by = offs[CFA_B].second;

    auto fetch = [&](int x, int y) {
        return mosaic.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };
    // Interpolate one rectangular-lattice channel (R or B) at (x,y) given
    // the lattice parity (cx,cy).
    auto interp_rect = [&](int x, int y, int cx, int cy) -> float {
        const bool on_col = (x & 1) == cx;
        const bool on_row = (y & 1) == cy;
        if (on_col && on_row)
            return mosaic.at(x, y);
        if (on_row)
            return 0.5f * (fetch(x - 1, y) + fetch(x + 1, y));
        if (on_col)
            return 0.5f * (fetch(x, y - 1) + fetch(x, y + 1));
        return 0.25f * (fetch(x - 1, y - 1) + fetch(x + 1, y - 1) +
                        fetch(x - 1, y + 1) + fetch(x + 1, y + 1));
    };

    RgbImage out(w, h, 16);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            out.ch[0].at(x, y) = interp_rect(x, y, rx, ry);
            out.ch[2].at(x, y) = interp_rect(x, y, bx, by);
            const CfaChannel site = cfa_channel_at(cfa, x, y);
            out.ch[1].at(x, y) =
                (site == CFA_G1 || site == CFA_G2)
                    ? mosaic.at(x, y)
                    : 0.25f * (fetch(x - 1, y) + fetch(x + 1, y) + fetch(x, y - 1) + fetch(x, y + 1));
        }
    return out;
}

RgbImage tone_map(const RgbImage& linear, double headroom) {
    if (!(headroom > 0))
        fail_validation("tone_map: headroom must be positive");
    RgbImage out(linear.width(), linear.height(), linear.bit_depth);
    const double inv = 1.0 / headroom;
    const double exponent = 1.0 / 2.2;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < linear.ch[c].data.size(); ++i) {
            const double v = std::clamp(static_cast<double>(linear.ch[c].data[i]) * inv, 0.0, 1.0);
            out.ch[c].data[i] = static_cast<float>(std::pow(v, exponent));
        }
    return out;
}

namespace {

RestoreResult restore_frames(const BurstScene& scene, const RestoreConfig& cfg) {
    if (scene.frames.size() != 9)
        fail_validation("restore: expected 9 frames");
    const CfaPattern cfa = scene.meta.cfa;
    const double headroom =
        cfg.headroom > 0 ? cfg.headroom : scene.meta.gains[2] / scene.meta.gains[1];

    RestoreResult result;
    PackedRaw merged_mid;
    if (cfg.reference_only) {
        merged_mid = img::pack_cfa(scene.frames[0]);
    } else {
        align::AlignConfig acfg = cfg.align;
        acfg.threads = cfg.threads ? cfg.threads : acfg.threads;
        align::AlignedBurst aligned = align::align_burst(scene, acfg);

        std::vector<ExposureGroup> groups(scene.frames.size());
        for (size_t k = 0; k < scene.frames.size(); ++k)
            groups[k] = scene.frames[k].group;
        const bool noise_known = scene.meta.noise.has_value();
        const NoiseParams noise = noise_known ? *scene.meta.noise : NoiseParams{};
        merge::MergeConfig mcfg = cfg.merge;
        mcfg.sat_thresh = cfg.align.sat_thresh;
        merge::MergeWeights weights = merge::merge_weights(aligned, groups, noise, noise_known, mcfg);
        merge::MergedRadiance merged = merge::merge(aligned.frames, weights, aligned.frames[0], mcfg);

        // Back from the longest-exposure scale to the reference scale.
        const float rescale = static_cast<float>(1.0 / aligned.gains[0]);
        merged_mid = std::move(merged.radiance);
        for (int c = 0; c < 4; ++c)
            kernels::ops().scale(merged_mid.planes[c].data.data(), rescale,
                                 merged_mid.planes[c].data.data(), merged_mid.planes[c].size());
        result.uniform_weights = weights.uniform;
        result.gains = aligned.gains;
    }

    RawFrame full = img::unpack_cfa(merged_mid, cfa);
    RgbImage linear = demosaic_bilinear(full.plane, cfa);
    result.image = quantize16(tone_map(linear, headroom));
    return result;
}

} // namespace

RestoreResult restore_scene(const BurstScene& scene, const RestoreConfig& cfg) {
    return restore_frames(scene, cfg);
}

namespace {

// Bayer-periodic replicate pad to target dims (left/top preserved).
ImagePlane pad_plane_bayer(const ImagePlane& p, int nw, int nh) {
    if (nw == p.width && nh == p.height)
        return p;
    ImagePlane out(nw, nh);
    for (int y = 0; y < nh; ++y) {
        const int sy = y < p.height ? y : p.height - 2 + (y & 1);
        for (int x = 0; x < nw; ++x) {
            const int sx = x < p.width ? x : p.width - 2 + (x & 1);
            out.at(x, y) = p.at(sx, sy);
        }
    }
    return out;
}

struct TilePos {
    int start; // contributed region start
    int size;
};

std::vector<TilePos> tile_positions(int extent, int tile, int step) {
    std::vector<TilePos> out;
    if (tile >= extent) {
        out.push_back({0, extent});
        return out;
    }
    for (int x = 0;; x += step) {
        if (x + tile >= extent) {
            out.push_back({extent - tile, tile});
            break;
        }
        out.push_back({x, tile});
    }
    return out;
}

// Raised-cosine weight across a tile's contributed span.
double tile_weight(int coord, const TilePos& pos, int overlap, int extent) {
    constexpr double kPi = 3.14159265358979323846;
    double w = 1.0;
    const int t_lead = coord - pos.start;
    const int t_trail = pos.start + pos.size - 1 - coord;
    if (overlap > 0) {
        if (pos.start > 0 && t_lead < overlap)
            w *= 0.5 - 0.5 * std::cos(kPi * (t_lead + 0.5) / overlap);
        if (pos.start + pos.size < extent && t_trail < overlap)
            w *= 0.5 - 0.5 * std::cos(kPi * (t_trail + 0.5) / overlap);
    }
    return w;
}

} // namespace

RgbImage tiled_restore(const BurstScene& scene, int tile, int overlap, const RestoreConfig& cfg) {
    if (tile <= 0 || (tile & 1) || overlap < 0 || (overlap & 1) || tile <= 2 * overlap)
        fail_validation("tiled_restore: require even tile > 2*overlap and even overlap >= 0");
    if (scene.frames.size() != 9)
        fail_validation("tiled_restore: expected 9 frames");
    const int w = scene.frames[0].plane.width;
    const int h = scene.frames[0].plane.height;
    const int step = tile - overlap;
    const int halo = 4;

    const auto xs = tile_positions(w, tile, step);
    const auto ys = tile_positions(h, tile, step);

    struct TileJob {
        TilePos px, py;
        RgbImage image;
        int crop_x0 = 0, crop_y0 = 0;
    };
    std::vector<TileJob> jobs;
    for (const auto& py : ys)
        for (const auto& px : xs)
            jobs.push_back({px, py, {}, 0, 0});

    const int threads = resolve_threads(cfg.threads);
    parallel_for(static_cast<int>(jobs.size()), threads, [&](int j) {
        TileJob& job = jobs[j];
        // Even-aligned crop with halo, clamped to the frame.
        int cx0 = std::max(0, job.px.start - halo) & ~1;
        int cy0 = std::max(0, job.py.start - halo) & ~1;
        int cx1 = std::min(w, job.px.start + job.px.size + halo);
        int cy1 = std::min(h, job.py.start + job.py.size + halo);
        cx1 += cx1 & 1;
        cy1 += cy1 & 1;
        cx1 = std::min(cx1, w);
        cy1 = std::min(cy1, h);
        const int cw = cx1 - cx0;
        const int ch = cy1 - cy0;
        // Pad so packed dims divide by the pyramid depth.
        const int mult = std::max(2, 1 << cfg.align.flow.levels); // full-res multiple
        const int pw = (cw + mult - 1) / mult * mult;
        const int ph = (ch + mult - 1) / mult * mult;

        BurstScene sub;
        sub.meta = scene.meta;
        sub.frames.resize(9);
        for (int k = 0; k < 9; ++k) {
            RawFrame f = scene.frames[k];
            ImagePlane crop(cw, ch);
            for (int y = 0; y < ch; ++y)
                std::copy_n(scene.frames[k].plane.row(cy0 + y) + cx0, cw, crop.row(y));
            f.plane = pad_plane_bayer(crop, pw, ph);
            sub.frames[k] = std::move(f);
        }
        RestoreConfig sub_cfg = cfg;
        sub_cfg.threads = 1;
        job.image = restore_frames(sub, sub_cfg).image;
        job.crop_x0 = cx0;
        job.crop_y0 = cy0;
    });

    // Deterministic sequential blend in tile order.
    std::vector<double> acc_v(static_cast<size_t>(w) * h * 3, 0.0);
    std::vector<double> acc_w(static_cast<size_t>(w) * h, 0.0);
    for (const auto& job : jobs) {
        for (int y = job.py.start; y < job.py.start + job.py.size; ++y) {
            const double wy = tile_weight(y, job.py, overlap, h);
            for (int x = job.px.start; x < job.px.start + job.px.size; ++x) {
                const double wgt = wy * tile_weight(x, job.px, overlap, w);
                const size_t o = static_cast<size_t>(y) * w + x;
                for (int c = 0; c < 3; ++c)
                    acc_v[o * 3 + c] +=
                        wgt * job.image.ch[c].at(x - job.crop_x0, y - job.crop_y0);
                acc_w[o] += wgt;
            }
        }
    }
    RgbImage out(w, h, 16);
    for (size_t o = 0; o < acc_w.size(); ++o)
        for (int c = 0; c < 3; ++c)
            out.ch[c].data[o] = img::dequantize_sample(
                img::quantize_sample(static_cast<float>(acc_v[o * 3 + c] / acc_w[o]), 65535), 65535);
    return out;
}

} // namespace burst::isp
