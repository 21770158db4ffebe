#include "burst/synth.hpp"

#include <algorithm>
#include <cmath>

#include "burst/imgcore.hpp"
#include "burst/isp.hpp"
#include "burst/kernels.hpp"
#include "burst/rng.hpp"

namespace burst {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Substream tags for the per-scene RNG tree.
enum : uint64_t {
    kStreamHdr = 0x48445249,
    kStreamNoise = 0x4e4f4953,
    kStreamSpec = 0x53504543,
};
} // namespace

const std::array<ExposureGroup, 9>& SceneSpec::frame_groups() {
    static const std::array<ExposureGroup, 9> order = {
        ExposureGroup::Mid,
        ExposureGroup::Low, ExposureGroup::Low, ExposureGroup::Low,
        ExposureGroup::Mid, ExposureGroup::Mid,
        ExposureGroup::High, ExposureGroup::High, ExposureGroup::High,
    };
    return order;
}

double SceneSpec::gain_for(int frame) const {
    switch (frame_groups()[frame]) {
    case ExposureGroup::Low: return gains[0];
    case ExposureGroup::Mid: return gains[1];
    case ExposureGroup::High: return gains[2];
    }
    return gains[1];
}

void SceneSpec::validate() const {
    if (width <= 0 || height <= 0 || (width & 1) || (height & 1))
        fail_validation("scene spec: dimensions must be positive and even");
    if (!(gains[0] > 0 && gains[0] < gains[1] && gains[1] < gains[2]))
        fail_validation("scene spec: gains must satisfy 0 < g_low < g_mid < g_high");
    if (!transforms[0].is_identity())
        fail_validation("scene spec: frame 0 transform must be identity");
    if (!blurs[0].is_identity())
        fail_validation("scene spec: frame 0 blur must be identity");
    for (const auto& t : transforms)
        if (std::abs(t.theta) >= kPi)
            fail_validation("scene spec: |theta| must be below pi");
    if (noise.shot_fullwell < 0 || noise.read_sigma < 0)
        fail_validation("scene spec: noise parameters must be nonnegative");
}

BlurKernel make_blur_kernel(int length, double angle) {
    if (length < 1)
        fail_validation("blur kernel length must be >= 1");
    BlurKernel k;
    k.length = length;
    k.angle = angle;
    if (length == 1) {
        k.taps = ImagePlane(1, 1, 1.0f);
        return k;
    }
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);
    const double half = 0.5 * (length - 1);
    const int r = static_cast<int>(std::ceil(half * std::max(std::abs(cx), std::abs(cy)))) + 1;
    const int size = 2 * r + 1;
    k.taps = ImagePlane(size, size, 0.0f);
    const double w = 1.0 / length;
    for (int i = 0; i < length; ++i) {
        const double off = static_cast<double>(i) - half;
        const double px = r + off * cx;
        const double py = r + off * cy;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double ax = px - x0;
        const double ay = py - y0;
        k.taps.at(x0, y0) += static_cast<float>(w * (1 - ax) * (1 - ay));
        k.taps.at(x0 + 1, y0) += static_cast<float>(w * ax * (1 - ay));
        k.taps.at(x0, y0 + 1) += static_cast<float>(w * (1 - ax) * ay);
        k.taps.at(x0 + 1, y0 + 1) += static_cast<float>(w * ax * ay);
    }
    double sum = 0.0;
    for (float v : k.taps.data)
        sum += v;
    for (float& v : k.taps.data)
        v = static_cast<float>(v / sum);
    return k;
}

} // namespace burst

namespace burst::synth {

namespace {

// Bilinear value noise on a coarse lattice, values in [0,1].
void add_value_noise(ImagePlane& img, uint64_t key, double cell, double amplitude) {
    const int nx = static_cast<int>(std::ceil(img.width / cell)) + 2;
    const int ny = static_cast<int>(std::ceil(img.height / cell)) + 2;
    std::vector<float> lattice(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            RngStream s(RngStream::derive(key, static_cast<uint64_t>(j) * nx + i));
            lattice[static_cast<size_t>(j) * nx + i] = static_cast<float>(s.next_double());
        }
    for (int y = 0; y < img.height; ++y) {
        const double fy = y / cell;
        const int j = static_cast<int>(fy);
        const double ay = fy - j;
        for (int x = 0; x < img.width; ++x) {
            const double fx = x / cell;
            const int i = static_cast<int>(fx);
            const double ax = fx - i;
            const double v00 = lattice[static_cast<size_t>(j) * nx + i];
            const double v10 = lattice[static_cast<size_t>(j) * nx + i + 1];
            const double v01 = lattice[static_cast<size_t>(j + 1) * nx + i];
            const double v11 = lattice[static_cast<size_t>(j + 1) * nx + i + 1];
            const double v = (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
            img.at(x, y) += static_cast<float>(amplitude * v);
        }
    }
}

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

void add_soft_checker(ImagePlane& img, RngStream& s, double min_dim) {
    const double cell = std::max(4.0, min_dim / 8.0 * (0.6 + 0.8 * s.next_double()));
    const double cx0 = s.next_double() * img.width * 0.5;
    const double cy0 = s.next_double() * img.height * 0.5;
    const double cw = img.width * (0.3 + 0.4 * s.next_double());
    const double chh = img.height * (0.3 + 0.4 * s.next_double());
    const double amp = 0.18;
    const double edge = 1.5; // soft half-width of tile boundaries, pixels
    const double margin = std::max(4.0, min_dim / 24.0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (x < cx0 || y < cy0 || x > cx0 + cw || y > cy0 + chh)
                continue;
            auto soft_square = [&](double u) {
                const double p = u / cell - std::floor(u / cell); // [0,1) in cell
                const double d = std::min(p, 1.0 - p) * cell;     // distance to boundary
                const double sgn = (static_cast<long long>(std::floor(u / cell)) & 1) ? -1.0 : 1.0;
                return sgn * smoothstep(d / edge);
            };
            const double v = soft_square(x) * soft_square(y);
            const double bx = std::min(x - cx0, cx0 + cw - x);
            const double by = std::min(y - cy0, cy0 + chh - y);
            const double fade = smoothstep(bx / margin) * smoothstep(by / margin);
            img.at(x, y) += static_cast<float>(amp * v * fade);
        }
    }
}

void add_strokes(ImagePlane& img, RngStream& s, double min_dim) {
    const int n = 4 + static_cast<int>(s.next_double() * 4);
    for (int k = 0; k < n; ++k) {
        const double x0 = s.next_double() * img.width;
        const double y0 = s.next_double() * img.height;
        const double ang = s.next_double() * 2 * kPi;
        const double len = min_dim * (0.12 + 0.2 * s.next_double());
        const double x1 = x0 + std::cos(ang) * len;
        const double y1 = y0 + std::sin(ang) * len;
        const double thick = 1.0 + 1.5 * s.next_double();
        const double amp = (s.next_double() < 0.5 ? -0.35 : 0.45);
        const int lo_x = std::max(0, static_cast<int>(std::min(x0, x1) - thick - 1));
        const int hi_x = std::min(img.width - 1, static_cast<int>(std::max(x0, x1) + thick + 1));
        const int lo_y = std::max(0, static_cast<int>(std::min(y0, y1) - thick - 1));
        const int hi_y = std::min(img.height - 1, static_cast<int>(std::max(y0, y1) + thick + 1));
        const double dx = x1 - x0;
        const double dy = y1 - y0;
        const double len2 = dx * dx + dy * dy;
        for (int y = lo_y; y <= hi_y; ++y)
            for (int x = lo_x; x <= hi_x; ++x) {
                const double t = len2 > 0 ? std::clamp(((x - x0) * dx + (y - y0) * dy) / len2, 0.0, 1.0) : 0.0;
                const double px = x0 + t * dx;
                const double py = y0 + t * dy;
                const double d = std::hypot(x - px, y - py);
                const double cov = std::clamp(thick * 0.5 + 0.5 - d, 0.0, 1.0);
                img.at(x, y) += static_cast<float>(amp * cov);
            }
    }
}

void add_highlights(ImagePlane& img, RngStream& s, double min_dim) {
    const int n = 2 + static_cast<int>(s.next_double() * 2);
    for (int k = 0; k < n; ++k) {
        const double cx = img.width * (0.1 + 0.8 * s.next_double());
        const double cy = img.height * (0.1 + 0.8 * s.next_double());
        const double sigma = min_dim * (0.05 + 0.08 * s.next_double());
        const double amp = 1.5 + 2.0 * s.next_double();
        const int lo_x = std::max(0, static_cast<int>(cx - 4 * sigma));
        const int hi_x = std::min(img.width - 1, static_cast<int>(cx + 4 * sigma));
        const int lo_y = std::max(0, static_cast<int>(cy - 4 * sigma));
        const int hi_y = std::min(img.height - 1, static_cast<int>(cy + 4 * sigma));
        const double inv = 1.0 / (2 * sigma * sigma);
        for (int y = lo_y; y <= hi_y; ++y)
            for (int x = lo_x; x <= hi_x; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                img.at(x, y) += static_cast<float>(amp * std::exp(-d2 * inv));
            }
    }
}

} // namespace

HdrImage procedural_hdr(uint64_t seed, int width, int height) {
    if (width <= 0 || height <= 0 || (width & 1) || (height & 1))
        fail_validation("procedural_hdr: dimensions must be positive and even");
    const uint64_t key = RngStream::derive(seed, kStreamHdr);
    const double min_dim = std::min(width, height);

    ImagePlane base(width, height, 0.0f);
    // Texture octaves.
    add_value_noise(base, RngStream::derive(key, 1), std::max(3.0, min_dim / 6.0), 0.45);
    add_value_noise(base, RngStream::derive(key, 2), std::max(2.0, min_dim / 14.0), 0.25);
    add_value_noise(base, RngStream::derive(key, 3), std::max(1.5, min_dim / 30.0), 0.12);

    RngStream feat(RngStream::derive(key, 4));
    // Global ramp.
    {
        const double phi = feat.next_double() * 2 * kPi;
        const double nx = std::cos(phi) / width;
        const double ny = std::sin(phi) / height;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                base.at(x, y) += static_cast<float>(0.15 * (1.0 + nx * x + ny * y));
    }
    add_soft_checker(base, feat, min_dim);
    add_strokes(base, feat, min_dim);
    add_highlights(base, feat, min_dim);

    // Gentle per-channel chroma modulation around unity.
    HdrImage out;
    for (int c = 0; c < 3; ++c) {
        ImagePlane chroma(width, height, 0.0f);
        add_value_noise(chroma, RngStream::derive(key, 16 + c), std::max(4.0, min_dim / 3.0), 1.0);
        out.ch[c] = ImagePlane(width, height);
        for (size_t i = 0; i < base.data.size(); ++i)
            out.ch[c].data[i] = base.data[i] * (0.78f + 0.44f * chroma.data[i]);
    }

    // Quantile map the luminance so shadows sit near 0.02 and the bright
    // end reaches past 1: the decile ratio then clears 16:1 with margin.
    std::vector<float> lum(base.size());
    for (size_t i = 0; i < lum.size(); ++i)
        lum[i] = 0.2126f * out.ch[0].data[i] + 0.7152f * out.ch[1].data[i] + 0.0722f * out.ch[2].data[i];
    std::vector<float> sorted = lum;
    std::sort(sorted.begin(), sorted.end());
    const double q10 = sorted[static_cast<size_t>(0.10 * (sorted.size() - 1))];
    const double q995 = sorted[static_cast<size_t>(0.995 * (sorted.size() - 1))];
    const double scale = (1.10 - 0.02) / std::max(1e-9, q995 - q10);
    const double offset = 0.02 - q10 * scale;
    for (int c = 0; c < 3; ++c)
        for (float& v : out.ch[c].data)
            v = std::clamp(static_cast<float>(v * scale + offset), 0.0f, 1.6f);
    return out;
}

ImagePlane apply_rigid(const ImagePlane& plane, const RigidTransform& t) {
    ImagePlane out(plane.width, plane.height);
    const double cx = 0.5 * (plane.width - 1);
    const double cy = 0.5 * (plane.height - 1);
    const double c = std::cos(t.theta);
    const double s = std::sin(t.theta);
    std::vector<float> dx(plane.width), dy(plane.width), mask(plane.width);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            // Inverse map of dest = R(theta)(src - c) + c + t.
            const double px = x - cx - t.tx;
            const double py = y - cy - t.ty;
            const double sx = c * px + s * py + cx;
            const double sy = -s * px + c * py + cy;
            dx[x] = static_cast<float>(sx - x);
            dy[x] = static_cast<float>(sy - y);
        }
        kernels::ops().warp_row(plane.data.data(), plane.width, plane.height,
                                dx.data(), dy.data(), y, out.row(y), mask.data(), plane.width);
    }
    return out;
}

ImagePlane apply_blur(const ImagePlane& plane, const BlurKernel& k) {
    double sum = 0.0;
    for (float v : k.taps.data)
        sum += v;
    if (std::abs(sum - 1.0) > 1e-6)
        fail_validation("apply_blur: kernel taps must sum to 1");
    if (k.taps.width == 1 && k.taps.height == 1) {
        ImagePlane out = plane;
        if (k.taps.data[0] != 1.0f)
            for (float& v : out.data)
                v *= k.taps.data[0];
        return out;
    }
    ImagePlane out(plane.width, plane.height);
    const int rx = k.taps.width / 2;
    const int ry = k.taps.height / 2;
    for (int y = 0; y < plane.height; ++y)
        for (int x = 0; x < plane.width; ++x) {
            double acc = 0.0;
            for (int j = 0; j < k.taps.height; ++j) {
                const int sy = std::clamp(y + j - ry, 0, plane.height - 1);
                for (int i = 0; i < k.taps.width; ++i) {
                    const float w = k.taps.at(i, j);
                    if (w == 0.0f)
                        continue;
                    const int sx = std::clamp(x + i - rx, 0, plane.width - 1);
                    acc += static_cast<double>(w) * plane.at(sx, sy);
                }
            }
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

RawFrame mosaic(const std::array<ImagePlane, 3>& rgb, CfaPattern cfa) {
    for (int c = 1; c < 3; ++c)
        if (!rgb[c].same_size(rgb[0]))
            fail_validation("mosaic: channel dimensions disagree");
    if ((rgb[0].width & 1) || (rgb[0].height & 1))
        fail_validation("mosaic: dimensions must be even");
    RawFrame out;
    out.cfa = cfa;
    out.plane = ImagePlane(rgb[0].width, rgb[0].height);
    for (int y = 0; y < out.plane.height; ++y)
        for (int x = 0; x < out.plane.width; ++x) {
            const CfaChannel ch = cfa_channel_at(cfa, x, y);
            const int c = (ch == CFA_R) ? 0 : (ch == CFA_B ? 2 : 1);
            out.plane.at(x, y) = rgb[c].at(x, y);
        }
    return out;
}

ImagePlane add_poisson_gaussian(const ImagePlane& plane, const NoiseParams& p, uint64_t rng_key) {
    ImagePlane out(plane.width, plane.height);
    const bool shot = p.shot_fullwell > 0 && std::isfinite(p.shot_fullwell);
    const double w = p.shot_fullwell;
    for (size_t i = 0; i < plane.data.size(); ++i) {
        RngStream s(RngStream::derive(rng_key, i));
        double v = plane.data[i];
        if (shot)
            v = static_cast<double>(s.next_poisson(v * w)) / w;
        if (p.read_sigma > 0)
            v += p.read_sigma * s.next_normal();
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

RawFrame synth_frame(const HdrImage& hdr, const RigidTransform& t, double gain,
                     const BlurKernel& k, const NoiseParams& p, CfaPattern cfa,
                     uint64_t rng_key) {
    std::array<ImagePlane, 3> staged;
    for (int c = 0; c < 3; ++c) {
        ImagePlane ch = t.is_identity() ? hdr.ch[c] : apply_rigid(hdr.ch[c], t);
        if (!k.is_identity())
            ch = apply_blur(ch, k);
        // Exposure gain, then the sensor full-well clamp before mosaicking.
        kernels::ops().scale(ch.data.data(), static_cast<float>(gain), ch.data.data(), ch.size());
        kernels::ops().clamp(ch.data.data(), 0.0f, 1.0f, ch.data.data(), ch.size());
        staged[c] = std::move(ch);
    }
    RawFrame frame = mosaic(staged, cfa);
    frame.plane = add_poisson_gaussian(frame.plane, p, rng_key);
    frame.exposure_gain = gain;
    frame.noise = p;
    // Storage quantization to the 16-bit grid.
    for (float& v : frame.plane.data)
        v = img::dequantize_sample(img::quantize_sample(v, 65535), 65535);
    return frame;
}

RgbImage render_gt(const HdrImage& hdr, const std::array<double, 3>& gains, CfaPattern cfa) {
    const double g_mid = gains[1];
    const double headroom = gains[2] / gains[1];
    std::array<ImagePlane, 3> scaled;
    for (int c = 0; c < 3; ++c) {
        scaled[c] = hdr.ch[c];
        kernels::ops().scale(scaled[c].data.data(), static_cast<float>(g_mid),
                             scaled[c].data.data(), scaled[c].size());
        kernels::ops().clamp(scaled[c].data.data(), 0.0f, static_cast<float>(headroom),
                             scaled[c].data.data(), scaled[c].size());
    }
    // Through the same mosaic/demosaic/tone-map path the restorer uses, so
    // a degradation-free capture restores to the ground truth exactly.
    RawFrame raw = mosaic(scaled, cfa);
    RgbImage linear = isp::demosaic_bilinear(raw.plane, cfa);
    RgbImage display = isp::tone_map(linear, headroom);
    RgbImage out(display.width(), display.height(), 16);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < display.ch[c].data.size(); ++i)
            out.ch[c].data[i] =
                img::dequantize_sample(img::quantize_sample(display.ch[c].data[i], 65535), 65535);
    return out;
}

BurstScene synth_scene(const HdrImage& hdr, const SceneSpec& spec) {
    spec.validate();
    if (hdr.width() != spec.width || hdr.height() != spec.height)
        fail_validation("synth_scene: HDR dimensions disagree with the spec");
    BurstScene scene;
    scene.frames.resize(9);
    const uint64_t noise_root = RngStream::derive(spec.seed, kStreamNoise);
    for (int i = 0; i < 9; ++i) {
        RawFrame f = synth_frame(hdr, spec.transforms[i], spec.gain_for(i), spec.blurs[i],
                                 spec.noise, spec.cfa, RngStream::derive(noise_root, i));
        f.group = SceneSpec::frame_groups()[i];
        scene.frames[i] = std::move(f);
    }
    scene.gt = render_gt(hdr, spec.gains, spec.cfa);

    SceneManifest& m = scene.meta;
    m.cfa = spec.cfa;
    m.gains = spec.gains;
    m.noise = spec.noise;
    m.seed = spec.seed;
    m.frames.resize(9);
    for (int i = 0; i < 9; ++i) {
        FrameMeta& fm = m.frames[i];
        fm.file = "frame_" + std::to_string(i) + ".tif";
        fm.group = SceneSpec::frame_groups()[i];
        fm.gain = spec.gain_for(i);
        fm.transform = spec.transforms[i];
        fm.blur = std::make_pair(spec.blurs[i].length, spec.blurs[i].angle);
    }
    return scene;
}

SceneSpec random_scene_spec(uint64_t seed, int width, int height, const SynthParams& params) {
    SceneSpec spec;
    spec.seed = seed;
    spec.width = width;
    spec.height = height;
    spec.gains = params.gains;
    spec.noise = params.noise;
    spec.cfa = params.cfa;
    RngStream s(RngStream::derive(seed, kStreamSpec));
    const double max_rot = params.max_rot_deg * kPi / 180.0;
    spec.transforms[0] = RigidTransform{};
    spec.blurs[0] = make_blur_kernel(1, 0.0);
    for (int i = 1; i < 9; ++i) {
        RigidTransform t;
        t.tx = (2 * s.next_double() - 1) * params.max_shift;
        t.ty = (2 * s.next_double() - 1) * params.max_shift;
        t.theta = (2 * s.next_double() - 1) * max_rot;
        spec.transforms[i] = t;
        const int len = 1 + static_cast<int>(s.next_double() * params.max_blur_len);
        spec.blurs[i] = make_blur_kernel(std::min(len, params.max_blur_len), s.next_double() * kPi);
    }
    return spec;
}

} // namespace burst::synth
