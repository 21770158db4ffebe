#include "burst/imgcore.hpp"

#include <cmath>

namespace burst {

const char* cfa_name(CfaPattern cfa) {
    switch (cfa) {
    case CfaPattern::RGGB: return "rggb";
    case CfaPattern::GRBG: return "grbg";
    case CfaPattern::GBRG: return "gbrg";
    case CfaPattern::BGGR: return "bggr";
    }
    return "rggb";
}

CfaPattern cfa_from_name(const std::string& name) {
    if (name == "rggb") return CfaPattern::RGGB;
    if (name == "grbg") return CfaPattern::GRBG;
    if (name == "gbrg") return CfaPattern::GBRG;
    if (name == "bggr") return CfaPattern::BGGR;
    fail_validation("unknown CFA pattern: " + name);
}

std::array<std::pair<int, int>, 4> cfa_offsets(CfaPattern cfa) {
    // Index order: R, G1 (green on the red row), G2 (green on the blue row), B.
    switch (cfa) {
    case CfaPattern::RGGB: return {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
    case CfaPattern::GRBG: return {{{1, 0}, {0, 0}, {1, 1}, {0, 1}}};
    case CfaPattern::GBRG: return {{{0, 1}, {1, 1}, {0, 0}, {1, 0}}};
    case CfaPattern::BGGR: return {{{1, 1}, {0, 1}, {1, 0}, {0, 0}}};
    }
    return {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
}

CfaChannel cfa_channel_at(CfaPattern cfa, int x, int y) {
    auto offs = cfa_offsets(cfa);
    int dx = x & 1;
    int dy = y & 1;
    for (int c = 0; c < 4; ++c)
        if (offs[c].first == dx && offs[c].second == dy)
            return static_cast<CfaChannel>(c);
    return CFA_R; // unreachable
}

const char* exposure_group_name(ExposureGroup g) {
    switch (g) {
    case ExposureGroup::Low: return "low";
    case ExposureGroup::Mid: return "mid";
    case ExposureGroup::High: return "high";
    }
    return "mid";
}

ExposureGroup exposure_group_from_name(const std::string& name) {
    if (name == "low") return ExposureGroup::Low;
    if (name == "mid") return ExposureGroup::Mid;
    if (name == "high") return ExposureGroup::High;
    fail_validation("unknown exposure group: " + name);
}

} // namespace burst

namespace burst::img {

namespace {

void require_even(const ImagePlane& p, const char* what) {
    if (p.width <= 0 || p.height <= 0 || (p.width & 1) || (p.height & 1))
        fail_validation(std::string(what) + ": dimensions must be positive and even, got " +
                        std::to_string(p.width) + "x" + std::to_string(p.height));
}

} // namespace

int quantize_sample(float v, int levels) {
    double scaled = static_cast<double>(v) * levels;
    long q = std::lround(scaled); // rounds half away from zero
    if (q < 0) q = 0;
    if (q > levels) q = levels;
    return static_cast<int>(q);
}

float dequantize_sample(int q, int levels) {
    return static_cast<float>(static_cast<double>(q) / levels);
}

PackedRaw pack_cfa(const RawFrame& frame) {
    require_even(frame.plane, "pack_cfa");
    const int pw = frame.plane.width / 2;
    const int ph = frame.plane.height / 2;
    auto offs = cfa_offsets(frame.cfa);
    PackedRaw out;
    for (int c = 0; c < 4; ++c) {
        out.planes[c] = ImagePlane(pw, ph);
        const int ox = offs[c].first;
        const int oy = offs[c].second;
        for (int y = 0; y < ph; ++y) {
            const float* src = frame.plane.row(2 * y + oy);
            float* dst = out.planes[c].row(y);
            for (int x = 0; x < pw; ++x)
                dst[x] = src[2 * x + ox];
        }
    }
    return out;
}

RawFrame unpack_cfa(const PackedRaw& packed, CfaPattern cfa) {
    for (int c = 1; c < 4; ++c)
        if (!packed.planes[c].same_size(packed.planes[0]))
            fail_validation("unpack_cfa: packed planes disagree in size");
    const int pw = packed.width();
    const int ph = packed.height();
    RawFrame out;
    out.cfa = cfa;
    out.plane = ImagePlane(pw * 2, ph * 2);
    auto offs = cfa_offsets(cfa);
    for (int c = 0; c < 4; ++c) {
        const int ox = offs[c].first;
        const int oy = offs[c].second;
        for (int y = 0; y < ph; ++y) {
            const float* src = packed.planes[c].row(y);
            float* dst = out.plane.row(2 * y + oy);
            for (int x = 0; x < pw; ++x)
                dst[2 * x + ox] = src[x];
        }
    }
    return out;
}

namespace {

ImagePlane flip_plane(const ImagePlane& p, FlipAxis axis) {
    if (axis == FlipAxis::Transpose) {
        ImagePlane out(p.height, p.width);
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x)
                out.at(y, x) = p.at(x, y);
        return out;
    }
    ImagePlane out(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
        int sy = axis == FlipAxis::Vertical ? p.height - 1 - y : y;
        for (int x = 0; x < p.width; ++x) {
            int sx = axis == FlipAxis::Horizontal ? p.width - 1 - x : x;
            out.at(x, y) = p.at(sx, sy);
        }
    }
    return out;
}

} // namespace

RawFrame bayer_flip(const RawFrame& frame, FlipAxis axis) {
    require_even(frame.plane, "bayer_flip");
    // Work on the packed site planes: moving samples only between
    // same-class sites preserves the CFA phase for any pattern, and each
    // per-plane transform is an exact involution. Where the cell geometry
    // permits (e.g. transpose on RGGB) the matching same-color plane is
    // substituted so the content shift stays at most one pixel.
    PackedRaw packed = pack_cfa(frame);
    auto offs = cfa_offsets(frame.cfa);
    auto transform_offset = [axis](std::pair<int, int> o) {
        switch (axis) {
        case FlipAxis::Horizontal: return std::make_pair(1 - o.first, o.second);
        case FlipAxis::Vertical: return std::make_pair(o.first, 1 - o.second);
        case FlipAxis::Transpose: return std::make_pair(o.second, o.first);
        }
        return o;
    };
    auto source_channel = [&](int d) {
        // Same-color candidates; greens may trade places.
        if (d == CFA_G1 || d == CFA_G2) {
            for (int c : {CFA_G1, CFA_G2})
                if (transform_offset(offs[c]) == offs[d])
                    return c;
        }
        return d;
    };
    PackedRaw moved;
    for (int d = 0; d < 4; ++d)
        moved.planes[d] = flip_plane(packed.planes[source_channel(d)], axis);
    RawFrame out = unpack_cfa(moved, frame.cfa);
    out.bit_depth = frame.bit_depth;
    out.exposure_gain = frame.exposure_gain;
    out.group = frame.group;
    out.noise = frame.noise;
    out.noise_known = frame.noise_known;
    return out;
}

RgbImage quantize_to_8bit(const RgbImage& img) {
    RgbImage out(img.width(), img.height(), 8);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < img.ch[c].data.size(); ++i)
            out.ch[c].data[i] = dequantize_sample(quantize_sample(img.ch[c].data[i], 255), 255);
    return out;
}

ImagePlane to_grayscale(const RgbImage& img) {
    ImagePlane out(img.width(), img.height());
    const float* r = img.ch[0].data.data();
    const float* g = img.ch[1].data.data();
    const float* b = img.ch[2].data.data();
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
    return out;
}

} // namespace burst::img
