#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "burst/error.hpp"

namespace burst {

// Single-channel raster of linear-light samples, nominal range [0,1].
// Row-major, y*width + x.
struct ImagePlane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ImagePlane() = default;
    ImagePlane(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    float* row(int y) { return data.data() + static_cast<size_t>(y) * width; }
    const float* row(int y) const { return data.data() + static_cast<size_t>(y) * width; }

    size_t size() const { return data.size(); }
    bool same_size(const ImagePlane& o) const { return width == o.width && height == o.height; }
};

enum class CfaPattern { RGGB, GRBG, GBRG, BGGR };

const char* cfa_name(CfaPattern cfa);
CfaPattern cfa_from_name(const std::string& name);

// Channel index convention for packed planes: 0=R, 1=G on the red row,
// 2=G on the blue row, 3=B.
enum CfaChannel : int { CFA_R = 0, CFA_G1 = 1, CFA_G2 = 2, CFA_B = 3 };

// Offset (dx,dy) of each channel inside the 2x2 CFA cell.
std::array<std::pair<int, int>, 4> cfa_offsets(CfaPattern cfa);

// Channel class of pixel (x,y) under the given pattern.
CfaChannel cfa_channel_at(CfaPattern cfa, int x, int y);

enum class ExposureGroup { Low, Mid, High };

const char* exposure_group_name(ExposureGroup g);
ExposureGroup exposure_group_from_name(const std::string& name);

// Poisson-Gaussian sensor model. A sample x in [0,1] is observed as
// Poisson(x * shot_fullwell) / shot_fullwell + N(0, read_sigma^2).
struct NoiseParams {
    double shot_fullwell = 2000.0; // electrons at saturation
    double read_sigma = 0.01;      // read noise std dev, normalized units
};

// One mosaicked Bayer frame plus capture metadata.
struct RawFrame {
    ImagePlane plane;
    CfaPattern cfa = CfaPattern::RGGB;
    int bit_depth = 16;
    double exposure_gain = 1.0;
    ExposureGroup group = ExposureGroup::Mid;
    NoiseParams noise;
    bool noise_known = true;
};

// Four half-resolution planes, one per CFA site class (R, G1, G2, B).
struct PackedRaw {
    std::array<ImagePlane, 4> planes;

    int width() const { return planes[0].width; }
    int height() const { return planes[0].height; }
    bool same_size(const PackedRaw& o) const { return planes[0].same_size(o.planes[0]); }
};

struct RgbImage {
    std::array<ImagePlane, 3> ch;
    int bit_depth = 16;

    RgbImage() = default;
    RgbImage(int w, int h, int depth = 16)
        : ch{ImagePlane(w, h), ImagePlane(w, h), ImagePlane(w, h)}, bit_depth(depth) {}

    int width() const { return ch[0].width; }
    int height() const { return ch[0].height; }
};

} // namespace burst
