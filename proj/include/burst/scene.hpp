#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "burst/types.hpp"

namespace burst {

// Rigid motion about the image center, applied content-side.
struct RigidTransform {
    double theta = 0.0; // radians
    double tx = 0.0;    // pixels
    double ty = 0.0;

    bool is_identity() const { return theta == 0.0 && tx == 0.0 && ty == 0.0; }
};

// Linear motion-blur kernel: `length` unit taps along `angle`, rasterized
// onto a 2-D grid with bilinear splatting and normalized to unit sum.
struct BlurKernel {
    int length = 1;
    double angle = 0.0;
    ImagePlane taps; // odd-sized grid, sums to 1

    bool is_identity() const { return length <= 1; }
};

BlurKernel make_blur_kernel(int length, double angle);

// Per-frame manifest entry. Degradation fields are optional so that
// "opaque" scenes (ground truth hidden) can round-trip through disk.
struct FrameMeta {
    std::string file;
    ExposureGroup group = ExposureGroup::Mid;
    double gain = 1.0;
    std::optional<RigidTransform> transform;
    std::optional<std::pair<int, double>> blur; // length, angle
};

struct SceneManifest {
    std::string scene_id;
    CfaPattern cfa = CfaPattern::RGGB;
    std::array<double, 3> gains{1.0, 4.0, 16.0}; // low, mid, high
    std::vector<FrameMeta> frames;               // exactly 9
    std::optional<NoiseParams> noise;
    std::optional<uint64_t> seed;
    std::string format_version = "1.0";
};

struct BurstScene {
    std::vector<RawFrame> frames; // 9 mosaicked frames
    RgbImage gt;                  // 16-bit render, may be empty for crops
    SceneManifest meta;
};

// Full recipe for one synthetic scene.
struct SceneSpec {
    uint64_t seed = 0;
    int width = 1536;  // full-resolution W
    int height = 768;  // full-resolution H
    std::array<double, 3> gains{1.0, 4.0, 16.0};
    std::array<RigidTransform, 9> transforms{};
    std::array<BlurKernel, 9> blurs{};
    NoiseParams noise;
    CfaPattern cfa = CfaPattern::RGGB;

    // Frame order: reference mid frame first, then the low trio, the two
    // remaining mids, and the high trio.
    static const std::array<ExposureGroup, 9>& frame_groups();
    double gain_for(int frame) const;

    void validate() const; // trio structure, frame-0 identity
};

} // namespace burst
