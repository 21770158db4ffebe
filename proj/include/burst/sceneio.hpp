#pragma once

#include <string>
#include <variant>

#include "burst/align.hpp"
#include "burst/scene.hpp"

namespace burst::io {

// Supported TIFF subset: baseline, little-endian, uncompressed, 16-bit
// unsigned, single strip on write, gray or chunky RGB. Anything else is
// rejected with the offending tag named.
void write_tiff16(const ImagePlane& plane, const std::string& path);
void write_tiff16(const RgbImage& rgb, const std::string& path);

using TiffImage = std::variant<ImagePlane, RgbImage>;
TiffImage read_tiff16(const std::string& path);
ImagePlane read_tiff16_gray(const std::string& path);
RgbImage read_tiff16_rgb(const std::string& path);

// Scene directory: frame_0.tif .. frame_8.tif, gt.tif, manifest.json.
// `opaque` strips the degradation ground truth (transforms, blur, noise,
// seed) from the manifest.
void save_scene(const BurstScene& scene, const std::string& dir, bool opaque = false);
BurstScene load_scene(const std::string& dir);

SceneManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const SceneManifest& manifest, bool opaque = false);

// Flow dump: magic "BFLOW\0\1\0", u32 width, u32 height, then row-major
// interleaved (dx, dy) float32 pairs; all little-endian.
void write_flow(const align::FlowField& flow, const std::string& path);
align::FlowField read_flow(const std::string& path);

} // namespace burst::io
