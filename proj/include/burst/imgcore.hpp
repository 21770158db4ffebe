#pragma once

#include "burst/types.hpp"

namespace burst::img {

enum class FlipAxis { Horizontal, Vertical, Transpose };

// Split a mosaicked frame into four half-resolution site planes (R, G1, G2, B).
// Exact inverse of unpack_cfa.
PackedRaw pack_cfa(const RawFrame& frame);

// Reassemble a frame from site planes under the given CFA phase.
RawFrame unpack_cfa(const PackedRaw& packed, CfaPattern cfa);

// Flip or transpose a mosaic without changing any pixel's CFA site class.
// Mirrors reflect about a half-integer axis (x -> W-2-x) with the last
// row/column pinned, so the operation is an exact involution.
RawFrame bayer_flip(const RawFrame& frame, FlipAxis axis);

// v8 = clamp(round(v * 255), 0, 255), round half away from zero. Output
// samples are stored as k/255 with bit_depth tag 8.
RgbImage quantize_to_8bit(const RgbImage& img);

// Rec.601 luma: Y = 0.299 R + 0.587 G + 0.114 B.
ImagePlane to_grayscale(const RgbImage& img);

// Shared quantizers (round half away from zero, clamped).
int quantize_sample(float v, int levels); // levels = 255 or 65535
float dequantize_sample(int q, int levels);

} // namespace burst::img
