#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include "burst/imgcore.hpp"
#include "burst/sceneio.hpp"

namespace burst::io {

namespace {

enum TiffTag : uint16_t {
    TagImageWidth = 256,
    TagImageLength = 257,
    TagBitsPerSample = 258,
    TagCompression = 259,
    TagPhotometric = 262,
    TagStripOffsets = 273,
    TagSamplesPerPixel = 277,
    TagRowsPerStrip = 278,
    TagStripByteCounts = 279,
    TagPlanarConfig = 284,
    TagPredictor = 317,
    TagTileWidth = 322,
    TagSampleFormat = 339,
};

enum TiffType : uint16_t { TypeShort = 3, TypeLong = 4 };

struct ByteWriter {
    std::vector<uint8_t> bytes;
    void u16(uint16_t v) {
        bytes.push_back(v & 0xff);
        bytes.push_back(v >> 8);
    }
    void u32(uint32_t v) {
        u16(v & 0xffff);
        u16(v >> 16);
    }
};

struct IfdEntry {
    uint16_t tag;
    uint16_t type;
    uint32_t count;
    uint32_t value; // inline value or offset
};

void write_tiff(const std::vector<const ImagePlane*>& planes, const std::string& path) {
    const int spp = static_cast<int>(planes.size());
    const int w = planes[0]->width;
    const int h = planes[0]->height;
    const uint32_t data_bytes = static_cast<uint32_t>(w) * h * spp * 2;

    ByteWriter out;
    out.bytes.reserve(8 + data_bytes + 256);
    // Header: little-endian, magic 42, IFD follows the strip data.
    out.bytes.push_back('I');
    out.bytes.push_back('I');
    out.u16(42);
    out.u32(8 + data_bytes);
    // Single strip, chunky samples.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < spp; ++c)
                out.u16(static_cast<uint16_t>(img::quantize_sample(planes[c]->at(x, y), 65535)));

    std::vector<IfdEntry> entries;
    std::vector<uint16_t> extra; // external SHORT arrays appended after the IFD
    auto add = [&](uint16_t tag, uint16_t type, uint32_t count, uint32_t value) {
        entries.push_back({tag, type, count, value});
    };
    const uint32_t ifd_offset = 8 + data_bytes;

    add(TagImageWidth, TypeLong, 1, static_cast<uint32_t>(w));
    add(TagImageLength, TypeLong, 1, static_cast<uint32_t>(h));
    if (spp == 1) {
        add(TagBitsPerSample, TypeShort, 1, 16);
    } else {
        add(TagBitsPerSample, TypeShort, 3, 0); // offset patched below
    }
    add(TagCompression, TypeShort, 1, 1);
    add(TagPhotometric, TypeShort, 1, spp == 1 ? 1 : 2);
    add(TagStripOffsets, TypeLong, 1, 8);
    add(TagSamplesPerPixel, TypeShort, 1, static_cast<uint32_t>(spp));
    add(TagRowsPerStrip, TypeLong, 1, static_cast<uint32_t>(h));
    add(TagStripByteCounts, TypeLong, 1, data_bytes);
    add(TagPlanarConfig, TypeShort, 1, 1);
    if (spp == 1) {
        add(TagSampleFormat, TypeShort, 1, 1);
    } else {
        add(TagSampleFormat, TypeShort, 3, 0);
    }

    const uint32_t entries_bytes = 2 + 12 * static_cast<uint32_t>(entries.size()) + 4;
    uint32_t extra_offset = ifd_offset + entries_bytes;
    for (auto& e : entries) {
        if (e.type == TypeShort && e.count == 3) {
            e.value = extra_offset;
            for (int i = 0; i < 3; ++i)
                extra.push_back(e.tag == TagBitsPerSample ? 16 : 1);
            extra_offset += 6;
        }
    }

    out.u16(static_cast<uint16_t>(entries.size()));
    for (const auto& e : entries) {
        out.u16(e.tag);
        out.u16(e.type);
        out.u32(e.count);
        if (e.type == TypeShort && e.count == 1) {
            out.u16(static_cast<uint16_t>(e.value));
            out.u16(0);
        } else {
            out.u32(e.value);
        }
    }
    out.u32(0); // next IFD
    for (uint16_t v : extra)
        out.u16(v);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        fail_io("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.bytes.data()),
            static_cast<std::streamsize>(out.bytes.size()));
    if (!f)
        fail_io("write failed: " + path);
}

struct ByteReader {
    std::vector<uint8_t> bytes;
    const std::string* path;

    uint16_t u16(size_t off) const {
        if (off + 2 > bytes.size())
            fail_io("truncated TIFF: " + *path);
        return static_cast<uint16_t>(bytes[off] | (bytes[off + 1] << 8));
    }
    uint32_t u32(size_t off) const {
        if (off + 4 > bytes.size())
            fail_io("truncated TIFF: " + *path);
        return static_cast<uint32_t>(u16(off)) | (static_cast<uint32_t>(u16(off + 2)) << 16);
    }
};

struct RawEntry {
    uint16_t type = 0;
    uint32_t count = 0;
    uint32_t raw = 0; // value field bytes as u32
    size_t value_field_offset = 0;
};

// Read count values of SHORT/LONG type (inline or external).
std::vector<uint32_t> entry_values(const ByteReader& r, const RawEntry& e, uint16_t tag) {
    const size_t unit = e.type == TypeShort ? 2 : e.type == TypeLong ? 4 : 0;
    if (unit == 0)
        fail_unsupported("unsupported TIFF field type " + std::to_string(e.type) + " (tag " +
                         std::to_string(tag) + ")");
    std::vector<uint32_t> vals;
    const size_t total = unit * e.count;
    const size_t base = total <= 4 ? e.value_field_offset : r.u32(e.value_field_offset);
    for (uint32_t i = 0; i < e.count; ++i)
        vals.push_back(unit == 2 ? r.u16(base + 2 * i) : r.u32(base + 4 * i));
    return vals;
}

} // namespace

void write_tiff16(const ImagePlane& plane, const std::string& path) {
    if (plane.width <= 0 || plane.height <= 0)
        fail_validation("write_tiff16: empty image");
    write_tiff({&plane}, path);
}

void write_tiff16(const RgbImage& rgb, const std::string& path) {
    if (rgb.width() <= 0 || rgb.height() <= 0)
        fail_validation("write_tiff16: empty image");
    write_tiff({&rgb.ch[0], &rgb.ch[1], &rgb.ch[2]}, path);
}

TiffImage read_tiff16(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail_io("cannot open: " + path);
    ByteReader r;
    r.path = &path;
    r.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    if (r.bytes.size() < 8)
        fail_io("truncated TIFF: " + path);
    if (r.bytes[0] == 'M' && r.bytes[1] == 'M')
        fail_unsupported("big-endian TIFF is not supported: " + path);
    if (r.bytes[0] != 'I' || r.bytes[1] != 'I' || r.u16(2) != 42)
        fail_io("not a TIFF file: " + path);

    const uint32_t ifd = r.u32(4);
    const uint16_t n_entries = r.u16(ifd);
    std::map<uint16_t, RawEntry> entries;
    for (uint16_t i = 0; i < n_entries; ++i) {
        const size_t off = ifd + 2 + static_cast<size_t>(i) * 12;
        RawEntry e;
        const uint16_t tag = r.u16(off);
        e.type = r.u16(off + 2);
        e.count = r.u32(off + 4);
        e.value_field_offset = off + 8;
        e.raw = r.u32(off + 8);
        entries[tag] = e;
    }

    auto get_scalar = [&](uint16_t tag, uint32_t fallback, bool required) -> uint32_t {
        auto it = entries.find(tag);
        if (it == entries.end()) {
            if (required)
                fail_io("TIFF missing required tag " + std::to_string(tag) + ": " + path);
            return fallback;
        }
        return entry_values(r, it->second, tag).at(0);
    };

    if (entries.count(TagTileWidth))
        fail_unsupported("tiled TIFF is not supported (tag 322): " + path);
    const uint32_t compression = get_scalar(TagCompression, 1, false);
    if (compression != 1)
        fail_unsupported("compressed TIFF is not supported (tag 259, value " +
                         std::to_string(compression) + "): " + path);
    const uint32_t predictor = get_scalar(TagPredictor, 1, false);
    if (predictor != 1)
        fail_unsupported("TIFF predictor is not supported (tag 317): " + path);
    const uint32_t planar = get_scalar(TagPlanarConfig, 1, false);
    if (planar != 1)
        fail_unsupported("planar TIFF is not supported (tag 284, value " + std::to_string(planar) +
                         "): " + path);

    const uint32_t w = get_scalar(TagImageWidth, 0, true);
    const uint32_t h = get_scalar(TagImageLength, 0, true);
    const uint32_t spp = get_scalar(TagSamplesPerPixel, 1, false);
    if (spp != 1 && spp != 3)
        fail_unsupported("TIFF with " + std::to_string(spp) +
                         " samples/pixel is not supported (tag 277): " + path);
    const uint32_t photometric = get_scalar(TagPhotometric, spp == 1 ? 1 : 2, false);
    if ((spp == 1 && photometric > 1) || (spp == 3 && photometric != 2))
        fail_unsupported("unsupported photometric interpretation (tag 262, value " +
                         std::to_string(photometric) + "): " + path);

    {
        auto it = entries.find(TagBitsPerSample);
        if (it == entries.end())
            fail_io("TIFF missing required tag 258: " + path);
        for (uint32_t bits : entry_values(r, it->second, TagBitsPerSample))
            if (bits != 16)
                fail_unsupported("only 16-bit samples are supported (tag 258, value " +
                                 std::to_string(bits) + "): " + path);
    }
    if (entries.count(TagSampleFormat))
        for (uint32_t sf : entry_values(r, entries[TagSampleFormat], TagSampleFormat))
            if (sf != 1)
                fail_unsupported("only unsigned samples are supported (tag 339, value " +
                                 std::to_string(sf) + "): " + path);

    auto offsets = entry_values(r, entries.count(TagStripOffsets)
                                       ? entries[TagStripOffsets]
                                       : throw Error(ErrorKind::Io, "TIFF missing tag 273: " + path),
                                TagStripOffsets);
    auto counts = entry_values(r, entries.count(TagStripByteCounts)
                                      ? entries[TagStripByteCounts]
                                      : throw Error(ErrorKind::Io, "TIFF missing tag 279: " + path),
                               TagStripByteCounts);
    if (offsets.size() != counts.size())
        fail_io("TIFF strip tables disagree: " + path);

    const size_t expected = static_cast<size_t>(w) * h * spp * 2;
    std::vector<uint8_t> data;
    data.reserve(expected);
    for (size_t s = 0; s < offsets.size(); ++s) {
        if (offsets[s] + counts[s] > r.bytes.size())
            fail_io("TIFF strip out of range: " + path);
        data.insert(data.end(), r.bytes.begin() + offsets[s], r.bytes.begin() + offsets[s] + counts[s]);
    }
    if (data.size() != expected)
        fail_io("TIFF pixel data size disagrees with dimensions: " + path);

    auto sample = [&](size_t idx) {
        return img::dequantize_sample(data[2 * idx] | (data[2 * idx + 1] << 8), 65535);
    };
    if (spp == 1) {
        ImagePlane plane(static_cast<int>(w), static_cast<int>(h));
        for (size_t i = 0; i < plane.data.size(); ++i)
            plane.data[i] = sample(i);
        return plane;
    }
    RgbImage rgb(static_cast<int>(w), static_cast<int>(h), 16);
    for (size_t i = 0; i < rgb.ch[0].data.size(); ++i)
        for (int c = 0; c < 3; ++c)
            rgb.ch[c].data[i] = sample(i * 3 + c);
    return rgb;
}

ImagePlane read_tiff16_gray(const std::string& path) {
    TiffImage img = read_tiff16(path);
    if (auto* p = std::get_if<ImagePlane>(&img))
        return std::move(*p);
    fail_io("expected a grayscale TIFF: " + path);
}

RgbImage read_tiff16_rgb(const std::string& path) {
    TiffImage img = read_tiff16(path);
    if (auto* p = std::get_if<RgbImage>(&img))
        return std::move(*p);
    fail_io("expected an RGB TIFF: " + path);
}

} // namespace burst::io
