#include "burst/sceneio.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "burst/imgcore.hpp"

namespace burst::io {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kManifestMajor = 1;

int version_major(const std::string& version) {
    try {
        return std::stoi(version.substr(0, version.find('.')));
    } catch (...) {
        fail_validation("malformed manifest format_version: " + version);
    }
}

} // namespace

std::string manifest_to_json(const SceneManifest& manifest, bool opaque) {
    ordered_json j;
    j["format_version"] = manifest.format_version;
    j["scene_id"] = manifest.scene_id;
    j["cfa"] = cfa_name(manifest.cfa);
    j["gains"] = manifest.gains;
    if (!opaque) {
        if (manifest.seed)
            j["seed"] = *manifest.seed;
        if (manifest.noise)
            j["noise"] = {{"shot_fullwell", manifest.noise->shot_fullwell},
                          {"read_sigma", manifest.noise->read_sigma}};
    }
    j["frames"] = ordered_json::array();
    for (const auto& f : manifest.frames) {
        ordered_json fj;
        fj["file"] = f.file;
        fj["exposure_group"] = exposure_group_name(f.group);
        fj["gain"] = f.gain;
        if (!opaque) {
            if (f.transform)
                fj["transform"] = {{"theta", f.transform->theta},
                                   {"tx", f.transform->tx},
                                   {"ty", f.transform->ty}};
            if (f.blur)
                fj["blur"] = {{"length", f.blur->first}, {"angle", f.blur->second}};
        }
        j["frames"].push_back(std::move(fj));
    }
    return j.dump(2) + "\n";
}

SceneManifest manifest_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail_io(std::string("malformed manifest JSON: ") + e.what());
    }
    SceneManifest m;
    try {
        m.format_version = j.at("format_version").get<std::string>();
        if (version_major(m.format_version) > kManifestMajor)
            fail_validation("manifest format_version " + m.format_version +
                            " is newer than supported major " + std::to_string(kManifestMajor));
        m.scene_id = j.at("scene_id").get<std::string>();
        m.cfa = cfa_from_name(j.at("cfa").get<std::string>());
        auto gains = j.at("gains");
        if (!gains.is_array() || gains.size() != 3)
            fail_validation("manifest gains must hold three values");
        for (int i = 0; i < 3; ++i)
            m.gains[i] = gains[i].get<double>();
        if (!(m.gains[0] > 0 && m.gains[0] < m.gains[1] && m.gains[1] < m.gains[2]))
            fail_validation("manifest gains must satisfy 0 < low < mid < high");
        if (j.contains("seed"))
            m.seed = j.at("seed").get<uint64_t>();
        if (j.contains("noise")) {
            NoiseParams np;
            np.shot_fullwell = j.at("noise").at("shot_fullwell").get<double>();
            np.read_sigma = j.at("noise").at("read_sigma").get<double>();
            m.noise = np;
        }
        const auto& frames = j.at("frames");
        if (!frames.is_array() || frames.size() != 9)
            fail_validation("manifest must describe exactly 9 frames, found " +
                            std::to_string(frames.size()));
        for (const auto& fj : frames) {
            FrameMeta f;
            f.file = fj.at("file").get<std::string>();
            f.group = exposure_group_from_name(fj.at("exposure_group").get<std::string>());
            f.gain = fj.at("gain").get<double>();
            if (fj.contains("transform")) {
                RigidTransform t;
                t.theta = fj.at("transform").at("theta").get<double>();
                t.tx = fj.at("transform").at("tx").get<double>();
                t.ty = fj.at("transform").at("ty").get<double>();
                f.transform = t;
            }
            if (fj.contains("blur"))
                f.blur = std::make_pair(fj.at("blur").at("length").get<int>(),
                                        fj.at("blur").at("angle").get<double>());
            m.frames.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        fail_io(std::string("manifest missing required fields: ") + e.what());
    }
    if (m.frames[0].transform && !m.frames[0].transform->is_identity())
        fail_validation("manifest frame 0 must carry the identity transform (reference frame)");
    if (m.frames[0].blur && m.frames[0].blur->first > 1)
        fail_validation("manifest frame 0 must carry an identity blur (reference frame)");
    return m;
}

void save_scene(const BurstScene& scene, const std::string& dir, bool opaque) {
    if (scene.frames.size() != 9)
        fail_validation("save_scene: expected 9 frames");
    fs::create_directories(dir);
    SceneManifest m = scene.meta;
    if (m.scene_id.empty())
        m.scene_id = fs::path(dir).filename().string();
    for (int i = 0; i < 9; ++i) {
        if (m.frames[i].file.empty())
            m.frames[i].file = "frame_" + std::to_string(i) + ".tif";
        write_tiff16(scene.frames[i].plane, (fs::path(dir) / m.frames[i].file).string());
    }
    write_tiff16(scene.gt, (fs::path(dir) / "gt.tif").string());
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!mf)
        fail_io("cannot write manifest in " + dir);
    mf << manifest_to_json(m, opaque);
}

BurstScene load_scene(const std::string& dir) {
    const fs::path root(dir);
    const fs::path mpath = root / "manifest.json";
    std::ifstream mf(mpath);
    if (!mf)
        fail_io("cannot open manifest: " + mpath.string());
    std::string text((std::istreambuf_iterator<char>(mf)), std::istreambuf_iterator<char>());

    BurstScene scene;
    scene.meta = manifest_from_json(text);
    scene.frames.resize(9);
    for (int i = 0; i < 9; ++i) {
        const fs::path fpath = root / scene.meta.frames[i].file;
        if (!fs::exists(fpath))
            fail_io("scene frame file missing: " + fpath.string());
        RawFrame f;
        f.plane = read_tiff16_gray(fpath.string());
        f.cfa = scene.meta.cfa;
        f.exposure_gain = scene.meta.frames[i].gain;
        f.group = scene.meta.frames[i].group;
        f.noise_known = scene.meta.noise.has_value();
        if (f.noise_known)
            f.noise = *scene.meta.noise;
        scene.frames[i] = std::move(f);
        if (!scene.frames[i].plane.same_size(scene.frames[0].plane))
            fail_validation("scene frames disagree in size: " + fpath.string());
    }
    const fs::path gtpath = root / "gt.tif";
    if (!fs::exists(gtpath))
        fail_io("scene ground truth missing: " + gtpath.string());
    scene.gt = read_tiff16_rgb(gtpath.string());
    if (scene.gt.width() != scene.frames[0].plane.width ||
        scene.gt.height() != scene.frames[0].plane.height)
        fail_validation("ground truth dimensions disagree with frames in " + dir);
    return scene;
}

namespace {
constexpr uint8_t kFlowMagic[8] = {'B', 'F', 'L', 'O', 'W', 0, 1, 0};
}

void write_flow(const align::FlowField& flow, const std::string& path) {
    if (!flow.dx.same_size(flow.dy))
        fail_validation("write_flow: dx/dy sizes disagree");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        fail_io("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(kFlowMagic), 8);
    const uint32_t w = static_cast<uint32_t>(flow.dx.width);
    const uint32_t h = static_cast<uint32_t>(flow.dx.height);
    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(w);
    put_u32(h);
    for (int y = 0; y < flow.dx.height; ++y)
        for (int x = 0; x < flow.dx.width; ++x) {
            float pair[2] = {flow.dx.at(x, y), flow.dy.at(x, y)};
            f.write(reinterpret_cast<const char*>(pair), 8);
        }
    if (!f)
        fail_io("write failed: " + path);
}

align::FlowField read_flow(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        fail_io("cannot open: " + path);
    uint8_t magic[8];
    f.read(reinterpret_cast<char*>(magic), 8);
    if (!f || std::memcmp(magic, kFlowMagic, 8) != 0)
        fail_io("not a flow dump (bad magic): " + path);
    auto get_u32 = [&]() {
        uint8_t b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
               (static_cast<uint32_t>(b[3]) << 24);
    };
    const uint32_t w = get_u32();
    const uint32_t h = get_u32();
    if (!f || w == 0 || h == 0 || w > 1u << 20 || h > 1u << 20)
        fail_io("malformed flow dump header: " + path);
    align::FlowField flow;
    flow.dx = ImagePlane(static_cast<int>(w), static_cast<int>(h));
    flow.dy = ImagePlane(static_cast<int>(w), static_cast<int>(h));
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            float pair[2];
            f.read(reinterpret_cast<char*>(pair), 8);
            flow.dx.at(static_cast<int>(x), static_cast<int>(y)) = pair[0];
            flow.dy.at(static_cast<int>(x), static_cast<int>(y)) = pair[1];
        }
    if (!f)
        fail_io("truncated flow dump: " + path);
    return flow;
}

} // namespace burst::io
