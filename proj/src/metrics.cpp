#include "burst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <set>

#include <fftw3.h>

#include "burst/imgcore.hpp"
#include "burst/parallel.hpp"
#include "burst/sceneio.hpp"

namespace burst::metrics {

namespace {

void require_same_size(const RgbImage& a, const RgbImage& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        fail_validation(std::string(what) + ": image sizes disagree (" + std::to_string(a.width()) +
                        "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()) + ")");
}

} // namespace

double psnr_8bit(const RgbImage& pred, const RgbImage& gt) {
    require_same_size(pred, gt, "psnr_8bit");
    uint64_t sq = 0;
    const size_t n = pred.ch[0].data.size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < n; ++i) {
            const int a = img::quantize_sample(pred.ch[c].data[i], 255);
            const int b = img::quantize_sample(gt.ch[c].data[i], 255);
            const int d = a - b;
            sq += static_cast<uint64_t>(d) * d;
        }
    if (sq == 0)
        return 100.0;
    const double mse = static_cast<double>(sq) / (3.0 * n);
    return std::min(100.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

std::vector<double> gaussian_window11() {
    std::vector<double> w(11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        w[i] = std::exp(-d * d / (2 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

// Separable filtering of the fully-interior region.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
    const int r = static_cast<int>(k.size()) / 2;
    const int vw = w - 2 * r;
    const int vh = h - 2 * r;
    std::vector<double> tmp(static_cast<size_t>(vw) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i)
                acc += k[i] * src[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * vw + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(vw) * vh, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i)
                acc += k[i] * tmp[static_cast<size_t>(y + i) * vw + x];
            out[static_cast<size_t>(y) * vw + x] = acc;
        }
    return out;
}

std::vector<double> gray255(const RgbImage& img) {
    const RgbImage q = img::quantize_to_8bit(img);
    const ImagePlane g = img::to_grayscale(q);
    std::vector<double> out(g.data.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<double>(g.data[i]) * 255.0;
    return out;
}

} // namespace

double ssim_gray(const RgbImage& pred, const RgbImage& gt) {
    require_same_size(pred, gt, "ssim_gray");
    const int w = pred.width();
    const int h = pred.height();
    if (w < 11 || h < 11)
        fail_validation("ssim_gray: images smaller than the 11x11 window");

    const std::vector<double> x = gray255(pred);
    const std::vector<double> y = gray255(gt);
    const size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto k = gaussian_window11();
    const auto mu_x = filter_valid(x, w, h, k);
    const auto mu_y = filter_valid(y, w, h, k);
    const auto m_xx = filter_valid(xx, w, h, k);
    const auto m_yy = filter_valid(yy, w, h, k);
    const auto m_xy = filter_valid(xy, w, h, k);

    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    double total = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
        const double sx = m_xx[i] - mu_x[i] * mu_x[i];
        const double sy = m_yy[i] - mu_y[i] * mu_y[i];
        const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2 * mu_x[i] * mu_y[i] + c1) * (2 * sxy + c2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (sx + sy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

double charbonnier(const RgbImage& pred, const RgbImage& gt, double eps) {
    require_same_size(pred, gt, "charbonnier");
    if (!(eps > 0))
        fail_validation("charbonnier: eps must be positive");
    double total = 0.0;
    const size_t n = pred.ch[0].data.size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(pred.ch[c].data[i]) - gt.ch[c].data[i];
            total += std::sqrt(d * d + eps * eps);
        }
    return total / (3.0 * n);
}

namespace {
std::mutex fftw_mutex; // FFTW's planner is not thread-safe
} // namespace

double fft_l1(const RgbImage& pred, const RgbImage& gt) {
    require_same_size(pred, gt, "fft_l1");
    const int w = pred.width();
    const int h = pred.height();
    const size_t n = static_cast<size_t>(w) * h;

    fftw_complex* in;
    fftw_complex* out_a;
    fftw_complex* out_b;
    fftw_plan plan_a;
    fftw_plan plan_b;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        in = fftw_alloc_complex(n);
        out_a = fftw_alloc_complex(n);
        out_b = fftw_alloc_complex(n);
        plan_a = fftw_plan_dft_2d(h, w, in, out_a, FFTW_FORWARD, FFTW_ESTIMATE);
        plan_b = fftw_plan_dft_2d(h, w, in, out_b, FFTW_FORWARD, FFTW_ESTIMATE);
    }

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < n; ++i) {
            in[i][0] = pred.ch[c].data[i];
            in[i][1] = 0.0;
        }
        fftw_execute(plan_a);
        for (size_t i = 0; i < n; ++i) {
            in[i][0] = gt.ch[c].data[i];
            in[i][1] = 0.0;
        }
        fftw_execute(plan_b);
        for (size_t i = 0; i < n; ++i)
            total += std::abs(out_a[i][0] - out_b[i][0]) + std::abs(out_a[i][1] - out_b[i][1]);
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_destroy_plan(plan_a);
        fftw_destroy_plan(plan_b);
        fftw_free(in);
        fftw_free(out_a);
        fftw_free(out_b);
    }
    return total / (3.0 * n * 2.0);
}

RgbImage downsample8(const RgbImage& img) {
    const int w8 = (img.width() + 7) / 8;
    const int h8 = (img.height() + 7) / 8;
    RgbImage out(w8, h8, img.bit_depth);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h8; ++y)
            for (int x = 0; x < w8; ++x) {
                const int x1 = std::min((x + 1) * 8, img.width());
                const int y1 = std::min((y + 1) * 8, img.height());
                double acc = 0.0;
                for (int yy = y * 8; yy < y1; ++yy)
                    for (int xx = x * 8; xx < x1; ++xx)
                        acc += img.ch[c].at(xx, yy);
                out.ch[c].at(x, y) = static_cast<float>(acc / ((x1 - x * 8) * (y1 - y * 8)));
            }
    return out;
}

double composite_grad_yuv(const RgbImage& pred, const RgbImage& gt,
                          const RgbImage& pred_ds8, const RgbImage& gt_ds8) {
    require_same_size(pred, gt, "composite");
    const int w8 = (pred.width() + 7) / 8;
    const int h8 = (pred.height() + 7) / 8;
    if (pred_ds8.width() != w8 || pred_ds8.height() != h8 || gt_ds8.width() != w8 ||
        gt_ds8.height() != h8)
        fail_validation("composite: downsampled dims must be ceil(dims/8)");

    const int w = pred.width();
    const int h = pred.height();
    const size_t n = static_cast<size_t>(w) * h;

    double term1 = 0.0;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < n; ++i)
            term1 += std::abs(static_cast<double>(pred.ch[c].data[i]) - gt.ch[c].data[i]);
    term1 /= 3.0 * n;

    // Forward differences, replicate last row/column.
    double term2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        const ImagePlane& p = pred.ch[c];
        const ImagePlane& g = gt.ch[c];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int xr = std::min(x + 1, w - 1);
                const int yd = std::min(y + 1, h - 1);
                const double pdx = static_cast<double>(p.at(xr, y)) - p.at(x, y);
                const double gdx = static_cast<double>(g.at(xr, y)) - g.at(x, y);
                const double pdy = static_cast<double>(p.at(x, yd)) - p.at(x, y);
                const double gdy = static_cast<double>(g.at(x, yd)) - g.at(x, y);
                term2 += std::abs(pdx - gdx) + std::abs(pdy - gdy);
            }
    }
    term2 = 50.0 * term2 / (2.0 * 3.0 * n);

    // BT.601 YUV on the 8x pools.
    double term3 = 0.0;
    const size_t n8 = static_cast<size_t>(w8) * h8;
    for (size_t i = 0; i < n8; ++i) {
        const double pr = pred_ds8.ch[0].data[i], pg = pred_ds8.ch[1].data[i], pb = pred_ds8.ch[2].data[i];
        const double gr = gt_ds8.ch[0].data[i], gg = gt_ds8.ch[1].data[i], gb = gt_ds8.ch[2].data[i];
        const double py = 0.299 * pr + 0.587 * pg + 0.114 * pb;
        const double gy = 0.299 * gr + 0.587 * gg + 0.114 * gb;
        const double pu = -0.14713 * pr - 0.28886 * pg + 0.436 * pb;
        const double gu = -0.14713 * gr - 0.28886 * gg + 0.436 * gb;
        const double pv = 0.615 * pr - 0.51499 * pg - 0.10001 * pb;
        const double gv = 0.615 * gr - 0.51499 * gg - 0.10001 * gb;
        term3 += std::abs(py - gy) + std::abs(pu - gu) + std::abs(pv - gv);
    }
    term3 = 0.8 * term3 / (3.0 * n8);

    return term1 + term2 + term3;
}

namespace {

namespace fs = std::filesystem;

std::map<std::string, fs::path> discover_scenes(const std::string& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::exists(dir))
        fail_io("directory not found: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".tif") {
            out[entry.path().stem().string()] = entry.path();
        } else if (entry.is_directory()) {
            fs::path gt = entry.path() / "gt.tif";
            if (fs::exists(gt))
                out[entry.path().filename().string()] = gt;
        }
    }
    return out;
}

} // namespace

MetricsReport evaluate_set(const std::string& pred_dir, const std::string& gt_dir,
                           const EvalOptions& opts) {
    const auto preds = discover_scenes(pred_dir);
    const auto gts = discover_scenes(gt_dir);
    std::vector<std::string> missing, extra;
    for (const auto& [id, p] : gts)
        if (!preds.count(id))
            missing.push_back(id);
    for (const auto& [id, p] : preds)
        if (!gts.count(id))
            extra.push_back(id);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "evaluate_set: scene sets disagree;";
        if (!missing.empty()) {
            msg += " missing predictions:";
            for (const auto& id : missing)
                msg += " " + id;
        }
        if (!extra.empty()) {
            msg += " unmatched predictions:";
            for (const auto& id : extra)
                msg += " " + id;
        }
        fail_validation(msg);
    }
    if (gts.empty())
        fail_validation("evaluate_set: no scenes found");

    std::vector<std::string> ids;
    for (const auto& [id, p] : gts)
        ids.push_back(id); // std::map iterates sorted

    MetricsReport report;
    report.scenes.resize(ids.size());
    parallel_for(static_cast<int>(ids.size()), opts.threads, [&](int i) {
        const RgbImage pred = io::read_tiff16_rgb(preds.at(ids[i]).string());
        const RgbImage gt = io::read_tiff16_rgb(gts.at(ids[i]).string());
        SceneScore score;
        score.scene_id = ids[i];
        score.psnr_db = psnr_8bit(pred, gt);
        score.ssim = ssim_gray(pred, gt);
        if (opts.with_losses) {
            LossValues lv;
            lv.charbonnier = charbonnier(pred, gt, 1e-3);
            lv.fft_l1 = fft_l1(pred, gt);
            lv.composite = composite_grad_yuv(pred, gt, downsample8(pred), downsample8(gt));
            score.losses = lv;
        }
        report.scenes[i] = std::move(score);
    });
    report.n_scenes = static_cast<int>(ids.size());
    for (const auto& s : report.scenes) {
        report.mean_psnr_db += s.psnr_db;
        report.mean_ssim += s.ssim;
    }
    report.mean_psnr_db /= report.n_scenes;
    report.mean_ssim /= report.n_scenes;
    return report;
}

} // namespace burst::metrics
