#include "burst/budget.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "burst/error.hpp"

namespace burst::budget {

const char* op_kind_name(OpKind k) {
    switch (k) {
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Pointwise: return "pointwise";
    case OpKind::Resample: return "resample";
    case OpKind::BlockMatch: return "blockmatch";
    case OpKind::LkIter: return "lk_iter";
    case OpKind::Elementwise: return "elementwise";
    case OpKind::Reduce: return "reduce";
    case OpKind::Fft: return "fft";
    }
    return "elementwise";
}

OpKind op_kind_from_name(const std::string& name) {
    if (name == "conv2d") return OpKind::Conv2d;
    if (name == "pointwise") return OpKind::Pointwise;
    if (name == "resample") return OpKind::Resample;
    if (name == "blockmatch") return OpKind::BlockMatch;
    if (name == "lk_iter") return OpKind::LkIter;
    if (name == "elementwise") return OpKind::Elementwise;
    if (name == "reduce") return OpKind::Reduce;
    if (name == "fft") return OpKind::Fft;
    fail_validation("unknown op kind: " + name);
}

namespace {

void require_positive(int64_t v, const std::string& node, const char* field) {
    if (v <= 0)
        fail_validation("budget node '" + node + "': " + field + " must be positive");
}

} // namespace

BudgetReport count_flops(const std::vector<OpNode>& graph, int64_t input_h, int64_t input_w,
                         int mac_flops, const BudgetLimits& limits) {
    if (mac_flops != 1 && mac_flops != 2)
        fail_validation("count_flops: mac_flops must be 1 or 2");
    if (input_h <= 0 || input_w <= 0)
        fail_validation("count_flops: input dims must be positive");
    BudgetReport report;
    report.limits = limits;
    for (const auto& node : graph) {
        const int64_t h = node.h > 0 ? node.h : input_h;
        const int64_t w = node.w > 0 ? node.w : input_w;
        const double hw = static_cast<double>(h) * static_cast<double>(w);
        const double mac = static_cast<double>(mac_flops);
        NodeCost cost;
        cost.name = node.name.empty() ? op_kind_name(node.kind) : node.name;
        cost.kind = op_kind_name(node.kind);
        switch (node.kind) {
        case OpKind::Conv2d: {
            require_positive(node.cin, cost.name, "cin");
            require_positive(node.cout, cost.name, "cout");
            require_positive(node.kernel, cost.name, "kernel");
            const double k2 = static_cast<double>(node.kernel) * node.kernel;
            cost.flops = mac * k2 * node.cin * node.cout * hw;
            cost.params = k2 * node.cin * node.cout + (node.bias ? node.cout : 0);
            break;
        }
        case OpKind::Pointwise: {
            require_positive(node.cin, cost.name, "cin");
            require_positive(node.cout, cost.name, "cout");
            cost.flops = mac * node.cin * node.cout * hw;
            cost.params = static_cast<double>(node.cin) * node.cout + (node.bias ? node.cout : 0);
            break;
        }
        case OpKind::Resample:
            require_positive(node.channels, cost.name, "channels");
            // Bilinear: 4 taps, 8 flops per output sample (documented constant).
            cost.flops = 8.0 * node.channels * hw;
            break;
        case OpKind::BlockMatch: {
            require_positive(node.block, cost.name, "block");
            require_positive(node.tiles, cost.name, "tiles");
            if (node.radius < 0)
                fail_validation("budget node '" + cost.name + "': radius must be nonnegative");
            const double cands = static_cast<double>(2 * node.radius + 1) * (2 * node.radius + 1);
            const double b2 = static_cast<double>(node.block) * node.block;
            // Per candidate pixel: abs-diff, accumulate, mask multiply.
            cost.flops = 3.0 * cands * b2 * node.tiles;
            break;
        }
        case OpKind::LkIter: {
            require_positive(node.block, cost.name, "block");
            require_positive(node.tiles, cost.name, "tiles");
            require_positive(node.iters, cost.name, "iters");
            const double b2 = static_cast<double>(node.block) * node.block;
            // 38 flops per pixel per sweep (3 bilinear samples, residual and
            // normal-equation updates) plus a 20-flop 2x2 solve per tile.
            cost.flops = static_cast<double>(node.iters) * (38.0 * b2 + 20.0) * node.tiles;
            break;
        }
        case OpKind::Elementwise:
        case OpKind::Reduce:
            require_positive(node.channels, cost.name, "channels");
            if (node.flops_per_element < 0)
                fail_validation("budget node '" + cost.name + "': flops_per_element must be >= 0");
            cost.flops = node.flops_per_element * node.channels * hw;
            break;
        case OpKind::Fft:
            require_positive(node.channels, cost.name, "channels");
            // Complex mixed-radix transform: 5 N log2 N per channel.
            cost.flops = 5.0 * node.channels * hw * std::log2(hw);
            break;
        }
        if (node.param_count >= 0)
            cost.params = static_cast<double>(node.param_count);
        report.total_params += cost.params;
        report.total_flops += cost.flops;
        report.breakdown.push_back(std::move(cost));
    }
    report.pass = report.total_params <= limits.params && report.total_flops <= limits.flops;
    return report;
}

BudgetCheck check_budget(const BudgetReport& report) {
    BudgetCheck check;
    check.param_margin_pct =
        (report.limits.params - report.total_params) / report.limits.params * 100.0;
    check.flop_margin_pct = (report.limits.flops - report.total_flops) / report.limits.flops * 100.0;
    check.pass = report.total_params <= report.limits.params &&
                 report.total_flops <= report.limits.flops;
    if (report.total_params > report.limits.params) {
        std::ostringstream os;
        os << "parameters exceed the limit: " << report.total_params << " > " << report.limits.params
           << " (overshoot " << report.total_params / report.limits.params << "x)";
        check.violations.push_back(os.str());
    }
    if (report.total_flops > report.limits.flops) {
        std::ostringstream os;
        os << "FLOPs exceed the limit: " << report.total_flops << " > " << report.limits.flops
           << " (overshoot " << report.total_flops / report.limits.flops << "x)";
        check.violations.push_back(os.str());
    }
    return check;
}

std::vector<OpNode> pipeline_graph(const PipelineDims& dims) {
    const int64_t pw = dims.width / 2;
    const int64_t ph = dims.height / 2;
    const int64_t n = dims.frames;
    const int64_t targets = n - 1;
    std::vector<OpNode> graph;

    auto elementwise = [&](const std::string& name, int64_t channels, int64_t h, int64_t w,
                           double fpe) {
        OpNode node;
        node.kind = OpKind::Elementwise;
        node.name = name;
        node.channels = channels;
        node.h = h;
        node.w = w;
        node.flops_per_element = fpe;
        graph.push_back(node);
    };

    // Exposure normalization and validity masks over the packed planes.
    {
        OpNode node;
        node.kind = OpKind::Reduce;
        node.name = "gain_estimate";
        node.channels = 4 * n;
        node.h = ph;
        node.w = pw;
        node.flops_per_element = 4.0; // ratio + range tests
        graph.push_back(node);
    }
    elementwise("normalize", 4 * n, ph, pw, 1.0);
    elementwise("validity_mask", n, ph, pw, 6.0);
    elementwise("luma_proxy", n, ph, pw, 4.0);

    // Pyramid, block matching and LK per level.
    for (int l = 0; l < dims.levels; ++l) {
        const int64_t lw = pw >> l;
        const int64_t lh = ph >> l;
        const int64_t tiles_x = (lw + dims.block - 1) / dims.block;
        const int64_t tiles_y = (lh + dims.block - 1) / dims.block;
        if (l > 0) {
            OpNode ds;
            ds.kind = OpKind::Resample;
            ds.name = "pyramid_down_l" + std::to_string(l);
            ds.channels = 2 * n; // proxy + mask
            ds.h = lh;
            ds.w = lw;
            graph.push_back(ds);
        }
        OpNode bm;
        bm.kind = OpKind::BlockMatch;
        bm.name = "blockmatch_l" + std::to_string(l);
        bm.block = dims.block;
        bm.radius = dims.radius;
        bm.tiles = tiles_x * tiles_y * targets;
        graph.push_back(bm);

        OpNode lk;
        lk.kind = OpKind::LkIter;
        lk.name = "lk_refine_l" + std::to_string(l);
        lk.block = dims.block;
        lk.iters = dims.lk_iters;
        lk.tiles = tiles_x * tiles_y * targets;
        graph.push_back(lk);
    }

    {
        OpNode warp;
        warp.kind = OpKind::Resample;
        warp.name = "warp";
        warp.channels = 5 * targets; // 4 packed channels + validity mask
        warp.h = ph;
        warp.w = pw;
        graph.push_back(warp);
    }
    elementwise("densify_flow", 2 * targets, ph, pw, 4.0);
    // Median of 9 plus the variance model per packed channel.
    elementwise("merge_weights", 4, ph, pw, 40.0);
    // Weighted accumulate over n frames plus the final divide.
    elementwise("merge", 4, ph, pw, 2.0 * n + 1.0);
    elementwise("demosaic", 3, dims.height, dims.width, 4.0);
    elementwise("tone_map", 3, dims.height, dims.width, 10.0);
    elementwise("quantize", 3, dims.height, dims.width, 2.0);
    return graph;
}

namespace {

using nlohmann::json;

int64_t get_i64(const json& j, const char* key, int64_t fallback) {
    if (!j.contains(key))
        return fallback;
    return j.at(key).get<int64_t>();
}

} // namespace

std::vector<OpNode> load_graph_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail_io("cannot open graph config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_io("malformed graph JSON in " + path + ": " + e.what());
    }
    if (!j.contains("nodes") || !j.at("nodes").is_array())
        fail_validation("graph config must contain a 'nodes' array");
    std::vector<OpNode> graph;
    for (const auto& nj : j.at("nodes")) {
        OpNode node;
        node.kind = op_kind_from_name(nj.at("kind").get<std::string>());
        node.name = nj.value("name", std::string());
        node.cin = get_i64(nj, "cin", 0);
        node.cout = get_i64(nj, "cout", 0);
        node.kernel = get_i64(nj, "kernel", 1);
        node.channels = get_i64(nj, "channels", 1);
        node.h = get_i64(nj, "h", 0);
        node.w = get_i64(nj, "w", 0);
        node.radius = get_i64(nj, "radius", 0);
        node.block = get_i64(nj, "block", 0);
        node.tiles = get_i64(nj, "tiles", 0);
        node.iters = get_i64(nj, "iters", 1);
        node.flops_per_element = nj.value("flops_per_element", 1.0);
        node.bias = nj.value("bias", true);
        node.param_count = get_i64(nj, "param_count", -1);
        graph.push_back(std::move(node));
    }
    return graph;
}

std::string report_to_json(const BudgetReport& report, const BudgetCheck& check) {
    nlohmann::ordered_json j;
    j["total_params"] = report.total_params;
    j["total_flops"] = report.total_flops;
    j["limits"] = {{"params", report.limits.params}, {"flops", report.limits.flops}};
    j["pass"] = check.pass;
    j["param_margin_pct"] = check.param_margin_pct;
    j["flop_margin_pct"] = check.flop_margin_pct;
    j["violations"] = check.violations;
    auto& nodes = j["breakdown"];
    nodes = nlohmann::ordered_json::array();
    for (const auto& n : report.breakdown)
        nodes.push_back({{"name", n.name}, {"kind", n.kind}, {"params", n.params}, {"flops", n.flops}});
    return j.dump(2);
}

std::string report_to_table(const BudgetReport& report, const BudgetCheck& check) {
    std::ostringstream os;
    char line[160];
    os << "node                          kind         params           flops\n";
    os << "-----------------------------------------------------------------\n";
    for (const auto& n : report.breakdown) {
        std::snprintf(line, sizeof(line), "%-28s  %-10s  %10.0f  %14.0f\n", n.name.c_str(),
                      n.kind.c_str(), n.params, n.flops);
        os << line;
    }
    os << "-----------------------------------------------------------------\n";
    std::snprintf(line, sizeof(line), "total params: %.3fM (limit %.0fM, margin %.1f%%)\n",
                  report.total_params / 1e6, report.limits.params / 1e6, check.param_margin_pct);
    os << line;
    std::snprintf(line, sizeof(line), "total FLOPs:  %.3fT (limit %.0fT, margin %.1f%%)\n",
                  report.total_flops / 1e12, report.limits.flops / 1e12, check.flop_margin_pct);
    os << line;
    os << (check.pass ? "PASS" : "FAIL") << "\n";
    for (const auto& v : check.violations)
        os << "  " << v << "\n";
    return os.str();
}

} // namespace burst::budget
