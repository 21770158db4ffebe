#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace burst::budget {

enum class OpKind { Conv2d, Pointwise, Resample, BlockMatch, LkIter, Elementwise, Reduce, Fft };

const char* op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& name);

// One node of the accounted operation graph. Fields are interpreted per
// kind; see the FLOP formula table in the README.
struct OpNode {
    OpKind kind = OpKind::Elementwise;
    std::string name;
    int64_t cin = 0, cout = 0;  // conv2d / pointwise
    int64_t kernel = 1;         // conv2d
    int64_t channels = 1;       // resample / elementwise / reduce / fft
    int64_t h = 0, w = 0;       // spatial dims (0: inherit input dims)
    int64_t radius = 0;         // blockmatch
    int64_t block = 0;          // blockmatch / lk_iter
    int64_t tiles = 0;          // blockmatch / lk_iter
    int64_t iters = 1;          // lk_iter
    double flops_per_element = 1.0; // elementwise / reduce
    bool bias = true;           // conv2d / pointwise params
    int64_t param_count = -1;   // -1: derive from shape
};

struct BudgetLimits {
    double params = 30e6;
    double flops = 4e12;
};

struct NodeCost {
    std::string name;
    std::string kind;
    double params = 0.0;
    double flops = 0.0;
};

struct BudgetReport {
    double total_params = 0.0;
    double total_flops = 0.0;
    std::vector<NodeCost> breakdown;
    BudgetLimits limits;
    bool pass = false; // both totals <= limits
};

// Analytic account of the graph; mac_flops selects the multiply-add
// convention (2 = one multiply + one add, the default; 1 = fused).
BudgetReport count_flops(const std::vector<OpNode>& graph, int64_t input_h, int64_t input_w,
                         int mac_flops = 2, const BudgetLimits& limits = {});

struct BudgetCheck {
    bool pass = false;
    double param_margin_pct = 0.0; // (limit - total) / limit * 100
    double flop_margin_pct = 0.0;
    std::vector<std::string> violations;
};

BudgetCheck check_budget(const BudgetReport& report);

struct PipelineDims {
    int64_t height = 768;
    int64_t width = 1536;
    int frames = 9;
    int levels = 3;
    int radius = 4;
    int block = 16;
    int lk_iters = 5;
};

// The classical restore pipeline declared as an operation graph; carries
// no learned parameters.
std::vector<OpNode> pipeline_graph(const PipelineDims& dims);

// Graph JSON: {"nodes":[{"kind":...,...}]}. Serialization for reports.
std::vector<OpNode> load_graph_json(const std::string& path);
std::string report_to_json(const BudgetReport& report, const BudgetCheck& check);
std::string report_to_table(const BudgetReport& report, const BudgetCheck& check);

} // namespace burst::budget
