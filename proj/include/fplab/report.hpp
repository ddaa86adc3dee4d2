#pragma once

#include <string>
#include <vector>

#include "fplab/attack.hpp"
#include "fplab/data.hpp"

namespace fplab {

// Inputs behind the four reference curves: exact logits, the label driving
// each scenario, and the slug used for the output file name.
struct CurveCase {
    std::string slug;
    std::vector<double> logits;
    int label;
    AttackMode mode;
};

const std::vector<CurveCase>& reference_curve_cases();

// Builds the scenario curve over the grid with per-profile optimal-scale
// markers (marker value = t*, written on the nearest grid row; 16-, then
// 32-, then 64-bit order, later profiles win collisions).
CurveTable build_curve_table(const RankedLogits& ranked, const AttackScenario& scenario,
                             const std::vector<double>& grid);

// Writes the four reference curve CSVs into out_dir plus a config echo.
// Returns the CSV paths in scenario order.
std::vector<std::string> emit_reference_curves(const std::string& out_dir);

std::vector<double> linear_grid(double lo, double hi, int n);

struct CompareResult {
    double clean_accuracy = 0.0;
    std::vector<LossKind> losses;
    std::vector<double> robust;  // aligned with losses
    std::vector<RobustReport> reports;
    std::string table_text;
};

// Runs the attack once per surrogate loss with identical seed and samples and
// tabulates robust accuracy with deltas against the cross-entropy baseline.
CompareResult compare_losses(const Mlp& model, const std::vector<Tensor>& images,
                             const std::vector<int>& labels, AttackConfig config);

std::string attack_report_json(const RobustReport& report);

}  // namespace fplab
