#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nids/flow.hpp"

namespace nids {

struct ConfusionCounts {
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t tn = 0;
    uint64_t fn = 0;

    uint64_t total() const { return tp + fp + tn + fn; }
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct EvalReport {
    double auc = 0.0;      // verdict-level unless stated otherwise by the caller
    double recall1 = 0.0;  // recall for class 1 (attack)
    double f1 = 0.0;
    ConfusionCounts counts;
    std::vector<RocPoint> roc_points;
    // per true class: fraction of its samples judged correctly under the
    // binary verdict (attacks: predicted 1; background: predicted 0)
    std::map<ClassLabel, double> per_class_recall;
};

// Ranking AUC with ties counted one half, built by sorting scores and
// trapezoidal integration of the ROC curve. Equals brute-force pair counting.
// Both classes must be present.
std::pair<double, std::vector<RocPoint>> roc_auc(std::span<const double> scores,
                                                 std::span<const int> labels);

ConfusionCounts confusion_counts(std::span<const int> preds, std::span<const int> labels);

// Fills counts, recall1 and f1 from hard binary predictions.
EvalReport confusion_metrics(std::span<const int> preds, std::span<const int> labels);

// Full report for binary verdicts: verdict-level AUC, confusion metrics and a
// per-class breakdown from the multiclass truth.
EvalReport evaluate_verdicts(std::span<const int> preds,
                             std::span<const ClassLabel> true_labels);

// Gaussian kernel density estimate on a shared 512-point grid. Grid spans
// [min,max] of the included scores padded by three bandwidths so boundary
// kernels integrate inside the grid. Scores exactly equal to 1.0 are excluded
// before estimation. Bandwidth defaults to Silverman's rule per group.
struct DensityCurve {
    std::vector<double> x;
    std::vector<double> density;
};

std::map<std::string, DensityCurve> export_score_density(
    const std::map<std::string, std::vector<double>>& groups,
    std::optional<double> bandwidth = std::nullopt, size_t grid_points = 512);

void write_density_csv(const std::string& path,
                       const std::map<std::string, DensityCurve>& curves);
void write_roc_csv(const std::string& path, std::span<const RocPoint> points);

}  // namespace nids
