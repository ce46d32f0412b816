#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nids/features.hpp"
#include "nids/forest.hpp"
#include "nids/vae.hpp"

namespace nids {

// One scored (source IP, window) sample. If the filter flags the sample the
// hybrid score is pinned to 1.0; otherwise it is the reconstruction error.
struct DetectionResult {
    WindowKey key;
    int filter_verdict = 0;
    double anomaly_score = 0.0;
    double hybrid_score = 0.0;
    int final_verdict = 0;
    std::optional<ClassLabel> true_label;
};

struct PipelineConfig {
    ForestModel forest;
    VaeModel vae;
    Normalizer normalizer;
    double tau = 0.0;
    FeatureSchema schema;

    // throws DataError when artifact fingerprints or normalizers disagree
    void validate() const;
};

// normalized_features must already be scaled with the pipeline normalizer.
DetectionResult score_sample(const ForestModel& forest, const VaeModel& vae, double tau,
                             std::span<const double> normalized_features);

std::vector<DetectionResult> run_pipeline(const std::string& flow_path,
                                          const PipelineConfig& config,
                                          bool with_labels = true);

// Scores already-extracted samples (used by the experiment protocols).
std::vector<DetectionResult> score_samples(std::span<const AggregatedSample> samples,
                                           const PipelineConfig& config, bool with_labels);

void write_results_csv(const std::string& path, std::span<const DetectionResult> results,
                       bool with_labels);

}  // namespace nids
