#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nids/features.hpp"
#include "nids/forest.hpp"
#include "nids/metrics.hpp"
#include "nids/pipeline.hpp"
#include "nids/vae.hpp"

namespace nids {

// Knobs shared by the experiment protocols. Seeds inside are ignored; each
// protocol derives its own sub-streams from the experiment seed.
struct ExperimentConfig {
    ForestConfig forest;
    TrainConfig vae;
    VaeArchitecture vae_arch;
    double threshold_k = 1.0;
    int per_class_target = 1000;
};

// Binary vs binarized multi-class prefilter on the identical test set.
struct FilterComparisonReport {
    EvalReport binary;
    EvalReport multiclass;
};

FilterComparisonReport run_filter_comparison(std::span<const AggregatedSample> train,
                                             std::span<const AggregatedSample> test,
                                             const FeatureSchema& schema, uint64_t seed,
                                             const ExperimentConfig& config = {});

// VAE-only vs hybrid verdicts under the same trained model and threshold.
struct HybridComparisonReport {
    EvalReport vae_only;  // verdict-level
    EvalReport hybrid;
    double score_auc_vae_only = 0.0;  // raw-score AUC, no thresholding
    double score_auc_hybrid = 0.0;
    std::vector<RocPoint> score_roc_vae_only;
    std::vector<RocPoint> score_roc_hybrid;
    AnomalyThreshold threshold;
    std::vector<EpochStats> training_history;
    std::map<ClassLabel, double> mean_score_per_class;  // raw VAE scores
    // per test sample, in extraction order
    std::vector<double> scores_vae;
    std::vector<double> scores_hybrid;
    std::vector<ClassLabel> test_labels;
};

HybridComparisonReport run_hybrid_comparison(std::span<const AggregatedSample> train,
                                             std::span<const AggregatedSample> test,
                                             const FeatureSchema& schema, uint64_t seed,
                                             const ExperimentConfig& config = {});

struct NoveltySpec {
    std::set<ClassLabel> omitted;
    bool restricted_eval = false;  // also evaluate on background + omitted only
};

struct NoveltyArm {
    EvalReport full;
    std::optional<EvalReport> restricted;
    std::map<ClassLabel, double> omitted_recall;  // detection rate per omitted class
};

struct NoveltyReport {
    std::set<ClassLabel> omitted;
    NoveltyArm classifier_only;
    NoveltyArm hybrid;
    AnomalyThreshold threshold;
};

NoveltyReport run_novelty(std::span<const AggregatedSample> train,
                          std::span<const AggregatedSample> test, const NoveltySpec& spec,
                          const FeatureSchema& schema, uint64_t seed,
                          const ExperimentConfig& config = {});

// Published reference rates carried into every benchmark report for context.
struct BenchReference {
    double end_to_end_flows_per_s = 17000.0;
    double extract_flows_per_s = 19000.0;
    double normalize_samples_per_s = 118000.0;
    double forest_samples_per_s = 150000.0;
    double vae_samples_per_s = 8000.0;
    double network_demand_flows_per_s = 1273.0;
};

struct StageRates {
    std::vector<double> runs;
    double median = 0.0;
};

struct BenchReport {
    uint64_t flows = 0;
    uint64_t samples = 0;
    int repetitions = 0;
    StageRates extract_flows_per_s;
    StageRates normalize_samples_per_s;
    StageRates forest_samples_per_s;
    StageRates vae_samples_per_s;
    StageRates end_to_end_flows_per_s;
    BenchReference reference;
};

BenchReport bench_throughput(const std::string& flow_path, const PipelineConfig& config,
                             int repetitions);

// JSON serialization for the report artifacts (versioned documents).
std::string filter_report_to_json(const FilterComparisonReport& report, uint64_t seed,
                                  const std::string& schema_fingerprint);
std::string hybrid_report_to_json(const HybridComparisonReport& report, uint64_t seed,
                                  const std::string& schema_fingerprint);
std::string novelty_report_to_json(const NoveltyReport& report, uint64_t seed,
                                   const std::string& schema_fingerprint);
std::string bench_report_to_json(const BenchReport& report);

// Human-readable companions to the JSON artifacts.
std::string filter_report_table(const FilterComparisonReport& report);
std::string hybrid_report_table(const HybridComparisonReport& report);
std::string novelty_report_table(const NoveltyReport& report);

// Shared plumbing for training one hybrid stack on extracted samples.
struct TrainedStack {
    Normalizer normalizer;
    ForestModel forest;
    VaeModel vae;
    AnomalyThreshold threshold;
    std::vector<EpochStats> history;
    std::vector<double> train_losses;  // deterministic recon errors, train background
};

TrainedStack train_stack(std::span<const AggregatedSample> train, const FeatureSchema& schema,
                         uint64_t seed, const ExperimentConfig& config,
                         const std::set<ClassLabel>& omitted = {});

}  // namespace nids
