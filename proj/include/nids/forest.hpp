#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nids/features.hpp"
#include "nids/flow.hpp"

namespace nids {

struct ForestConfig {
    int n_trees = 100;
    int max_features = 8;  // floor(sqrt(69))
    int min_samples_split = 2;
    bool bootstrap = true;
    uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

enum class ForestMode { binary, multiclass };

// CART node; leaves keep the class-count distribution of their training rows.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<uint32_t> counts;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    // index of the majority class at the reached leaf (ties: lowest index)
    int predict(std::span<const double> features) const;
    const TreeNode& leaf_for(std::span<const double> features) const;
};

class ForestModel {
public:
    ForestConfig config;
    ForestMode mode = ForestMode::binary;
    std::vector<std::string> class_names;  // binary: {"background","attack"}
    std::vector<DecisionTree> trees;
    std::string schema_fingerprint;
    Normalizer normalizer;

    int predict_index(std::span<const double> features) const;
    std::string predict_name(std::span<const double> features) const;
    int predict_binary(std::span<const double> features) const;

    std::string to_json() const;
    static ForestModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static ForestModel load(const std::string& path);
};

// Resamples every class in `targets` to its target count: undersampling
// without replacement when larger, oversampling with replacement when
// smaller. Deterministic under seed via per-class sub-streams.
std::vector<AggregatedSample> balance_binary(std::span<const AggregatedSample> samples,
                                             const std::set<ClassLabel>& omitted, uint64_t seed,
                                             int per_attack_target = 1000);
std::vector<AggregatedSample> balance_multiclass(std::span<const AggregatedSample> samples,
                                                 uint64_t seed, int per_class_target = 1000);

// X is row-major n x 69; y holds class indices into class_names.
ForestModel train_forest(std::span<const double> X, std::span<const int> y, size_t n_features,
                         std::vector<std::string> class_names, const ForestConfig& config,
                         ForestMode mode);

// Convenience wrapper: normalizes and encodes AggregatedSamples, then trains.
ForestModel train_forest_on_samples(std::span<const AggregatedSample> samples,
                                    const Normalizer& normalizer, const ForestConfig& config,
                                    ForestMode mode, const std::string& schema_fingerprint);

}  // namespace nids
