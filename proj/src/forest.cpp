#include "nids/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/rng.hpp"

namespace nids {

namespace {

constexpr const char* kForestFormat = "forest-model/1";

// weighted Gini impurity of one side, times side size: sum_k c_k - sum_k c_k^2/n
double gini_weighted(const std::vector<uint64_t>& counts, uint64_t n) {
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (uint64_t c : counts) {
        sq += static_cast<double>(c) * static_cast<double>(c);
    }
    return static_cast<double>(n) - sq / static_cast<double>(n);
}

struct TreeBuilder {
    std::span<const double> X;
    size_t n_features;
    std::span<const int> y;
    size_t n_classes;
    const ForestConfig& config;
    Rng rng;
    DecisionTree tree;

    std::vector<size_t> feature_pool;

    TreeBuilder(std::span<const double> X_, size_t n_features_, std::span<const int> y_,
                size_t n_classes_, const ForestConfig& config_, uint64_t seed)
        : X(X_), n_features(n_features_), y(y_), n_classes(n_classes_), config(config_),
          rng(seed) {
        feature_pool.resize(n_features);
        std::iota(feature_pool.begin(), feature_pool.end(), size_t{0});
    }

    double value(size_t row, size_t feature) const { return X[row * n_features + feature]; }

    int make_leaf(const std::vector<uint64_t>& counts) {
        TreeNode node;
        node.counts.assign(counts.begin(), counts.end());
        tree.nodes.push_back(std::move(node));
        return static_cast<int>(tree.nodes.size() - 1);
    }

    // rows is mutated in place (sorted/partitioned); returns node index
    int build(std::span<size_t> rows) {
        std::vector<uint64_t> counts(n_classes, 0);
        for (size_t r : rows) counts[static_cast<size_t>(y[r])] += 1;
        const uint64_t n = rows.size();

        size_t present = 0;
        for (uint64_t c : counts) present += c > 0;
        if (present <= 1 || n < static_cast<uint64_t>(config.min_samples_split)) {
            return make_leaf(counts);
        }

        // candidate features: max_features distinct draws
        const size_t k = std::min<size_t>(static_cast<size_t>(config.max_features), n_features);
        for (size_t i = 0; i < k; ++i) {
            std::swap(feature_pool[i], feature_pool[i + rng.below(n_features - i)]);
        }

        const double parent_impurity = gini_weighted(counts, n);
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<size_t> sorted(rows.begin(), rows.end());
        std::vector<uint64_t> left_counts(n_classes);
        for (size_t ci = 0; ci < k; ++ci) {
            const size_t f = feature_pool[ci];
            std::sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
                const double va = value(a, f), vb = value(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });
            std::fill(left_counts.begin(), left_counts.end(), 0);
            uint64_t n_left = 0;
            for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_counts[static_cast<size_t>(y[sorted[i]])] += 1;
                ++n_left;
                const double v = value(sorted[i], f);
                const double v_next = value(sorted[i + 1], f);
                if (v == v_next) continue;
                std::vector<uint64_t> right_counts(n_classes);
                for (size_t c = 0; c < n_classes; ++c) {
                    right_counts[c] = counts[c] - left_counts[c];
                }
                const double child = gini_weighted(left_counts, n_left) +
                                     gini_weighted(right_counts, n - n_left);
                const double gain = parent_impurity - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = v + (v_next - v) / 2.0;
                }
            }
        }

        if (best_feature < 0) {
            return make_leaf(counts);  // all candidate features constant
        }

        auto mid = std::partition(rows.begin(), rows.end(), [&](size_t r) {
            return value(r, static_cast<size_t>(best_feature)) <= best_threshold;
        });
        const size_t n_left = static_cast<size_t>(mid - rows.begin());
        if (n_left == 0 || n_left == rows.size()) {
            return make_leaf(counts);  // numeric degeneracy guard
        }

        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_index].feature = best_feature;
        tree.nodes[node_index].threshold = best_threshold;
        const int left = build(rows.subspan(0, n_left));
        const int right = build(rows.subspan(n_left));
        tree.nodes[node_index].left = left;
        tree.nodes[node_index].right = right;
        return node_index;
    }

    DecisionTree run() {
        const size_t n = y.size();
        std::vector<size_t> rows;
        rows.reserve(n);
        if (config.bootstrap) {
            for (size_t i = 0; i < n; ++i) rows.push_back(rng.below(n));
        } else {
            for (size_t i = 0; i < n; ++i) rows.push_back(i);
        }
        build(rows);
        return std::move(tree);
    }
};

std::vector<AggregatedSample> resample_class(std::span<const AggregatedSample> samples,
                                             std::span<const size_t> class_rows, size_t target,
                                             Rng& rng) {
    std::vector<AggregatedSample> out;
    out.reserve(target);
    if (class_rows.size() >= target) {
        auto picks = rng.sample_indices(class_rows.size(), target);
        for (size_t p : picks) out.push_back(samples[class_rows[p]]);
    } else {
        for (size_t i = 0; i < target; ++i) {
            out.push_back(samples[class_rows[rng.below(class_rows.size())]]);
        }
    }
    return out;
}

std::array<std::vector<size_t>, kClassCount> rows_by_class(
    std::span<const AggregatedSample> samples) {
    std::array<std::vector<size_t>, kClassCount> rows;
    for (size_t i = 0; i < samples.size(); ++i) {
        rows[static_cast<size_t>(samples[i].label)].push_back(i);
    }
    return rows;
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> features) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf()) {
        if (features[static_cast<size_t>(node->feature)] <= node->threshold) {
            node = &nodes[static_cast<size_t>(node->left)];
        } else {
            node = &nodes[static_cast<size_t>(node->right)];
        }
    }
    return *node;
}

int DecisionTree::predict(std::span<const double> features) const {
    const TreeNode& leaf = leaf_for(features);
    int best = 0;
    uint32_t best_count = 0;
    for (size_t c = 0; c < leaf.counts.size(); ++c) {
        if (leaf.counts[c] > best_count) {
            best_count = leaf.counts[c];
            best = static_cast<int>(c);
        }
    }
    return best;
}

int ForestModel::predict_index(std::span<const double> features) const {
    if (features.size() != kFeatureCount) {
        throw DataError("forest predict: expected " + std::to_string(kFeatureCount) +
                        " features, got " + std::to_string(features.size()));
    }
    std::vector<uint32_t> votes(class_names.size(), 0);
    for (const DecisionTree& tree : trees) {
        votes[static_cast<size_t>(tree.predict(features))] += 1;
    }
    int best = 0;
    uint32_t best_votes = 0;
    for (size_t c = 0; c < votes.size(); ++c) {
        if (votes[c] > best_votes) {
            best_votes = votes[c];
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::string ForestModel::predict_name(std::span<const double> features) const {
    return class_names[static_cast<size_t>(predict_index(features))];
}

int ForestModel::predict_binary(std::span<const double> features) const {
    const int idx = predict_index(features);
    if (mode == ForestMode::binary) {
        return idx;
    }
    auto label = class_label_from(class_names[static_cast<size_t>(idx)]);
    return label && is_attack(*label) ? 1 : 0;
}

std::vector<AggregatedSample> balance_binary(std::span<const AggregatedSample> samples,
                                             const std::set<ClassLabel>& omitted, uint64_t seed,
                                             int per_attack_target) {
    for (ClassLabel l : omitted) {
        if (!is_attack(l)) {
            throw DataError("balance_binary: cannot omit the background class");
        }
    }
    auto rows = rows_by_class(samples);
    if (rows[static_cast<size_t>(ClassLabel::background)].empty()) {
        throw DataError("balance_binary: background class absent from input");
    }

    std::vector<ClassLabel> included;
    for (ClassLabel l : all_class_labels()) {
        if (!is_attack(l) || omitted.contains(l)) continue;
        if (!rows[static_cast<size_t>(l)].empty()) included.push_back(l);
    }
    if (included.empty()) {
        throw DataError("balance_binary: no attack class left after omissions");
    }

    std::vector<AggregatedSample> out;
    const size_t target = static_cast<size_t>(per_attack_target);
    for (ClassLabel l : included) {
        Rng rng(derive_seed(seed, to_string(l)));
        auto part = resample_class(samples, rows[static_cast<size_t>(l)], target, rng);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    // background matches the attack total to keep the 1:1 ratio
    Rng rng(derive_seed(seed, "background"));
    auto part = resample_class(samples, rows[static_cast<size_t>(ClassLabel::background)],
                               target * included.size(), rng);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
    return out;
}

std::vector<AggregatedSample> balance_multiclass(std::span<const AggregatedSample> samples,
                                                 uint64_t seed, int per_class_target) {
    auto rows = rows_by_class(samples);
    std::vector<AggregatedSample> out;
    bool any = false;
    for (ClassLabel l : all_class_labels()) {
        if (rows[static_cast<size_t>(l)].empty()) continue;
        any = true;
        Rng rng(derive_seed(seed, to_string(l)));
        auto part = resample_class(samples, rows[static_cast<size_t>(l)],
                                   static_cast<size_t>(per_class_target), rng);
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    if (!any) throw DataError("balance_multiclass: empty input");
    return out;
}

ForestModel train_forest(std::span<const double> X, std::span<const int> y, size_t n_features,
                         std::vector<std::string> class_names, const ForestConfig& config,
                         ForestMode mode) {
    if (config.n_trees < 1) throw DataError("train_forest: n_trees must be >= 1");
    if (config.max_features < 1 || static_cast<size_t>(config.max_features) > n_features) {
        throw DataError("train_forest: max_features out of range");
    }
    const size_t n = y.size();
    if (n == 0 || X.size() != n * n_features) {
        throw DataError("train_forest: feature matrix / label size mismatch");
    }
    std::set<int> distinct(y.begin(), y.end());
    if (distinct.size() < 2) {
        throw DataError("train_forest: needs at least 2 distinct labels");
    }
    for (int label : distinct) {
        if (label < 0 || static_cast<size_t>(label) >= class_names.size()) {
            throw DataError("train_forest: label index out of range");
        }
    }

    ForestModel model;
    model.config = config;
    model.mode = mode;
    model.class_names = std::move(class_names);
    model.trees.resize(static_cast<size_t>(config.n_trees));

    const size_t n_classes = model.class_names.size();
    unsigned hw = std::thread::hardware_concurrency();
    size_t n_threads = config.threads > 0 ? static_cast<size_t>(config.threads)
                                          : std::max(1u, hw);
    n_threads = std::min(n_threads, model.trees.size());

    // per-tree seeds make the result independent of scheduling
    auto train_range = [&](size_t begin, size_t step) {
        for (size_t t = begin; t < model.trees.size(); t += step) {
            TreeBuilder builder(X, n_features, y, n_classes, config,
                                derive_seed(config.seed, "tree", t));
            model.trees[t] = builder.run();
        }
    };
    if (n_threads <= 1) {
        train_range(0, 1);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(n_threads);
        for (size_t w = 0; w < n_threads; ++w) {
            workers.emplace_back(train_range, w, n_threads);
        }
        for (auto& worker : workers) worker.join();
    }
    return model;
}

ForestModel train_forest_on_samples(std::span<const AggregatedSample> samples,
                                    const Normalizer& normalizer, const ForestConfig& config,
                                    ForestMode mode, const std::string& schema_fingerprint) {
    if (samples.empty()) throw DataError("train_forest_on_samples: empty training set");

    std::vector<std::string> class_names;
    std::vector<int> y;
    y.reserve(samples.size());
    if (mode == ForestMode::binary) {
        class_names = {"background", "attack"};
        for (const auto& s : samples) y.push_back(is_attack(s.label) ? 1 : 0);
    } else {
        std::array<bool, kClassCount> present{};
        for (const auto& s : samples) present[static_cast<size_t>(s.label)] = true;
        std::array<int, kClassCount> index;
        index.fill(-1);
        for (ClassLabel l : all_class_labels()) {
            if (present[static_cast<size_t>(l)]) {
                index[static_cast<size_t>(l)] = static_cast<int>(class_names.size());
                class_names.emplace_back(to_string(l));
            }
        }
        for (const auto& s : samples) y.push_back(index[static_cast<size_t>(s.label)]);
    }

    std::vector<double> X;
    X.reserve(samples.size() * kFeatureCount);
    for (const auto& s : samples) {
        auto norm = normalizer.apply(s.features);
        X.insert(X.end(), norm.begin(), norm.end());
    }

    ForestModel model =
        train_forest(X, y, kFeatureCount, std::move(class_names), config, mode);
    model.normalizer = normalizer;
    model.schema_fingerprint = schema_fingerprint;
    return model;
}

std::string ForestModel::to_json() const {
    nlohmann::json j;
    j["format"] = kForestFormat;
    j["mode"] = mode == ForestMode::binary ? "binary" : "multiclass";
    j["classes"] = class_names;
    j["config"] = {{"n_trees", config.n_trees},
                   {"max_features", config.max_features},
                   {"min_samples_split", config.min_samples_split},
                   {"bootstrap", config.bootstrap},
                   {"seed", config.seed}};
    j["schema_fingerprint"] = schema_fingerprint;
    j["normalizer"] = {{"mins", normalizer.mins()}, {"maxs", normalizer.maxs()}};
    nlohmann::json jtrees = nlohmann::json::array();
    for (const DecisionTree& tree : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : tree.nodes) {
            if (n.is_leaf()) {
                nodes.push_back({-1, 0.0, -1, -1, n.counts});
            } else {
                nodes.push_back({n.feature, n.threshold, n.left, n.right});
            }
        }
        jtrees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(jtrees);
    return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("forest model: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kForestFormat) {
            throw DataError("forest model: unsupported format '" +
                            j.at("format").get<std::string>() + "'");
        }
        ForestModel m;
        m.mode = j.at("mode").get<std::string>() == "binary" ? ForestMode::binary
                                                             : ForestMode::multiclass;
        m.class_names = j.at("classes").get<std::vector<std::string>>();
        const auto& c = j.at("config");
        m.config.n_trees = c.at("n_trees").get<int>();
        m.config.max_features = c.at("max_features").get<int>();
        m.config.min_samples_split = c.at("min_samples_split").get<int>();
        m.config.bootstrap = c.at("bootstrap").get<bool>();
        m.config.seed = c.at("seed").get<uint64_t>();
        m.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
        m.normalizer = Normalizer(j.at("normalizer").at("mins").get<std::vector<double>>(),
                                  j.at("normalizer").at("maxs").get<std::vector<double>>());
        for (const auto& jtree : j.at("trees")) {
            DecisionTree tree;
            for (const auto& jn : jtree) {
                TreeNode n;
                n.feature = jn.at(0).get<int>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<int>();
                n.right = jn.at(3).get<int>();
                if (n.is_leaf()) {
                    n.counts = jn.at(4).get<std::vector<uint32_t>>();
                }
                tree.nodes.push_back(std::move(n));
            }
            m.trees.push_back(std::move(tree));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("forest model: malformed document: ") + e.what());
    }
}

void ForestModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write forest model '" + path + "'");
    out << to_json() << "\n";
}

ForestModel ForestModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open forest model '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace nids
