#include "nids/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/rng.hpp"

namespace nids {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd normalized_matrix(std::span<const AggregatedSample> samples,
                                  const Normalizer& normalizer) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()),
                      static_cast<Eigen::Index>(kFeatureCount));
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto norm = normalizer.apply(samples[i].features);
        for (size_t f = 0; f < kFeatureCount; ++f) {
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = norm[f];
        }
    }
    return X;
}

std::vector<ClassLabel> labels_of(std::span<const AggregatedSample> samples) {
    std::vector<ClassLabel> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) labels.push_back(s.label);
    return labels;
}

nlohmann::json eval_report_json(const EvalReport& r) {
    nlohmann::json j;
    j["auc"] = r.auc;
    j["recall1"] = r.recall1;
    j["f1"] = r.f1;
    j["tp"] = r.counts.tp;
    j["fp"] = r.counts.fp;
    j["tn"] = r.counts.tn;
    j["fn"] = r.counts.fn;
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [label, recall] : r.per_class_recall) {
        per_class[std::string(to_string(label))] = recall;
    }
    j["per_class_recall"] = per_class;
    nlohmann::json roc = nlohmann::json::array();
    for (const RocPoint& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
    j["roc"] = roc;
    return j;
}

nlohmann::json threshold_json(const AnomalyThreshold& t) {
    return {{"tau", t.tau}, {"loss_mean", t.loss_mean}, {"loss_std", t.loss_std}, {"k", t.k}};
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

TrainedStack train_stack(std::span<const AggregatedSample> train, const FeatureSchema& schema,
                         uint64_t seed, const ExperimentConfig& config,
                         const std::set<ClassLabel>& omitted) {
    if (train.empty()) throw DataError("train_stack: empty training set");
    const std::string fp = schema.fingerprint();

    TrainedStack stack;
    stack.normalizer = Normalizer::fit(train);

    auto balanced = balance_binary(train, omitted, derive_seed(seed, "balance"),
                                   config.per_class_target);
    ForestConfig fc = config.forest;
    fc.seed = derive_seed(seed, "forest");
    stack.forest =
        train_forest_on_samples(balanced, stack.normalizer, fc, ForestMode::binary, fp);

    std::vector<AggregatedSample> background;
    for (const auto& s : train) {
        if (s.label == ClassLabel::background) background.push_back(s);
    }
    if (background.empty()) {
        throw DataError("train_stack: training set has no background samples");
    }
    Eigen::MatrixXd bgX = normalized_matrix(background, stack.normalizer);

    TrainConfig vc = config.vae;
    vc.seed = derive_seed(seed, "vae");
    stack.vae = init_params(config.vae_arch, vc.seed);
    stack.history = train_vae(stack.vae, bgX, vc);

    stack.train_losses.reserve(background.size());
    for (Eigen::Index i = 0; i < bgX.rows(); ++i) {
        std::vector<double> row(bgX.row(i).begin(), bgX.row(i).end());
        stack.train_losses.push_back(reconstruction_error(stack.vae, row));
    }
    stack.threshold = select_threshold(stack.train_losses, config.threshold_k);

    stack.vae.normalizer = stack.normalizer;
    stack.vae.schema_fingerprint = fp;
    stack.vae.threshold = stack.threshold;
    return stack;
}

FilterComparisonReport run_filter_comparison(std::span<const AggregatedSample> train,
                                             std::span<const AggregatedSample> test,
                                             const FeatureSchema& schema, uint64_t seed,
                                             const ExperimentConfig& config) {
    if (train.empty() || test.empty()) {
        throw DataError("run_filter_comparison: empty train or test set");
    }
    const std::string fp = schema.fingerprint();
    Normalizer normalizer = Normalizer::fit(train);

    auto bal_bin = balance_binary(train, {}, derive_seed(seed, "balance-binary"),
                                  config.per_class_target);
    ForestConfig fc_bin = config.forest;
    fc_bin.seed = derive_seed(seed, "forest-binary");
    ForestModel forest_bin =
        train_forest_on_samples(bal_bin, normalizer, fc_bin, ForestMode::binary, fp);

    auto bal_mc = balance_multiclass(train, derive_seed(seed, "balance-multiclass"),
                                     config.per_class_target);
    ForestConfig fc_mc = config.forest;
    fc_mc.seed = derive_seed(seed, "forest-multiclass");
    ForestModel forest_mc =
        train_forest_on_samples(bal_mc, normalizer, fc_mc, ForestMode::multiclass, fp);

    std::vector<int> preds_bin, preds_mc;
    preds_bin.reserve(test.size());
    preds_mc.reserve(test.size());
    for (const auto& s : test) {
        const auto norm = normalizer.apply(s.features);
        preds_bin.push_back(forest_bin.predict_binary(norm));
        preds_mc.push_back(forest_mc.predict_binary(norm));
    }
    const auto truth = labels_of(test);

    FilterComparisonReport report;
    report.binary = evaluate_verdicts(preds_bin, truth);
    report.multiclass = evaluate_verdicts(preds_mc, truth);
    return report;
}

HybridComparisonReport run_hybrid_comparison(std::span<const AggregatedSample> train,
                                             std::span<const AggregatedSample> test,
                                             const FeatureSchema& schema, uint64_t seed,
                                             const ExperimentConfig& config) {
    if (train.empty() || test.empty()) {
        throw DataError("run_hybrid_comparison: empty train or test set");
    }
    TrainedStack stack = train_stack(train, schema, seed, config);

    HybridComparisonReport report;
    report.threshold = stack.threshold;
    report.training_history = stack.history;
    report.test_labels = labels_of(test);

    std::vector<int> preds_vae, preds_hybrid;
    preds_vae.reserve(test.size());
    preds_hybrid.reserve(test.size());
    for (const auto& s : test) {
        const auto norm = stack.normalizer.apply(s.features);
        const double score = reconstruction_error(stack.vae, norm);
        const int filter = stack.forest.predict_binary(norm);
        report.scores_vae.push_back(score);
        report.scores_hybrid.push_back(filter == 1 ? 1.0 : score);
        preds_vae.push_back(score > stack.threshold.tau ? 1 : 0);
        preds_hybrid.push_back(filter == 1 || score > stack.threshold.tau ? 1 : 0);
    }

    report.vae_only = evaluate_verdicts(preds_vae, report.test_labels);
    report.hybrid = evaluate_verdicts(preds_hybrid, report.test_labels);

    std::map<ClassLabel, std::pair<double, size_t>> score_acc;
    for (size_t i = 0; i < test.size(); ++i) {
        auto& [sum, count] = score_acc[test[i].label];
        sum += report.scores_vae[i];
        ++count;
    }
    for (const auto& [label, acc] : score_acc) {
        report.mean_score_per_class[label] = acc.first / static_cast<double>(acc.second);
    }

    std::vector<int> truth01(test.size());
    for (size_t i = 0; i < test.size(); ++i) truth01[i] = is_attack(test[i].label) ? 1 : 0;
    auto [auc_v, roc_v] = roc_auc(report.scores_vae, truth01);
    auto [auc_h, roc_h] = roc_auc(report.scores_hybrid, truth01);
    report.score_auc_vae_only = auc_v;
    report.score_auc_hybrid = auc_h;
    report.score_roc_vae_only = std::move(roc_v);
    report.score_roc_hybrid = std::move(roc_h);
    return report;
}

NoveltyReport run_novelty(std::span<const AggregatedSample> train,
                          std::span<const AggregatedSample> test, const NoveltySpec& spec,
                          const FeatureSchema& schema, uint64_t seed,
                          const ExperimentConfig& config) {
    if (spec.omitted.empty()) {
        throw DataError("run_novelty: no omitted classes given");
    }
    for (ClassLabel l : spec.omitted) {
        if (!is_attack(l)) throw DataError("run_novelty: cannot omit background");
        const bool in_test = std::any_of(test.begin(), test.end(),
                                         [&](const auto& s) { return s.label == l; });
        if (!in_test) {
            throw DataError("run_novelty: omitted class '" + std::string(to_string(l)) +
                            "' absent from the test set");
        }
    }

    TrainedStack stack = train_stack(train, schema, seed, config, spec.omitted);

    std::vector<int> preds_filter, preds_hybrid;
    preds_filter.reserve(test.size());
    preds_hybrid.reserve(test.size());
    for (const auto& s : test) {
        const auto norm = stack.normalizer.apply(s.features);
        const int filter = stack.forest.predict_binary(norm);
        const double score = reconstruction_error(stack.vae, norm);
        preds_filter.push_back(filter);
        preds_hybrid.push_back(filter == 1 || score > stack.threshold.tau ? 1 : 0);
    }
    const auto truth = labels_of(test);

    NoveltyReport report;
    report.omitted = spec.omitted;
    report.threshold = stack.threshold;
    report.classifier_only.full = evaluate_verdicts(preds_filter, truth);
    report.hybrid.full = evaluate_verdicts(preds_hybrid, truth);
    for (ClassLabel l : spec.omitted) {
        auto it = report.classifier_only.full.per_class_recall.find(l);
        report.classifier_only.omitted_recall[l] =
            it == report.classifier_only.full.per_class_recall.end() ? 0.0 : it->second;
        it = report.hybrid.full.per_class_recall.find(l);
        report.hybrid.omitted_recall[l] =
            it == report.hybrid.full.per_class_recall.end() ? 0.0 : it->second;
    }

    if (spec.restricted_eval) {
        std::vector<int> rf, rh;
        std::vector<ClassLabel> rt;
        for (size_t i = 0; i < test.size(); ++i) {
            const ClassLabel l = test[i].label;
            if (l == ClassLabel::background || spec.omitted.contains(l)) {
                rf.push_back(preds_filter[i]);
                rh.push_back(preds_hybrid[i]);
                rt.push_back(l);
            }
        }
        report.classifier_only.restricted = evaluate_verdicts(rf, rt);
        report.hybrid.restricted = evaluate_verdicts(rh, rt);
    }
    return report;
}

BenchReport bench_throughput(const std::string& flow_path, const PipelineConfig& config,
                             int repetitions) {
    if (repetitions < 1) throw DataError("bench_throughput: repetitions must be >= 1");
    config.validate();

    BenchReport report;
    report.repetitions = repetitions;

    for (int rep = 0; rep < repetitions; ++rep) {
        auto t0 = Clock::now();
        ExtractResult extracted = extract_file(flow_path, config.schema);
        const double extract_s = seconds_since(t0);

        uint64_t flows = 0;
        for (const auto& [label, counts] : extracted.visibility.per_class) {
            flows += counts.total_flows;
        }
        report.flows = flows;
        report.samples = extracted.samples.size();
        if (extracted.samples.empty()) {
            throw DataError("bench_throughput: no samples extracted from '" + flow_path + "'");
        }

        t0 = Clock::now();
        std::vector<std::vector<double>> normalized;
        normalized.reserve(extracted.samples.size());
        for (const auto& s : extracted.samples) {
            normalized.push_back(config.normalizer.apply(s.features));
        }
        const double normalize_s = seconds_since(t0);

        t0 = Clock::now();
        uint64_t filter_hits = 0;
        for (const auto& n : normalized) {
            filter_hits += static_cast<uint64_t>(config.forest.predict_binary(n));
        }
        const double forest_s = seconds_since(t0);

        t0 = Clock::now();
        double score_acc = 0.0;
        for (const auto& n : normalized) {
            score_acc += reconstruction_error(config.vae, n);
        }
        const double vae_s = seconds_since(t0);
        (void)filter_hits;
        (void)score_acc;

        t0 = Clock::now();
        auto results = run_pipeline(flow_path, config, true);
        const double end_to_end_s = seconds_since(t0);
        if (results.empty()) {
            throw DataError("bench_throughput: pipeline produced no results");
        }

        const double n_samples = static_cast<double>(extracted.samples.size());
        const double n_flows = static_cast<double>(flows);
        auto rate = [](double count, double secs) {
            return secs > 0.0 ? count / secs : std::numeric_limits<double>::infinity();
        };
        report.extract_flows_per_s.runs.push_back(rate(n_flows, extract_s));
        report.normalize_samples_per_s.runs.push_back(rate(n_samples, normalize_s));
        report.forest_samples_per_s.runs.push_back(rate(n_samples, forest_s));
        report.vae_samples_per_s.runs.push_back(rate(n_samples, vae_s));
        report.end_to_end_flows_per_s.runs.push_back(rate(n_flows, end_to_end_s));
    }

    report.extract_flows_per_s.median = median_of(report.extract_flows_per_s.runs);
    report.normalize_samples_per_s.median = median_of(report.normalize_samples_per_s.runs);
    report.forest_samples_per_s.median = median_of(report.forest_samples_per_s.runs);
    report.vae_samples_per_s.median = median_of(report.vae_samples_per_s.runs);
    report.end_to_end_flows_per_s.median = median_of(report.end_to_end_flows_per_s.runs);
    return report;
}

std::string filter_report_to_json(const FilterComparisonReport& report, uint64_t seed,
                                  const std::string& schema_fingerprint) {
    nlohmann::json j;
    j["format"] = "eval-report/1";
    j["experiment"] = "filter";
    j["seed"] = seed;
    j["schema_fingerprint"] = schema_fingerprint;
    j["arms"] = {{"binary", eval_report_json(report.binary)},
                 {"multiclass", eval_report_json(report.multiclass)}};
    j["deltas"] = {
        {"auc", report.binary.auc - report.multiclass.auc},
        {"recall1", report.binary.recall1 - report.multiclass.recall1},
        {"tp", static_cast<int64_t>(report.binary.counts.tp) -
                   static_cast<int64_t>(report.multiclass.counts.tp)},
        {"fp", static_cast<int64_t>(report.binary.counts.fp) -
                   static_cast<int64_t>(report.multiclass.counts.fp)},
    };
    return j.dump(2);
}

std::string hybrid_report_to_json(const HybridComparisonReport& report, uint64_t seed,
                                  const std::string& schema_fingerprint) {
    nlohmann::json j;
    j["format"] = "eval-report/1";
    j["experiment"] = "hybrid";
    j["seed"] = seed;
    j["schema_fingerprint"] = schema_fingerprint;
    j["threshold"] = threshold_json(report.threshold);
    j["arms"] = {{"vae_only", eval_report_json(report.vae_only)},
                 {"hybrid", eval_report_json(report.hybrid)}};
    j["score_level"] = {{"auc_vae_only", report.score_auc_vae_only},
                        {"auc_hybrid", report.score_auc_hybrid}};
    nlohmann::json mean_scores = nlohmann::json::object();
    for (const auto& [label, mean] : report.mean_score_per_class) {
        mean_scores[std::string(to_string(label))] = mean;
    }
    j["mean_score_per_class"] = mean_scores;
    j["deltas"] = {
        {"auc", report.hybrid.auc - report.vae_only.auc},
        {"recall1", report.hybrid.recall1 - report.vae_only.recall1},
        {"tp", static_cast<int64_t>(report.hybrid.counts.tp) -
                   static_cast<int64_t>(report.vae_only.counts.tp)},
        {"fp", static_cast<int64_t>(report.hybrid.counts.fp) -
                   static_cast<int64_t>(report.vae_only.counts.fp)},
    };
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochStats& e : report.training_history) {
        epochs.push_back({{"total", e.total}, {"recon", e.recon}, {"kl", e.kl}});
    }
    j["training_epochs"] = epochs;
    return j.dump(2);
}

std::string novelty_report_to_json(const NoveltyReport& report, uint64_t seed,
                                   const std::string& schema_fingerprint) {
    nlohmann::json j;
    j["format"] = "novelty-report/1";
    j["seed"] = seed;
    j["schema_fingerprint"] = schema_fingerprint;
    nlohmann::json omitted = nlohmann::json::array();
    for (ClassLabel l : report.omitted) omitted.push_back(std::string(to_string(l)));
    j["omitted"] = omitted;
    j["threshold"] = threshold_json(report.threshold);
    auto arm_json = [](const NoveltyArm& arm) {
        nlohmann::json a;
        a["full"] = eval_report_json(arm.full);
        if (arm.restricted) a["restricted"] = eval_report_json(*arm.restricted);
        nlohmann::json rec = nlohmann::json::object();
        for (const auto& [label, r] : arm.omitted_recall) {
            rec[std::string(to_string(label))] = r;
        }
        a["omitted_recall"] = rec;
        return a;
    };
    j["arms"] = {{"classifier_only", arm_json(report.classifier_only)},
                 {"hybrid", arm_json(report.hybrid)}};
    return j.dump(2);
}

namespace {

std::string table_row(const std::string& name, const EvalReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-16s %8.4f %10.4f %8.4f %8llu %8llu\n", name.c_str(),
                  r.auc, r.recall1, r.f1, static_cast<unsigned long long>(r.counts.tp),
                  static_cast<unsigned long long>(r.counts.fp));
    return buf;
}

std::string table_header() {
    return "  arm                  AUC  recall(1)       F1       TP       FP\n";
}

std::string delta_row(const EvalReport& a, const EvalReport& b) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-16s %+8.4f %+10.4f %+8.4f %+8lld %+8lld\n", "delta",
                  a.auc - b.auc, a.recall1 - b.recall1, a.f1 - b.f1,
                  static_cast<long long>(a.counts.tp) - static_cast<long long>(b.counts.tp),
                  static_cast<long long>(a.counts.fp) - static_cast<long long>(b.counts.fp));
    return buf;
}

}  // namespace

std::string filter_report_table(const FilterComparisonReport& report) {
    std::string out = "filter comparison (verdict-level)\n";
    out += table_header();
    out += table_row("binary", report.binary);
    out += table_row("multiclass", report.multiclass);
    out += delta_row(report.binary, report.multiclass);
    return out;
}

std::string hybrid_report_table(const HybridComparisonReport& report) {
    char line[160];
    std::string out = "hybrid comparison (verdict-level, shared tau)\n";
    out += table_header();
    out += table_row("vae_only", report.vae_only);
    out += table_row("hybrid", report.hybrid);
    out += delta_row(report.hybrid, report.vae_only);
    std::snprintf(line, sizeof(line),
                  "  tau %.6f (mean %.6f + %.2f * std %.6f); score-level AUC %.4f -> %.4f\n",
                  report.threshold.tau, report.threshold.loss_mean, report.threshold.k,
                  report.threshold.loss_std, report.score_auc_vae_only,
                  report.score_auc_hybrid);
    out += line;
    return out;
}

std::string novelty_report_table(const NoveltyReport& report) {
    std::string out = "novelty test (omitted:";
    for (ClassLabel l : report.omitted) {
        out += ' ';
        out += to_string(l);
    }
    out += ")\n";
    out += table_header();
    out += table_row("classifier_only", report.classifier_only.full);
    out += table_row("hybrid", report.hybrid.full);
    if (report.classifier_only.restricted) {
        out += "  restricted to background + omitted classes:\n";
        out += table_row("classifier_only", *report.classifier_only.restricted);
        out += table_row("hybrid", *report.hybrid.restricted);
    }
    for (ClassLabel l : report.omitted) {
        char line[160];
        std::snprintf(line, sizeof(line),
                      "  recall on omitted %-14s filter %.4f | hybrid %.4f\n",
                      std::string(to_string(l)).c_str(),
                      report.classifier_only.omitted_recall.at(l),
                      report.hybrid.omitted_recall.at(l));
        out += line;
    }
    return out;
}

std::string bench_report_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["format"] = "bench-report/1";
    j["flows"] = report.flows;
    j["samples"] = report.samples;
    j["repetitions"] = report.repetitions;
    auto stage_json = [](const StageRates& s) {
        return nlohmann::json{{"runs", s.runs}, {"median", s.median}};
    };
    j["stages"] = {
        {"extract_flows_per_s", stage_json(report.extract_flows_per_s)},
        {"normalize_samples_per_s", stage_json(report.normalize_samples_per_s)},
        {"forest_samples_per_s", stage_json(report.forest_samples_per_s)},
        {"vae_samples_per_s", stage_json(report.vae_samples_per_s)},
        {"end_to_end_flows_per_s", stage_json(report.end_to_end_flows_per_s)},
    };
    j["reference"] = {
        {"end_to_end_flows_per_s", report.reference.end_to_end_flows_per_s},
        {"extract_flows_per_s", report.reference.extract_flows_per_s},
        {"normalize_samples_per_s", report.reference.normalize_samples_per_s},
        {"forest_samples_per_s", report.reference.forest_samples_per_s},
        {"vae_samples_per_s", report.reference.vae_samples_per_s},
        {"network_demand_flows_per_s", report.reference.network_demand_flows_per_s},
    };
    return j.dump(2);
}

}  // namespace nids
