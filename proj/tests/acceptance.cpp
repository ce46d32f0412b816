// Acceptance suite: runs every criterion end to end and prints one PASS/FAIL
// line each. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "nids/cli.hpp"
#include "nids/errors.hpp"
#include "nids/experiments.hpp"
#include "nids/features.hpp"
#include "nids/flow.hpp"
#include "nids/forest.hpp"
#include "nids/metrics.hpp"
#include "nids/pipeline.hpp"
#include "nids/rng.hpp"
#include "nids/synth.hpp"
#include "nids/vae.hpp"

using namespace nids;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_criterion = 0;
int g_failures = 0;

void report(const std::string& title, const std::function<Outcome()>& body) {
    ++g_criterion;
    const auto start = Clock::now();
    Outcome outcome;
    try {
        outcome = body();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("criterion %2d [%s] %s (%s; %.1f s)\n", g_criterion,
                outcome.pass ? "PASS" : "FAIL", title.c_str(), outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

class Workspace {
public:
    Workspace() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto candidate = base / ("acceptance-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                break;
            }
        }
    }
    ~Workspace() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

double auc_pair_counting(const std::vector<double>& scores, const std::vector<int>& labels) {
    double correct = 0.0;
    uint64_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                correct += 1.0;
            } else if (scores[i] == scores[j]) {
                correct += 0.5;
            }
        }
    }
    return correct / static_cast<double>(pairs);
}

// Shared state across criteria (the default corpus and its extractions).
struct SharedData {
    Workspace dir;
    GenConfig gen_config;
    FeatureSchema schema = FeatureSchema::defaults();
    std::vector<AggregatedSample> train;
    std::vector<AggregatedSample> test;

    SharedData() {
        gen_config.seed = 42;
        gen_config.train_path = dir.file("train_flows.csv");
        gen_config.test_path = dir.file("test_flows.csv");
        gen_config.manifest_path = dir.file("gen_manifest.json");
        generate(gen_config);
        train = extract_file(gen_config.train_path, schema).samples;
        test = extract_file(gen_config.test_path, schema).samples;
    }
};

}  // namespace

int main() {
    std::printf("acceptance suite: default synthetic corpus, seed 42\n");
    SharedData data;
    std::printf("corpus: %zu train samples, %zu test samples\n", data.train.size(),
                data.test.size());

    // -- 1 --------------------------------------------------------------
    report("trapezoidal roc_auc equals brute-force pair counting within 1e-9", [&] {
        Rng rng(2024);
        double max_diff = 0.0;
        const auto start = Clock::now();
        for (int trial = 0; trial < 100; ++trial) {
            const size_t n = 2 + rng.below(199);
            std::vector<double> scores(n);
            std::vector<int> labels(n);
            for (size_t i = 0; i < n; ++i) {
                scores[i] = rng.chance(0.3) ? rng.below(10) / 10.0 : rng.uniform();
                labels[i] = rng.chance(0.5) ? 1 : 0;
            }
            labels[0] = 1;
            labels[1] = 0;
            const double fast = roc_auc(scores, labels).first;
            const double slow = auc_pair_counting(scores, labels);
            max_diff = std::max(max_diff, std::abs(fast - slow));
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        Outcome o;
        o.pass = max_diff < 1e-9 && secs < 5.0;
        o.detail = fmt("max |diff| %.2e over 100 instances", max_diff);
        return o;
    });

    // -- 2 --------------------------------------------------------------
    report("confusion_metrics reproduces the published recall values", [&] {
        auto recall_of = [](int tp, int fn) {
            std::vector<int> preds, labels;
            for (int i = 0; i < tp; ++i) {
                preds.push_back(1);
                labels.push_back(1);
            }
            for (int i = 0; i < fn; ++i) {
                preds.push_back(0);
                labels.push_back(1);
            }
            preds.push_back(0);
            labels.push_back(0);
            return confusion_metrics(preds, labels).recall1;
        };
        const double r1 = recall_of(1859, 59);
        const double r2 = recall_of(1470, 448);
        const double r1r = std::round(r1 * 1e4) / 1e4;
        const double r2r = std::round(r2 * 1e4) / 1e4;
        Outcome o;
        o.pass = r1r == 0.9692 && r2r == 0.7664;
        o.detail = fmt("recall(1859/1918)=%.6f recall(1470/1918)=%.6f", r1, r2);
        return o;
    });

    // -- 3 --------------------------------------------------------------
    report("analytic VAE gradients match central finite differences", [&] {
        const VaeArchitecture mini{5, {4}, 2};
        VaeModel model = init_params(mini, 12345);
        Rng rng(777);
        Eigen::MatrixXd X(6, 5), noise(6, 2);
        for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < 5; ++c) X(r, c) = rng.uniform();
            for (int c = 0; c < 2; ++c) noise(r, c) = rng.normal();
        }
        const double kl_weight = 0.5;
        Eigen::VectorXd grads;
        vae_batch_backward(model, X, noise, kl_weight, grads);
        const double step = 1e-5;
        double max_rel = 0.0;
        const auto start = Clock::now();
        for (Eigen::Index i = 0; i < model.params().size(); ++i) {
            const double orig = model.params()[i];
            model.params()[i] = orig + step;
            const double up = vae_batch_loss(model, X, noise, kl_weight).total;
            model.params()[i] = orig - step;
            const double down = vae_batch_loss(model, X, noise, kl_weight).total;
            model.params()[i] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double rel =
                std::abs(fd - grads[i]) / (std::abs(fd) + std::abs(grads[i]) + 1e-8);
            max_rel = std::max(max_rel, rel);
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        Outcome o;
        o.pass = max_rel < 1e-4 && secs < 30.0;
        o.detail = fmt("max relative error %.2e over %zu parameters", max_rel,
                       static_cast<size_t>(model.params().size()));
        return o;
    });

    // -- 5 runs before 4 so both share one trained stack ------------------
    HybridComparisonReport hybrid_report;
    bool hybrid_ok = false;

    // -- 4 --------------------------------------------------------------
    report("VAE learns background: loss halves and separates dos", [&] {
        hybrid_report =
            run_hybrid_comparison(data.train, data.test, data.schema, 42, ExperimentConfig{});
        hybrid_ok = true;
        const auto& history = hybrid_report.training_history;
        double bg_sum = 0.0, dos_sum = 0.0;
        size_t bg_n = 0, dos_n = 0;
        for (size_t i = 0; i < hybrid_report.test_labels.size(); ++i) {
            if (hybrid_report.test_labels[i] == ClassLabel::background) {
                bg_sum += hybrid_report.scores_vae[i];
                ++bg_n;
            } else if (hybrid_report.test_labels[i] == ClassLabel::dos) {
                dos_sum += hybrid_report.scores_vae[i];
                ++dos_n;
            }
        }
        const double bg_mean = bg_sum / static_cast<double>(bg_n);
        const double dos_mean = dos_sum / static_cast<double>(dos_n);
        Outcome o;
        o.pass = history.size() >= 2 && history.back().total < 0.5 * history.front().total &&
                 bg_mean < dos_mean;
        o.detail = fmt("loss %.5f -> %.5f; heldout bg err %.5f < dos err %.5f",
                       history.front().total, history.back().total, bg_mean, dos_mean);
        return o;
    });

    // -- 5 --------------------------------------------------------------
    report("hybrid beats VAE-only by >= 0.03 AUC with FP <= 1.25x", [&] {
        Outcome o;
        if (!hybrid_ok) {
            o.detail = "hybrid comparison unavailable (criterion 4 failed to run)";
            return o;
        }
        const double auc_vae = hybrid_report.vae_only.auc;
        const double auc_hybrid = hybrid_report.hybrid.auc;
        const auto fp_vae = hybrid_report.vae_only.counts.fp;
        const auto fp_hybrid = hybrid_report.hybrid.counts.fp;
        o.pass = auc_hybrid >= auc_vae + 0.03 &&
                 static_cast<double>(fp_hybrid) <= 1.25 * static_cast<double>(fp_vae);
        o.detail = fmt("AUC %.4f vs %.4f (delta %.4f); FP %llu vs %llu (ratio %.3f)",
                       auc_hybrid, auc_vae, auc_hybrid - auc_vae,
                       static_cast<unsigned long long>(fp_hybrid),
                       static_cast<unsigned long long>(fp_vae),
                       fp_vae > 0 ? static_cast<double>(fp_hybrid) / fp_vae : 0.0);
        return o;
    });

    // -- 6 --------------------------------------------------------------
    report("binary filter has no more FPs than binarized multi-class", [&] {
        auto rep = run_filter_comparison(data.train, data.test, data.schema, 42,
                                         ExperimentConfig{});
        Outcome o;
        o.pass = rep.binary.counts.fp <= rep.multiclass.counts.fp &&
                 rep.binary.auc >= rep.multiclass.auc - 0.01;
        o.detail = fmt("FP %llu vs %llu; AUC %.4f vs %.4f",
                       static_cast<unsigned long long>(rep.binary.counts.fp),
                       static_cast<unsigned long long>(rep.multiclass.counts.fp),
                       rep.binary.auc, rep.multiclass.auc);
        return o;
    });

    // -- 7 --------------------------------------------------------------
    report("novelty: spam invisible to the filter, visible to the hybrid", [&] {
        NoveltySpec spam_spec;
        spam_spec.omitted = {ClassLabel::anomaly_spam};
        auto spam = run_novelty(data.train, data.test, spam_spec, data.schema, 42,
                                ExperimentConfig{});
        const double clf_spam = spam.classifier_only.omitted_recall[ClassLabel::anomaly_spam];
        const double hyb_spam = spam.hybrid.omitted_recall[ClassLabel::anomaly_spam];

        NoveltySpec scan_spec;
        scan_spec.omitted = {ClassLabel::scan11};
        auto scan = run_novelty(data.train, data.test, scan_spec, data.schema, 42,
                                ExperimentConfig{});
        const double clf_scan11 = scan.classifier_only.omitted_recall[ClassLabel::scan11];

        Outcome o;
        o.pass = clf_spam <= 0.05 && hyb_spam >= 0.10 && clf_scan11 >= 0.5;
        o.detail = fmt("spam: filter %.4f / hybrid %.4f; scan11 via scan44: %.4f", clf_spam,
                       hyb_spam, clf_scan11);
        return o;
    });

    // -- 8 --------------------------------------------------------------
    report("threshold formula: mean plus population std, exactly", [&] {
        std::vector<double> losses{0.0, 0.1, 0.2};
        AnomalyThreshold t = select_threshold(losses, 1.0);
        Outcome o;
        o.pass = std::abs(t.tau - 0.1816497) <= 1e-6;
        o.detail = fmt("tau %.7f vs 0.1816497", t.tau);
        return o;
    });

    // -- 9 --------------------------------------------------------------
    report("extraction invariants hold on 10,000 fuzzed windows", [&] {
        Rng rng(99);
        const FeatureSchema& schema = data.schema;
        size_t checked = 0;
        bool ok = true;
        std::string why = "all invariants held";
        std::vector<FlowRecord> corpus_flows;

        for (int w = 0; w < 10000 && ok; ++w) {
            const int n = 11 + static_cast<int>(rng.below(70));
            std::vector<FlowRecord> flows;
            const std::string src = "10.0." + std::to_string(w % 200) + "." +
                                    std::to_string(1 + w % 250);
            const int64_t window = static_cast<int64_t>(rng.below(50));
            for (int i = 0; i < n; ++i) {
                FlowRecord f;
                f.end_time = static_cast<double>(window) * 180.0 + rng.uniform() * 179.999;
                f.duration = rng.chance(0.2) ? 0.0 : rng.uniform() * 40.0;
                f.src_ip = src;
                f.dst_ip = "203.0.113." + std::to_string(rng.below(40));
                f.src_port = static_cast<uint16_t>(rng.below(65536));
                f.dst_port = static_cast<uint16_t>(rng.below(65536));
                f.protocol = rng.chance(0.7) ? Protocol::tcp()
                                             : (rng.chance(0.5) ? Protocol::udp()
                                                                : Protocol::icmp());
                f.tcp_flags = f.protocol.kind == Protocol::Kind::tcp
                                  ? TcpFlags{static_cast<uint8_t>(rng.below(64))}
                                  : TcpFlags{};
                f.packets = 1 + rng.below(1000);
                f.bytes = 1 + rng.below(2000000);
                f.label = static_cast<ClassLabel>(rng.below(kClassCount));
                flows.push_back(std::move(f));
            }

            AggregatedSample s = aggregate_window(flows, schema);
            ++checked;
            if (s.features.size() != kFeatureCount) {
                ok = false;
                why = "feature count";
                break;
            }
            for (double v : s.features) {
                if (!std::isfinite(v)) {
                    ok = false;
                    why = "non-finite feature";
                    break;
                }
            }
            double sp_sum = 0.0, dp_sum = 0.0;
            for (size_t i = 0; i < kTrackedPortCount; ++i) {
                sp_sum += s.features[15 + i];
                dp_sum += s.features[15 + kTrackedPortCount + i];
            }
            const double bound = std::log2(static_cast<double>(s.flow_count)) + 1e-9;
            if (sp_sum > 1.0 + 1e-9 || dp_sum > 1.0 + 1e-9) {
                ok = false;
                why = "port proportion sum exceeds 1";
            }
            for (size_t i = 10; i < 15 && ok; ++i) {
                if (s.features[i] > bound) {
                    ok = false;
                    why = "entropy above log2(flow_count)";
                }
            }
            if (ok) {
                rng.shuffle(flows);
                AggregatedSample p = aggregate_window(flows, schema);
                if (p.features != s.features || p.label != s.label) {
                    ok = false;
                    why = "permutation changed the sample";
                }
            }
            if (ok && w % 23 == 0) {
                corpus_flows.insert(corpus_flows.end(), flows.begin(), flows.end());
            }
        }

        if (ok) {
            // accounting identity over a mixed corpus with undersized windows
            Rng frng(7);
            for (int i = 0; i < 400; ++i) {
                FlowRecord f;
                f.end_time = frng.uniform() * 9000.0;
                f.duration = 0.5;
                f.src_ip = "10.9." + std::to_string(frng.below(20)) + ".1";
                f.dst_ip = "203.0.113.9";
                f.src_port = 1;
                f.dst_port = 2;
                f.protocol = Protocol::udp();
                f.packets = 1;
                f.bytes = 40;
                f.label = static_cast<ClassLabel>(frng.below(kClassCount));
                corpus_flows.push_back(std::move(f));
            }
            ExtractResult r = extract_dataset(corpus_flows, schema);
            std::map<ClassLabel, uint64_t> totals;
            for (const auto& f : corpus_flows) totals[f.label] += 1;
            uint64_t kept = 0;
            for (const auto& s : r.samples) kept += s.flow_count;
            uint64_t omitted = 0, total = 0;
            for (const auto& [label, counts] : r.visibility.per_class) {
                if (counts.total_flows != totals[label]) {
                    ok = false;
                    why = "per-class totals drifted";
                }
                omitted += counts.omitted_flows;
                total += counts.total_flows;
            }
            if (kept + omitted != total) {
                ok = false;
                why = "omitted + kept != total";
            }
        }

        Outcome o;
        o.pass = ok;
        o.detail = fmt("%zu windows checked; %s", checked, why.c_str());
        return o;
    });

    // -- 10 -------------------------------------------------------------
    report("end-to-end throughput >= 1,273 flows/s", [&] {
        ExperimentConfig quick;
        quick.vae.epochs = 4;  // inference cost does not depend on training length
        TrainedStack stack = train_stack(data.train, data.schema, 42, quick);
        PipelineConfig pipeline;
        pipeline.schema = data.schema;
        pipeline.forest = stack.forest;
        pipeline.vae = stack.vae;
        pipeline.normalizer = stack.normalizer;
        pipeline.tau = std::min(stack.threshold.tau, 1.0);
        BenchReport bench = bench_throughput(data.gen_config.test_path, pipeline, 3);
        const std::string json = bench_report_to_json(bench);
        Outcome o;
        o.pass = bench.end_to_end_flows_per_s.median >= 1273.0 &&
                 json.find("17000") != std::string::npos;
        o.detail = fmt("end-to-end median %.0f flows/s over %llu flows (reference block %s)",
                       bench.end_to_end_flows_per_s.median,
                       static_cast<unsigned long long>(bench.flows),
                       json.find("17000") != std::string::npos ? "present" : "missing");
        return o;
    });

    // -- 11 -------------------------------------------------------------
    report("CLI subcommands are byte-deterministic under a fixed seed", [&] {
        Workspace dir;
        auto run_cli = [](std::vector<std::string> args) {
            return cli_dispatch(args);
        };
        std::vector<std::string> mismatches;
        auto expect_same = [&](const std::string& name, const std::string& a,
                               const std::string& b) {
            if (slurp(a) != slurp(b) || slurp(a).empty()) {
                mismatches.push_back(name);
            }
        };

        // one small corpus; every subcommand runs twice into separate files
        for (int round = 0; round < 2; ++round) {
            const std::string r = std::to_string(round);
            int rc = 0;
            rc |= run_cli({"--quiet", "--seed", "5", "gen", "--out-train",
                           dir.file("train" + r + ".csv"), "--out-test",
                           dir.file("test" + r + ".csv"), "--manifest",
                           dir.file("gen" + r + ".json"), "--duration", "2700", "--sources",
                           "10", "--train-windows", "scan44=1", "--test-windows", "scan44=1"});
            rc |= run_cli({"--quiet", "extract", "--in", dir.file("train" + r + ".csv"),
                           "--out", dir.file("train_s" + r + ".csv"), "--visibility",
                           dir.file("vis" + r + ".json")});
            rc |= run_cli({"--quiet", "extract", "--in", dir.file("test" + r + ".csv"),
                           "--out", dir.file("test_s" + r + ".csv")});
            rc |= run_cli({"--quiet", "--seed", "5", "fit-filter", "--train",
                           dir.file("train_s" + r + ".csv"), "--out",
                           dir.file("forest" + r + ".json"), "--trees", "12", "--per-class",
                           "120"});
            rc |= run_cli({"--quiet", "--seed", "5", "fit-vae", "--train",
                           dir.file("train_s" + r + ".csv"), "--out",
                           dir.file("vae" + r + ".json"), "--loss-csv",
                           dir.file("loss" + r + ".csv"), "--epochs", "2", "--batch", "256"});
            rc |= run_cli({"--quiet", "run", "--in", dir.file("test" + r + ".csv"), "--forest",
                           dir.file("forest" + r + ".json"), "--vae",
                           dir.file("vae" + r + ".json"), "--out",
                           dir.file("results" + r + ".csv")});
            rc |= run_cli({"--quiet", "--seed", "5", "eval", "--experiment", "filter",
                           "--train", dir.file("train_s" + r + ".csv"), "--test",
                           dir.file("test_s" + r + ".csv"), "--out",
                           dir.file("filter" + r + ".json"), "--trees", "12", "--per-class",
                           "120"});
            // no --kde-csv here: with this tiny corpus the filter flags every
            // attack, so the attack score group is all 1.0 and KDE correctly
            // refuses; KDE byte-determinism is covered in the unit suite
            rc |= run_cli({"--quiet", "--seed", "5", "eval", "--experiment", "hybrid",
                           "--train", dir.file("train_s" + r + ".csv"), "--test",
                           dir.file("test_s" + r + ".csv"), "--out",
                           dir.file("hybrid" + r + ".json"), "--roc-csv",
                           dir.file("roc" + r + ".csv"), "--trees", "12", "--epochs", "2",
                           "--batch", "256", "--per-class", "120"});
            rc |= run_cli({"--quiet", "--seed", "5", "novelty", "--train",
                           dir.file("train_s" + r + ".csv"), "--test",
                           dir.file("test_s" + r + ".csv"), "--omit", "dos", "--restricted",
                           "--out", dir.file("novelty" + r + ".json"), "--trees", "12",
                           "--epochs", "2", "--batch", "256", "--per-class", "120"});
            if (rc != 0) {
                Outcome o;
                o.detail = "a subcommand exited nonzero";
                return o;
            }
        }
        expect_same("gen/train", dir.file("train0.csv"), dir.file("train1.csv"));
        expect_same("gen/test", dir.file("test0.csv"), dir.file("test1.csv"));
        expect_same("gen/manifest", dir.file("gen0.json"), dir.file("gen1.json"));
        expect_same("extract/samples", dir.file("train_s0.csv"), dir.file("train_s1.csv"));
        expect_same("extract/visibility", dir.file("vis0.json"), dir.file("vis1.json"));
        expect_same("fit-filter/model", dir.file("forest0.json"), dir.file("forest1.json"));
        expect_same("fit-vae/model", dir.file("vae0.json"), dir.file("vae1.json"));
        expect_same("fit-vae/loss", dir.file("loss0.csv"), dir.file("loss1.csv"));
        expect_same("run/results", dir.file("results0.csv"), dir.file("results1.csv"));
        expect_same("eval/filter", dir.file("filter0.json"), dir.file("filter1.json"));
        expect_same("eval/hybrid", dir.file("hybrid0.json"), dir.file("hybrid1.json"));
        expect_same("eval/roc", dir.file("roc0.csv"), dir.file("roc1.csv"));
        expect_same("novelty/report", dir.file("novelty0.json"), dir.file("novelty1.json"));

        Outcome o;
        o.pass = mismatches.empty();
        if (o.pass) {
            o.detail = "13 primary outputs byte-identical across reruns";
        } else {
            o.detail = "mismatch in:";
            for (const auto& m : mismatches) o.detail += " " + m;
        }
        return o;
    });

    std::printf("%d of %d criteria passed\n", g_criterion - g_failures, g_criterion);
    return g_failures;
}
