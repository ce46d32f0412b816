#include "nids/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/experiments.hpp"
#include "nids/features.hpp"
#include "nids/forest.hpp"
#include "nids/pipeline.hpp"
#include "nids/rng.hpp"
#include "nids/synth.hpp"
#include "nids/vae.hpp"

namespace nids {

namespace {

struct GlobalOpts {
    uint64_t seed = 42;
    std::string schema_path;
    bool quiet = false;
    int threads = 0;
};

struct ManifestWriter {
    std::string subcommand;
    std::vector<std::string> argv;
    GlobalOpts globals;
    std::string schema_fingerprint;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    nlohmann::json config = nlohmann::json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& primary_output) const {
        nlohmann::json j;
        j["format"] = "run-manifest/1";
        j["subcommand"] = subcommand;
        j["argv"] = argv;
        j["seed"] = globals.seed;
        j["schema_fingerprint"] = schema_fingerprint;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["config"] = config;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out(primary_output + ".manifest.json");
        if (!out) {
            throw DataError("cannot write manifest next to '" + primary_output + "'");
        }
        out << j.dump(2) << "\n";
    }
};

FeatureSchema active_schema(const GlobalOpts& globals) {
    return globals.schema_path.empty() ? FeatureSchema::defaults()
                                       : FeatureSchema::load(globals.schema_path);
}

std::ostream& info(const GlobalOpts& globals) {
    static std::ofstream devnull;
    if (globals.quiet) {
        devnull.setstate(std::ios_base::badbit);
        return devnull;
    }
    return std::cout;
}

std::set<ClassLabel> parse_omitted(const std::vector<std::string>& names) {
    std::set<ClassLabel> omitted;
    for (const std::string& name : names) {
        auto label = class_label_from(name);
        if (!label) throw DataError("unknown class label '" + name + "'");
        omitted.insert(*label);
    }
    return omitted;
}

void apply_window_overrides(std::map<ClassLabel, int>& plan,
                            const std::vector<std::string>& overrides) {
    for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw DataError("window override must look like class=count: '" + item + "'");
        }
        auto label = class_label_from(item.substr(0, eq));
        if (!label) throw DataError("unknown class label in '" + item + "'");
        int count = 0;
        try {
            count = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw DataError("bad window count in '" + item + "'");
        }
        if (count <= 0) {
            plan.erase(*label);
        } else {
            plan[*label] = count;
        }
    }
}

PipelineConfig load_pipeline(const std::string& forest_path, const std::string& vae_path,
                             const FeatureSchema& schema, double tau_override) {
    PipelineConfig config;
    config.schema = schema;
    config.forest = ForestModel::load(forest_path);
    config.vae = VaeModel::load(vae_path);
    config.normalizer = config.vae.normalizer;
    if (tau_override >= 0.0) {
        config.tau = tau_override;
    } else if (config.vae.threshold) {
        config.tau = config.vae.threshold->tau;
    } else {
        throw DataError("vae model carries no threshold; pass --tau");
    }
    config.validate();
    return config;
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_gen(const GlobalOpts& globals, ManifestWriter& manifest, GenConfig config,
            const std::vector<std::string>& train_overrides,
            const std::vector<std::string>& test_overrides) {
    config.seed = globals.seed;
    apply_window_overrides(config.train_attack_windows, train_overrides);
    apply_window_overrides(config.test_attack_windows, test_overrides);

    GenManifest gen_manifest = generate(config);
    std::ofstream out(config.manifest_path);
    if (!out) throw DataError("cannot write generator manifest '" + config.manifest_path + "'");
    out << gen_manifest.to_json(config) << "\n";

    manifest.outputs = {config.train_path, config.test_path, config.manifest_path};
    manifest.config = nlohmann::json::parse(gen_manifest.to_json(config))["config"];
    manifest.write(config.train_path);
    info(globals) << "gen: wrote " << gen_manifest.train.total_flows << " train flows, "
                  << gen_manifest.test.total_flows << " test flows\n";
    return 0;
}

int cmd_extract(const GlobalOpts& globals, ManifestWriter& manifest, const std::string& in_path,
                const std::string& out_path, const std::string& visibility_path) {
    const FeatureSchema schema = active_schema(globals);
    ExtractResult result = extract_file(in_path, schema);
    write_samples_csv(out_path, result.samples, schema);
    if (!visibility_path.empty()) {
        std::ofstream vis(visibility_path);
        if (!vis) throw DataError("cannot write visibility report '" + visibility_path + "'");
        vis << result.visibility.to_json() << "\n";
    }
    manifest.inputs = {in_path};
    manifest.outputs = {out_path};
    if (!visibility_path.empty()) manifest.outputs.push_back(visibility_path);
    manifest.write(out_path);
    info(globals) << "extract: " << result.samples.size() << " samples\n";
    return 0;
}

int cmd_fit_filter(const GlobalOpts& globals, ManifestWriter& manifest,
                   const std::string& train_path, const std::string& out_path,
                   const std::string& mode_name, const std::vector<std::string>& omit_names,
                   int n_trees, int per_class) {
    const FeatureSchema schema = active_schema(globals);
    auto samples = read_samples_csv(train_path, schema);
    const auto omitted = parse_omitted(omit_names);

    Normalizer normalizer = Normalizer::fit(samples);
    ForestConfig fc;
    fc.n_trees = n_trees;
    fc.seed = derive_seed(globals.seed, "forest");
    fc.threads = globals.threads;

    const ForestMode mode =
        mode_name == "multiclass" ? ForestMode::multiclass : ForestMode::binary;
    std::vector<AggregatedSample> balanced;
    if (mode == ForestMode::binary) {
        balanced = balance_binary(samples, omitted, derive_seed(globals.seed, "balance"),
                                  per_class);
    } else {
        if (!omitted.empty()) {
            std::vector<AggregatedSample> kept;
            for (auto& s : samples) {
                if (!omitted.contains(s.label)) kept.push_back(std::move(s));
            }
            samples = std::move(kept);
        }
        balanced =
            balance_multiclass(samples, derive_seed(globals.seed, "balance"), per_class);
    }
    ForestModel model =
        train_forest_on_samples(balanced, normalizer, fc, mode, schema.fingerprint());
    model.save(out_path);

    manifest.inputs = {train_path};
    manifest.outputs = {out_path};
    manifest.config = {{"mode", mode_name},
                       {"omit", omit_names},
                       {"n_trees", n_trees},
                       {"per_class", per_class},
                       {"balanced_samples", balanced.size()}};
    manifest.write(out_path);
    info(globals) << "fit-filter: trained " << n_trees << " trees on " << balanced.size()
                  << " balanced samples\n";
    return 0;
}

int cmd_fit_vae(const GlobalOpts& globals, ManifestWriter& manifest,
                const std::string& train_path, const std::string& out_path,
                std::string loss_csv, TrainConfig tc, double threshold_k) {
    if (loss_csv.empty()) loss_csv = out_path + ".loss.csv";
    const FeatureSchema schema = active_schema(globals);
    auto samples = read_samples_csv(train_path, schema);
    Normalizer normalizer = Normalizer::fit(samples);

    std::vector<AggregatedSample> background;
    for (const auto& s : samples) {
        if (s.label == ClassLabel::background) background.push_back(s);
    }
    if (background.empty()) {
        throw DataError("fit-vae: training set has no background samples");
    }

    Eigen::MatrixXd X(static_cast<Eigen::Index>(background.size()),
                      static_cast<Eigen::Index>(kFeatureCount));
    for (size_t i = 0; i < background.size(); ++i) {
        const auto norm = normalizer.apply(background[i].features);
        for (size_t f = 0; f < kFeatureCount; ++f) {
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = norm[f];
        }
    }

    tc.seed = derive_seed(globals.seed, "vae");
    VaeModel model = init_params(VaeArchitecture{}, tc.seed);
    auto history = train_vae(model, X, tc);

    std::vector<double> losses;
    losses.reserve(background.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::vector<double> row(X.row(i).begin(), X.row(i).end());
        losses.push_back(reconstruction_error(model, row));
    }
    model.threshold = select_threshold(losses, threshold_k);
    model.normalizer = normalizer;
    model.schema_fingerprint = schema.fingerprint();
    model.save(out_path);

    {
        std::ofstream out(loss_csv);
        if (!out) throw DataError("cannot write loss csv '" + loss_csv + "'");
        out << "epoch,total_loss,recon_loss,kl_loss\n";
        for (size_t e = 0; e < history.size(); ++e) {
            out << (e + 1) << ',' << history[e].total << ',' << history[e].recon << ','
                << history[e].kl << '\n';
        }
    }

    manifest.inputs = {train_path};
    manifest.outputs = {out_path, loss_csv};
    manifest.config = {{"epochs", tc.epochs},
                       {"batch_size", tc.batch_size},
                       {"learning_rate", tc.learning_rate},
                       {"weight_decay", tc.weight_decay},
                       {"kl_weight", tc.kl_weight},
                       {"threshold_k", threshold_k},
                       {"background_samples", background.size()},
                       {"tau", model.threshold->tau}};
    manifest.write(out_path);
    info(globals) << "fit-vae: tau=" << model.threshold->tau << " over "
                  << background.size() << " background samples\n";
    return 0;
}

int cmd_run(const GlobalOpts& globals, ManifestWriter& manifest, const std::string& in_path,
            const std::string& forest_path, const std::string& vae_path,
            const std::string& out_path, double tau_override, bool no_labels) {
    const FeatureSchema schema = active_schema(globals);
    PipelineConfig config = load_pipeline(forest_path, vae_path, schema, tau_override);
    auto results = run_pipeline(in_path, config, !no_labels);
    write_results_csv(out_path, results, !no_labels);

    manifest.inputs = {in_path, forest_path, vae_path};
    manifest.outputs = {out_path};
    manifest.config = {{"tau", config.tau}, {"with_labels", !no_labels}};
    manifest.write(out_path);

    uint64_t positives = 0;
    for (const auto& r : results) positives += static_cast<uint64_t>(r.final_verdict);
    info(globals) << "run: " << results.size() << " samples, " << positives << " flagged\n";
    return 0;
}

int cmd_eval(const GlobalOpts& globals, ManifestWriter& manifest,
             const std::string& experiment, const std::string& train_path,
             const std::string& test_path, const std::string& out_path,
             const std::string& roc_csv, const std::string& kde_csv,
             const ExperimentConfig& config) {
    const FeatureSchema schema = active_schema(globals);
    auto train = read_samples_csv(train_path, schema);
    auto test = read_samples_csv(test_path, schema);

    std::string json_text;
    std::string table_text;
    if (experiment == "filter") {
        auto report = run_filter_comparison(train, test, schema, globals.seed, config);
        json_text = filter_report_to_json(report, globals.seed, schema.fingerprint());
        table_text = filter_report_table(report);
        if (!roc_csv.empty()) write_roc_csv(roc_csv, report.binary.roc_points);
    } else if (experiment == "hybrid") {
        auto report = run_hybrid_comparison(train, test, schema, globals.seed, config);
        json_text = hybrid_report_to_json(report, globals.seed, schema.fingerprint());
        table_text = hybrid_report_table(report);
        if (!roc_csv.empty()) write_roc_csv(roc_csv, report.score_roc_hybrid);
        if (!kde_csv.empty()) {
            std::map<std::string, std::vector<double>> groups;
            for (size_t i = 0; i < report.scores_hybrid.size(); ++i) {
                const bool attack = is_attack(report.test_labels[i]);
                groups[attack ? "attack" : "background"].push_back(report.scores_hybrid[i]);
            }
            write_density_csv(kde_csv, export_score_density(groups));
        }
    } else {
        throw DataError("unknown experiment '" + experiment + "' (use filter|hybrid)");
    }

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write report '" + out_path + "'");
    out << json_text << "\n";

    manifest.inputs = {train_path, test_path};
    manifest.outputs = {out_path};
    if (!roc_csv.empty()) manifest.outputs.push_back(roc_csv);
    if (!kde_csv.empty()) manifest.outputs.push_back(kde_csv);
    manifest.config = {{"experiment", experiment},
                       {"n_trees", config.forest.n_trees},
                       {"epochs", config.vae.epochs},
                       {"threshold_k", config.threshold_k}};
    manifest.write(out_path);
    info(globals) << table_text;
    info(globals) << "eval(" << experiment << "): report written to " << out_path << "\n";
    return 0;
}

int cmd_novelty(const GlobalOpts& globals, ManifestWriter& manifest,
                const std::string& train_path, const std::string& test_path,
                const std::vector<std::string>& omit_names, bool restricted,
                const std::string& out_path, const ExperimentConfig& config) {
    const FeatureSchema schema = active_schema(globals);
    auto train = read_samples_csv(train_path, schema);
    auto test = read_samples_csv(test_path, schema);

    NoveltySpec spec;
    spec.omitted = parse_omitted(omit_names);
    spec.restricted_eval = restricted;
    auto report = run_novelty(train, test, spec, schema, globals.seed, config);
    info(globals) << novelty_report_table(report);

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write report '" + out_path + "'");
    out << novelty_report_to_json(report, globals.seed, schema.fingerprint()) << "\n";

    manifest.inputs = {train_path, test_path};
    manifest.outputs = {out_path};
    manifest.config = {{"omit", omit_names}, {"restricted", restricted}};
    manifest.write(out_path);
    info(globals) << "novelty: report written to " << out_path << "\n";
    return 0;
}

int cmd_bench(const GlobalOpts& globals, ManifestWriter& manifest, const std::string& in_path,
              const std::string& forest_path, const std::string& vae_path,
              const std::string& out_path, int repetitions, double tau_override) {
    const FeatureSchema schema = active_schema(globals);
    PipelineConfig config = load_pipeline(forest_path, vae_path, schema, tau_override);
    BenchReport report = bench_throughput(in_path, config, repetitions);

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write bench report '" + out_path + "'");
    out << bench_report_to_json(report) << "\n";

    manifest.inputs = {in_path, forest_path, vae_path};
    manifest.outputs = {out_path};
    manifest.config = {{"repetitions", repetitions}};
    manifest.write(out_path);
    info(globals) << "bench: end-to-end " << report.end_to_end_flows_per_s.median
                  << " flows/s (median of " << repetitions << ")\n";
    return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
    GlobalOpts globals;

    CLI::App app{"Hybrid flow anomaly detection: random-forest prefilter + "
                 "variational-autoencoder scoring over windowed flow features"};
    app.require_subcommand(1);
    app.add_option("--seed", globals.seed, "Base seed; expands into named sub-streams");
    app.add_option("--schema", globals.schema_path, "Feature schema JSON (default built-in)");
    app.add_flag("--quiet", globals.quiet, "Suppress progress output");
    app.add_option("--threads", globals.threads, "Worker cap (0 = hardware)");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate the synthetic train/test flow corpus");
    GenConfig gen_config;
    std::vector<std::string> gen_train_overrides, gen_test_overrides;
    gen->add_option("--out-train", gen_config.train_path, "Train flow CSV path");
    gen->add_option("--out-test", gen_config.test_path, "Test flow CSV path");
    gen->add_option("--manifest", gen_config.manifest_path, "Generator manifest path");
    gen->add_option("--duration", gen_config.duration_seconds, "Simulated seconds per split");
    gen->add_option("--sources", gen_config.background_sources, "Background source count");
    gen->add_option("--train-windows", gen_train_overrides,
                    "Override train windows, class=count (repeatable)");
    gen->add_option("--test-windows", gen_test_overrides,
                    "Override test windows, class=count (repeatable)");

    // extract
    auto* extract = app.add_subcommand("extract", "Aggregate flows into feature samples");
    std::string ex_in, ex_out, ex_vis;
    extract->add_option("--in", ex_in, "Flow CSV (plain or gzip)")->required();
    extract->add_option("--out", ex_out, "Output samples CSV")->required();
    extract->add_option("--visibility", ex_vis, "Visibility report JSON path");

    // fit-filter
    auto* fit_filter = app.add_subcommand("fit-filter", "Train the random-forest prefilter");
    std::string ff_train, ff_out, ff_mode = "binary";
    std::vector<std::string> ff_omit;
    int ff_trees = 100, ff_per_class = 1000;
    fit_filter->add_option("--train", ff_train, "Training samples CSV")->required();
    fit_filter->add_option("--out", ff_out, "Output model JSON")->required();
    fit_filter->add_option("--mode", ff_mode, "binary|multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}));
    fit_filter->add_option("--omit", ff_omit, "Class to exclude from training (repeatable)");
    fit_filter->add_option("--trees", ff_trees, "Number of trees");
    fit_filter->add_option("--per-class", ff_per_class, "Balanced per-class sample target");

    // fit-vae
    auto* fit_vae = app.add_subcommand("fit-vae", "Train the autoencoder on background");
    std::string fv_train, fv_out, fv_loss_csv;
    TrainConfig fv_config;
    double fv_k = 1.0;
    fit_vae->add_option("--train", fv_train, "Training samples CSV")->required();
    fit_vae->add_option("--out", fv_out, "Output model JSON")->required();
    fit_vae->add_option("--loss-csv", fv_loss_csv, "Per-epoch loss CSV path");
    fit_vae->add_option("--epochs", fv_config.epochs, "Training epochs");
    fit_vae->add_option("--batch", fv_config.batch_size, "Batch size");
    fit_vae->add_option("--lr", fv_config.learning_rate, "Learning rate");
    fit_vae->add_option("--weight-decay", fv_config.weight_decay, "L2 weight decay");
    fit_vae->add_option("--kl-weight", fv_config.kl_weight, "KL term weight");
    fit_vae->add_option("--k", fv_k, "Threshold coefficient (tau = mean + k*std)");

    // run
    auto* run = app.add_subcommand("run", "Score a flow file through the hybrid pipeline");
    std::string run_in, run_forest, run_vae, run_out;
    double run_tau = -1.0;
    bool run_no_labels = false;
    run->add_option("--in", run_in, "Flow CSV")->required();
    run->add_option("--forest", run_forest, "Forest model JSON")->required();
    run->add_option("--vae", run_vae, "VAE model JSON")->required();
    run->add_option("--out", run_out, "Results CSV")->required();
    run->add_option("--tau", run_tau, "Threshold override (default: model threshold)");
    run->add_flag("--no-labels", run_no_labels, "Omit the true_label column");

    // eval
    auto* eval = app.add_subcommand("eval", "Run a comparison experiment");
    std::string ev_experiment, ev_train, ev_test, ev_out, ev_roc, ev_kde;
    ExperimentConfig ev_config;
    eval->add_option("--experiment", ev_experiment, "filter|hybrid")
        ->required()
        ->check(CLI::IsMember({"filter", "hybrid"}));
    eval->add_option("--train", ev_train, "Training samples CSV")->required();
    eval->add_option("--test", ev_test, "Test samples CSV")->required();
    eval->add_option("--out", ev_out, "Report JSON")->required();
    eval->add_option("--roc-csv", ev_roc, "ROC points CSV");
    eval->add_option("--kde-csv", ev_kde, "Score density CSV (hybrid only)");
    eval->add_option("--trees", ev_config.forest.n_trees, "Forest size");
    eval->add_option("--epochs", ev_config.vae.epochs, "VAE epochs");
    eval->add_option("--batch", ev_config.vae.batch_size, "VAE batch size");
    eval->add_option("--k", ev_config.threshold_k, "Threshold coefficient");
    eval->add_option("--per-class", ev_config.per_class_target, "Balance target per class");

    // novelty
    auto* novelty = app.add_subcommand("novelty", "Open-world test with omitted classes");
    std::string nv_train, nv_test, nv_out;
    std::vector<std::string> nv_omit;
    bool nv_restricted = false;
    ExperimentConfig nv_config;
    novelty->add_option("--train", nv_train, "Training samples CSV")->required();
    novelty->add_option("--test", nv_test, "Test samples CSV")->required();
    novelty->add_option("--omit", nv_omit, "Class omitted from training (repeatable)")
        ->required();
    novelty->add_flag("--restricted", nv_restricted,
                      "Also evaluate on background + omitted classes only");
    novelty->add_option("--out", nv_out, "Report JSON")->required();
    novelty->add_option("--trees", nv_config.forest.n_trees, "Forest size");
    novelty->add_option("--epochs", nv_config.vae.epochs, "VAE epochs");
    novelty->add_option("--batch", nv_config.vae.batch_size, "VAE batch size");
    novelty->add_option("--k", nv_config.threshold_k, "Threshold coefficient");
    novelty->add_option("--per-class", nv_config.per_class_target, "Balance target per class");

    // bench
    auto* bench = app.add_subcommand("bench", "Measure stage and end-to-end throughput");
    std::string bn_in, bn_forest, bn_vae, bn_out;
    int bn_reps = 3;
    double bn_tau = -1.0;
    bench->add_option("--in", bn_in, "Flow CSV")->required();
    bench->add_option("--forest", bn_forest, "Forest model JSON")->required();
    bench->add_option("--vae", bn_vae, "VAE model JSON")->required();
    bench->add_option("--out", bn_out, "Bench report JSON")->required();
    bench->add_option("--reps", bn_reps, "Repetitions (median reported)");
    bench->add_option("--tau", bn_tau, "Threshold override");

    // global flags may appear before or after the subcommand
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    ManifestWriter manifest;
    manifest.argv = args;
    manifest.globals = globals;
    try {
        manifest.schema_fingerprint = active_schema(globals).fingerprint();
        ev_config.forest.threads = globals.threads;
        nv_config.forest.threads = globals.threads;
        if (gen->parsed()) {
            manifest.subcommand = "gen";
            return cmd_gen(globals, manifest, gen_config, gen_train_overrides,
                           gen_test_overrides);
        }
        if (extract->parsed()) {
            manifest.subcommand = "extract";
            return cmd_extract(globals, manifest, ex_in, ex_out, ex_vis);
        }
        if (fit_filter->parsed()) {
            manifest.subcommand = "fit-filter";
            return cmd_fit_filter(globals, manifest, ff_train, ff_out, ff_mode, ff_omit,
                                  ff_trees, ff_per_class);
        }
        if (fit_vae->parsed()) {
            manifest.subcommand = "fit-vae";
            return cmd_fit_vae(globals, manifest, fv_train, fv_out, fv_loss_csv, fv_config,
                               fv_k);
        }
        if (run->parsed()) {
            manifest.subcommand = "run";
            return cmd_run(globals, manifest, run_in, run_forest, run_vae, run_out, run_tau,
                           run_no_labels);
        }
        if (eval->parsed()) {
            manifest.subcommand = "eval";
            return cmd_eval(globals, manifest, ev_experiment, ev_train, ev_test, ev_out, ev_roc,
                            ev_kde, ev_config);
        }
        if (novelty->parsed()) {
            manifest.subcommand = "novelty";
            return cmd_novelty(globals, manifest, nv_train, nv_test, nv_omit, nv_restricted,
                               nv_out, nv_config);
        }
        if (bench->parsed()) {
            manifest.subcommand = "bench";
            return cmd_bench(globals, manifest, bn_in, bn_forest, bn_vae, bn_out, bn_reps,
                             bn_tau);
        }
        std::cerr << app.help() << std::flush;
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TrainError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace nids
