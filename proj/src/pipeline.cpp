#include "nids/pipeline.hpp"

#include <charconv>
#include <fstream>

#include "nids/errors.hpp"

namespace nids {

namespace {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void PipelineConfig::validate() const {
    const std::string fp = schema.fingerprint();
    if (forest.schema_fingerprint != fp) {
        throw DataError("pipeline: forest model was trained against schema " +
                        forest.schema_fingerprint + ", active schema is " + fp);
    }
    if (vae.schema_fingerprint != fp) {
        throw DataError("pipeline: vae model was trained against schema " +
                        vae.schema_fingerprint + ", active schema is " + fp);
    }
    if (!(forest.normalizer == normalizer) || !(vae.normalizer == normalizer)) {
        throw DataError("pipeline: model normalizers do not match the pipeline normalizer");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw DataError("pipeline: tau must lie in [0,1]");
    }
}

DetectionResult score_sample(const ForestModel& forest, const VaeModel& vae, double tau,
                             std::span<const double> normalized_features) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw DataError("score_sample: tau must lie in [0,1]");
    }
    DetectionResult result;
    result.filter_verdict = forest.predict_binary(normalized_features);
    result.anomaly_score = reconstruction_error(vae, normalized_features);
    if (result.filter_verdict == 1) {
        result.hybrid_score = 1.0;
        result.final_verdict = 1;
    } else {
        result.hybrid_score = result.anomaly_score;
        result.final_verdict = result.anomaly_score > tau ? 1 : 0;
    }
    return result;
}

std::vector<DetectionResult> score_samples(std::span<const AggregatedSample> samples,
                                           const PipelineConfig& config, bool with_labels) {
    config.validate();
    std::vector<DetectionResult> results;
    results.reserve(samples.size());
    for (const AggregatedSample& sample : samples) {
        const auto normalized = config.normalizer.apply(sample.features);
        DetectionResult r = score_sample(config.forest, config.vae, config.tau, normalized);
        r.key = sample.key;
        if (with_labels) r.true_label = sample.label;
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<DetectionResult> run_pipeline(const std::string& flow_path,
                                          const PipelineConfig& config, bool with_labels) {
    config.validate();
    ExtractResult extracted = extract_file(flow_path, config.schema);
    return score_samples(extracted.samples, config, with_labels);
}

void write_results_csv(const std::string& path, std::span<const DetectionResult> results,
                       bool with_labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write results file '" + path + "'");
    out << "src_ip,window_index,filter_verdict,anomaly_score,hybrid_score,final_verdict";
    if (with_labels) out << ",true_label";
    out << '\n';
    for (const DetectionResult& r : results) {
        out << r.key.src_ip << ',' << r.key.window_index << ',' << r.filter_verdict << ','
            << format_double(r.anomaly_score) << ',' << format_double(r.hybrid_score) << ','
            << r.final_verdict;
        if (with_labels) {
            out << ',' << (r.true_label ? to_string(*r.true_label) : std::string_view(""));
        }
        out << '\n';
    }
}

}  // namespace nids
