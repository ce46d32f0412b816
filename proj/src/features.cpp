#include "nids/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/rng.hpp"

namespace nids {

namespace {

constexpr double kMinRateDuration = 1e-3;  // clamp for packet/byte rates

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(std::string("unparsable ") + what + " '" + std::string(s) + "'");
    }
    return v;
}

// order-free sum: accumulate ascending so the result does not depend on the
// input permutation
double stable_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

struct WindowKeyHash {
    size_t operator()(const WindowKey& k) const {
        uint64_t h = fnv1a64(k.src_ip);
        h ^= mix64(static_cast<uint64_t>(k.window_index));
        return static_cast<size_t>(h);
    }
};

}  // namespace

FeatureSchema FeatureSchema::defaults() {
    FeatureSchema s;
    s.tracked_ports = {20,  21,  22,  23,  25,  50,  51,  53,  67,  68,  69,  80,  110, 119,
                       123, 135, 136, 137, 138, 139, 143, 161, 162, 389, 443, 989, 990};
    return s;
}

void FeatureSchema::validate() const {
    if (window_seconds <= 0) throw DataError("schema: window_seconds must be positive");
    if (min_flows < 0) throw DataError("schema: min_flows must be non-negative");
    if (tracked_ports.size() != kTrackedPortCount) {
        throw DataError("schema: tracked_ports must list exactly " +
                        std::to_string(kTrackedPortCount) + " ports");
    }
    auto sorted = tracked_ports;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DataError("schema: tracked_ports must be unique");
    }
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schema file '" + path + "': " + e.what());
    }
    FeatureSchema s = defaults();
    s.window_seconds = j.value("window_seconds", s.window_seconds);
    s.min_flows = j.value("min_flows", s.min_flows);
    if (j.contains("tracked_ports")) {
        s.tracked_ports = j.at("tracked_ports").get<std::vector<uint16_t>>();
    }
    s.validate();
    return s;
}

void FeatureSchema::save(const std::string& path) const {
    validate();
    nlohmann::json j;
    j["format"] = "feature-schema/1";
    j["window_seconds"] = window_seconds;
    j["min_flows"] = min_flows;
    j["tracked_ports"] = tracked_ports;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema file '" + path + "'");
    out << j.dump(2) << "\n";
}

std::string FeatureSchema::fingerprint() const {
    std::string canon = "ws=" + std::to_string(window_seconds) +
                        ";mf=" + std::to_string(min_flows) + ";ports=";
    for (uint16_t p : tracked_ports) {
        canon += std::to_string(p);
        canon += ',';
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));
    return buf;
}

std::vector<std::string> FeatureSchema::feature_names() const {
    static const char* base[] = {"duration", "packets", "bytes", "pkt_rate", "byte_rate"};
    static const char* ent[] = {"src_port", "dst_port", "dst_ip", "protocol", "tcp_flags"};
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (const char* b : base) names.push_back(std::string("mean_") + b);
    for (const char* b : base) names.push_back(std::string("std_") + b);
    for (const char* e : ent) names.push_back(std::string("entropy_") + e);
    for (uint16_t p : tracked_ports) names.push_back("sp_prop_" + std::to_string(p));
    for (uint16_t p : tracked_ports) names.push_back("dp_prop_" + std::to_string(p));
    return names;
}

int64_t assign_window_index(double end_time, int window_seconds) {
    return static_cast<int64_t>(std::floor(end_time / window_seconds));
}

WindowKey assign_window(const FlowRecord& flow, const FeatureSchema& schema) {
    return {flow.src_ip, assign_window_index(flow.end_time, schema.window_seconds)};
}

double shannon_entropy(std::span<const uint64_t> counts) {
    uint64_t total = 0;
    for (uint64_t c : counts) total += c;
    if (total == 0) {
        throw DataError("shannon_entropy: all counts are zero");
    }
    std::vector<double> terms;
    terms.reserve(counts.size());
    for (uint64_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        terms.push_back(-p * std::log2(p));
    }
    double h = stable_sum(terms);
    return h < 0.0 ? 0.0 : h;
}

ClassLabel majority_label(std::span<const ClassLabel> labels) {
    std::array<uint64_t, kClassCount> counts{};
    for (ClassLabel l : labels) counts[static_cast<size_t>(l)] += 1;

    ClassLabel best = ClassLabel::background;
    uint64_t best_count = 0;
    bool have = false;
    for (ClassLabel l : all_class_labels()) {
        const uint64_t c = counts[static_cast<size_t>(l)];
        if (c == 0) continue;
        if (!have || c > best_count) {
            best = l;
            best_count = c;
            have = true;
            continue;
        }
        if (c == best_count) {
            // tie: attack beats background, then lexicographic label order
            if (is_attack(l) && !is_attack(best)) {
                best = l;
            } else if (is_attack(l) == is_attack(best) && to_string(l) < to_string(best)) {
                best = l;
            }
        }
    }
    if (!have) throw DataError("majority_label: empty label sequence");
    return best;
}

AggregatedSample aggregate_window(std::span<const FlowRecord> flows,
                                  const FeatureSchema& schema) {
    schema.validate();
    const size_t n = flows.size();
    if (n <= static_cast<size_t>(schema.min_flows)) {
        throw DataError("aggregate_window: needs more than " + std::to_string(schema.min_flows) +
                        " flows, got " + std::to_string(n));
    }
    const WindowKey key = assign_window(flows.front(), schema);
    for (const FlowRecord& f : flows) {
        if (assign_window(f, schema) != key) {
            throw DataError("aggregate_window: flows span multiple window keys");
        }
    }

    AggregatedSample sample;
    sample.key = key;
    sample.flow_count = static_cast<uint32_t>(n);
    sample.features.assign(kFeatureCount, 0.0);

    // base quantities per flow
    std::array<std::vector<double>, kBaseStatCount> q;
    for (auto& v : q) v.reserve(n);
    for (const FlowRecord& f : flows) {
        const double dur = f.duration;
        const double rate_dur = std::max(dur, kMinRateDuration);
        q[0].push_back(dur);
        q[1].push_back(static_cast<double>(f.packets));
        q[2].push_back(static_cast<double>(f.bytes));
        q[3].push_back(static_cast<double>(f.packets) / rate_dur);
        q[4].push_back(static_cast<double>(f.bytes) / rate_dur);
    }
    for (size_t i = 0; i < kBaseStatCount; ++i) {
        std::vector<double> vals = q[i];
        const double mean = stable_sum(vals) / static_cast<double>(n);
        std::vector<double> sq;
        sq.reserve(n);
        for (double v : q[i]) {
            const double d = v - mean;
            sq.push_back(d * d);
        }
        const double var = stable_sum(sq) / static_cast<double>(n);
        sample.features[i] = mean;
        sample.features[kBaseStatCount + i] = std::sqrt(std::max(var, 0.0));
    }

    // entropies over sorted category maps (order-free by construction)
    std::map<uint16_t, uint64_t> src_ports, dst_ports;
    std::map<std::string, uint64_t> dst_ips;
    std::map<uint8_t, uint64_t> protocols, flag_patterns;
    for (const FlowRecord& f : flows) {
        src_ports[f.src_port] += 1;
        dst_ports[f.dst_port] += 1;
        dst_ips[f.dst_ip] += 1;
        protocols[f.protocol.canonical_code()] += 1;
        flag_patterns[f.tcp_flags.bits] += 1;
    }
    auto entropy_of = [](const auto& m) {
        std::vector<uint64_t> counts;
        counts.reserve(m.size());
        for (const auto& [k, c] : m) counts.push_back(c);
        return shannon_entropy(counts);
    };
    sample.features[10] = entropy_of(src_ports);
    sample.features[11] = entropy_of(dst_ports);
    sample.features[12] = entropy_of(dst_ips);
    sample.features[13] = entropy_of(protocols);
    sample.features[14] = entropy_of(flag_patterns);

    // tracked-port proportions
    for (size_t i = 0; i < kTrackedPortCount; ++i) {
        const uint16_t port = schema.tracked_ports[i];
        auto s = src_ports.find(port);
        auto d = dst_ports.find(port);
        sample.features[15 + i] =
            s == src_ports.end() ? 0.0 : static_cast<double>(s->second) / static_cast<double>(n);
        sample.features[15 + kTrackedPortCount + i] =
            d == dst_ports.end() ? 0.0 : static_cast<double>(d->second) / static_cast<double>(n);
    }

    std::vector<ClassLabel> labels;
    labels.reserve(n);
    for (const FlowRecord& f : flows) labels.push_back(f.label);
    sample.label = majority_label(labels);
    return sample;
}

namespace {

ExtractResult extract_grouped(
    std::unordered_map<WindowKey, std::vector<FlowRecord>, WindowKeyHash>&& groups,
    const FeatureSchema& schema) {
    ExtractResult result;
    for (ClassLabel l : all_class_labels()) {
        result.visibility.per_class[l];  // materialize all classes
    }

    std::vector<const WindowKey*> keys;
    keys.reserve(groups.size());
    for (const auto& [key, flows] : groups) keys.push_back(&key);
    std::sort(keys.begin(), keys.end(),
              [](const WindowKey* a, const WindowKey* b) { return *a < *b; });

    for (const WindowKey* key : keys) {
        const std::vector<FlowRecord>& flows = groups.at(*key);
        for (const FlowRecord& f : flows) {
            result.visibility.per_class[f.label].total_flows += 1;
        }
        if (flows.size() <= static_cast<size_t>(schema.min_flows)) {
            for (const FlowRecord& f : flows) {
                result.visibility.per_class[f.label].omitted_flows += 1;
            }
            continue;
        }
        AggregatedSample sample = aggregate_window(flows, schema);
        for (const FlowRecord& f : flows) {
            if (f.label != sample.label) {
                result.visibility.per_class[f.label].outvoted_flows += 1;
            }
        }
        result.samples.push_back(std::move(sample));
    }
    return result;
}

}  // namespace

ExtractResult extract_dataset(std::span<const FlowRecord> flows, const FeatureSchema& schema) {
    schema.validate();
    std::unordered_map<WindowKey, std::vector<FlowRecord>, WindowKeyHash> groups;
    for (const FlowRecord& f : flows) {
        groups[assign_window(f, schema)].push_back(f);
    }
    return extract_grouped(std::move(groups), schema);
}

ExtractResult extract_file(const std::string& flow_path, const FeatureSchema& schema) {
    schema.validate();
    std::unordered_map<WindowKey, std::vector<FlowRecord>, WindowKeyHash> groups;
    stream_flows(flow_path, [&](const FlowRecord& f) {
        groups[assign_window(f, schema)].push_back(f);
    });
    return extract_grouped(std::move(groups), schema);
}

double VisibilityReport::omitted_fraction(ClassLabel label) const {
    auto it = per_class.find(label);
    if (it == per_class.end() || it->second.total_flows == 0) return 0.0;
    return static_cast<double>(it->second.omitted_flows) /
           static_cast<double>(it->second.total_flows);
}

double VisibilityReport::outvoted_fraction(ClassLabel label) const {
    auto it = per_class.find(label);
    if (it == per_class.end() || it->second.total_flows == 0) return 0.0;
    return static_cast<double>(it->second.outvoted_flows) /
           static_cast<double>(it->second.total_flows);
}

std::string VisibilityReport::to_json() const {
    nlohmann::json j;
    j["format"] = "visibility-report/1";
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [label, counts] : per_class) {
        nlohmann::json c;
        c["total_flows"] = counts.total_flows;
        c["omitted_flows"] = counts.omitted_flows;
        c["outvoted_flows"] = counts.outvoted_flows;
        c["omitted_fraction"] = omitted_fraction(label);
        c["outvoted_fraction"] = outvoted_fraction(label);
        classes[std::string(to_string(label))] = c;
    }
    j["classes"] = classes;
    return j.dump(2);
}

Normalizer::Normalizer(std::vector<double> mins, std::vector<double> maxs)
    : mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (mins_.size() != maxs_.size()) {
        throw DataError("Normalizer: mins/maxs size mismatch");
    }
    for (size_t i = 0; i < mins_.size(); ++i) {
        if (mins_[i] > maxs_[i]) {
            throw DataError("Normalizer: min greater than max at feature " + std::to_string(i));
        }
    }
}

Normalizer Normalizer::fit(std::span<const AggregatedSample> samples) {
    if (samples.empty()) {
        throw DataError("Normalizer::fit: empty training set");
    }
    Normalizer n;
    n.mins_.assign(kFeatureCount, std::numeric_limits<double>::infinity());
    n.maxs_.assign(kFeatureCount, -std::numeric_limits<double>::infinity());
    for (const AggregatedSample& s : samples) {
        if (s.features.size() != kFeatureCount) {
            throw DataError("Normalizer::fit: sample has wrong feature count");
        }
        for (size_t i = 0; i < kFeatureCount; ++i) {
            n.mins_[i] = std::min(n.mins_[i], s.features[i]);
            n.maxs_[i] = std::max(n.maxs_[i], s.features[i]);
        }
    }
    return n;
}

std::vector<double> Normalizer::apply(std::span<const double> features) const {
    if (features.size() != mins_.size()) {
        throw DataError("Normalizer::apply: dimension mismatch");
    }
    std::vector<double> out(features.size());
    for (size_t i = 0; i < features.size(); ++i) {
        const double range = maxs_[i] - mins_[i];
        if (range <= 0.0) {
            out[i] = 0.0;
        } else {
            out[i] = std::clamp((features[i] - mins_[i]) / range, 0.0, 1.0);
        }
    }
    return out;
}

void write_samples_csv(const std::string& path, std::span<const AggregatedSample> samples,
                       const FeatureSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write samples file '" + path + "'");
    const auto names = schema.feature_names();
    for (const auto& name : names) out << name << ',';
    out << "label,flow_count,src_ip,window_index\n";
    for (const AggregatedSample& s : samples) {
        for (double f : s.features) {
            out << format_double(f) << ',';
        }
        out << to_string(s.label) << ',' << s.flow_count << ',' << s.key.src_ip << ','
            << s.key.window_index << '\n';
    }
}

std::vector<AggregatedSample> read_samples_csv(const std::string& path,
                                               const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open samples file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("samples file '" + path + "' is empty (header required)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::string expected_header;
    for (const auto& name : schema.feature_names()) {
        expected_header += name;
        expected_header += ',';
    }
    expected_header += "label,flow_count,src_ip,window_index";
    if (line != expected_header) {
        throw DataError("samples file '" + path + "' header does not match the active schema");
    }

    std::vector<AggregatedSample> samples;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        cols.reserve(kFeatureCount + 4);
        size_t start = 0;
        std::string_view sv = line;
        for (size_t i = 0; i <= sv.size(); ++i) {
            if (i == sv.size() || sv[i] == ',') {
                cols.push_back(sv.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cols.size() != kFeatureCount + 4) {
            throw ParseError("samples file line " + std::to_string(line_no) +
                             ": wrong column count");
        }
        AggregatedSample s;
        s.features.resize(kFeatureCount);
        for (size_t i = 0; i < kFeatureCount; ++i) {
            s.features[i] = parse_double(cols[i], "feature");
        }
        auto label = class_label_from(cols[kFeatureCount]);
        if (!label) {
            throw ParseError("samples file line " + std::to_string(line_no) +
                             ": unknown label '" + std::string(cols[kFeatureCount]) + "'");
        }
        s.label = *label;
        s.flow_count =
            static_cast<uint32_t>(parse_double(cols[kFeatureCount + 1], "flow_count"));
        s.key.src_ip = std::string(cols[kFeatureCount + 2]);
        s.key.window_index =
            static_cast<int64_t>(parse_double(cols[kFeatureCount + 3], "window_index"));
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace nids
