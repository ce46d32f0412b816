#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nids/flow.hpp"

namespace nids {

inline constexpr size_t kFeatureCount = 69;
inline constexpr size_t kBaseStatCount = 5;     // duration, packets, bytes, pkt rate, byte rate
inline constexpr size_t kEntropyCount = 5;      // src_port, dst_port, dst_ip, protocol, tcp_flags
inline constexpr size_t kTrackedPortCount = 27; // x2 (src/dst proportions) = 54

// Aggregation parameters. tracked_ports is configurable but must keep its
// size so the vector stays 69-wide (2*5 + 5 + 2*27).
struct FeatureSchema {
    int window_seconds = 180;
    int min_flows = 10;  // keep windows with flow_count strictly greater
    std::vector<uint16_t> tracked_ports;

    static FeatureSchema defaults();
    static FeatureSchema load(const std::string& path);
    void save(const std::string& path) const;

    void validate() const;
    std::string fingerprint() const;
    std::vector<std::string> feature_names() const;
};

struct WindowKey {
    std::string src_ip;
    int64_t window_index = 0;

    bool operator==(const WindowKey&) const = default;
    auto operator<=>(const WindowKey& o) const {
        if (auto c = window_index <=> o.window_index; c != 0) return c;
        return src_ip <=> o.src_ip;
    }
};

struct AggregatedSample {
    WindowKey key;
    std::vector<double> features;  // exactly kFeatureCount entries
    ClassLabel label = ClassLabel::background;
    uint32_t flow_count = 0;
};

struct VisibilityClassCounts {
    uint64_t total_flows = 0;
    uint64_t omitted_flows = 0;   // lost to the minimum-flow filter
    uint64_t outvoted_flows = 0;  // label lost the window vote
};

struct VisibilityReport {
    std::map<ClassLabel, VisibilityClassCounts> per_class;

    double omitted_fraction(ClassLabel label) const;
    double outvoted_fraction(ClassLabel label) const;
    std::string to_json() const;
};

struct ExtractResult {
    std::vector<AggregatedSample> samples;  // sorted by (window_index, src_ip)
    VisibilityReport visibility;
};

int64_t assign_window_index(double end_time, int window_seconds = 180);
WindowKey assign_window(const FlowRecord& flow, const FeatureSchema& schema);

// H = -sum p*log2(p); counts must contain at least one positive entry.
double shannon_entropy(std::span<const uint64_t> counts);

// Strict majority when one exists, otherwise most frequent with ties broken
// attack-over-background then lexicographically.
ClassLabel majority_label(std::span<const ClassLabel> labels);

// Requires flows.size() > schema.min_flows and a single shared window key.
// Reductions are order-free: permuting flows yields an identical sample.
AggregatedSample aggregate_window(std::span<const FlowRecord> flows, const FeatureSchema& schema);

ExtractResult extract_dataset(std::span<const FlowRecord> flows, const FeatureSchema& schema);
ExtractResult extract_file(const std::string& flow_path, const FeatureSchema& schema);

// Per-feature min-max scaling fitted on the training split, clamped on apply.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> mins, std::vector<double> maxs);

    static Normalizer fit(std::span<const AggregatedSample> samples);

    std::vector<double> apply(std::span<const double> features) const;

    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }

    bool operator==(const Normalizer&) const = default;

private:
    std::vector<double> mins_;
    std::vector<double> maxs_;
};

// Sample CSV: 69 feature columns + label + flow_count + src_ip + window_index,
// header mandatory and checked against the schema's feature names.
void write_samples_csv(const std::string& path, std::span<const AggregatedSample> samples,
                       const FeatureSchema& schema);
std::vector<AggregatedSample> read_samples_csv(const std::string& path,
                                               const FeatureSchema& schema);

}  // namespace nids
