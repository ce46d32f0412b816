#include "nids/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "nids/errors.hpp"
#include "nids/rng.hpp"
#include "testutil.hpp"

using namespace nids;

namespace {

FlowRecord flow(double end_time, double duration, std::string src, std::string dst,
                uint16_t sp, uint16_t dp, uint64_t packets, uint64_t bytes,
                ClassLabel label = ClassLabel::background, uint8_t flags = TcpFlags::SYN) {
    FlowRecord f;
    f.end_time = end_time;
    f.duration = duration;
    f.src_ip = std::move(src);
    f.dst_ip = std::move(dst);
    f.src_port = sp;
    f.dst_port = dp;
    f.protocol = Protocol::tcp();
    f.tcp_flags = TcpFlags{flags};
    f.packets = packets;
    f.bytes = bytes;
    f.label = label;
    return f;
}

// independent oracle: direct -sum p log2 p
double entropy_oracle(const std::vector<uint64_t>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double h = 0.0;
    for (uint64_t c : counts) {
        if (c == 0) continue;
        const double p = c / total;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

TEST_CASE("window assignment buckets by 180 s of end_time") {
    CHECK(assign_window_index(0.0) == 0);
    CHECK(assign_window_index(179.999) == 0);
    CHECK(assign_window_index(180.0) == 1);
    CHECK(assign_window_index(359.999) == 1);
}

TEST_CASE("shannon entropy matches the direct formula") {
    const std::vector<uint64_t> single{7};
    CHECK(shannon_entropy(single) == 0.0);

    const std::vector<uint64_t> uniform{1, 1, 1, 1};
    CHECK(shannon_entropy(uniform) == doctest::Approx(2.0).epsilon(1e-12));

    const std::vector<uint64_t> skewed{3, 1};
    CHECK(shannon_entropy(skewed) == doctest::Approx(0.811278).epsilon(1e-6));
    CHECK(shannon_entropy(skewed) == doctest::Approx(entropy_oracle(skewed)).epsilon(1e-12));

    const std::vector<uint64_t> zeros{0, 0};
    CHECK_THROWS_AS(shannon_entropy(zeros), DataError);
}

TEST_CASE("majority label follows the vote and tie-break rules") {
    using L = ClassLabel;
    std::vector<L> v1{L::background, L::background, L::dos};
    CHECK(majority_label(v1) == L::background);
    std::vector<L> v2(7, L::dos);
    v2.insert(v2.end(), 3, L::background);
    CHECK(majority_label(v2) == L::dos);
    std::vector<L> v3{L::background, L::dos};
    CHECK(majority_label(v3) == L::dos);  // attack wins ties
    std::vector<L> v4{L::scan11, L::dos};
    CHECK(majority_label(v4) == L::dos);  // then lexicographic
    std::vector<L> v5{L::scan44, L::scan11, L::scan11, L::scan44};
    CHECK(majority_label(v5) == L::scan11);
}

TEST_CASE("aggregate_window on a degenerate window") {
    const FeatureSchema schema = FeatureSchema::defaults();
    std::vector<FlowRecord> flows;
    for (int i = 0; i < 11; ++i) {
        flows.push_back(flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100));
    }
    AggregatedSample s = aggregate_window(flows, schema);
    CHECK(s.flow_count == 11);
    CHECK(s.features.size() == kFeatureCount);
    for (size_t i = 5; i < 10; ++i) CHECK(s.features[i] == 0.0);     // stds
    for (size_t i = 10; i < 15; ++i) CHECK(s.features[i] == 0.0);    // entropies
    const size_t dp80 = 15 + kTrackedPortCount + 11;                 // port 80 is index 11
    CHECK(schema.tracked_ports[11] == 80);
    CHECK(s.features[dp80] == 1.0);
    CHECK(s.features[0] == 1.0);   // mean duration
    CHECK(s.features[1] == 2.0);   // mean packets
    CHECK(s.features[2] == 100.0); // mean bytes
    CHECK(s.features[3] == 2.0);   // packet rate
    CHECK(s.features[4] == 100.0); // byte rate
}

TEST_CASE("aggregate_window two-way port split") {
    const FeatureSchema schema = FeatureSchema::defaults();
    std::vector<FlowRecord> flows;
    for (int i = 0; i < 12; ++i) {
        flows.push_back(
            flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, i < 6 ? 80 : 443, 2, 100));
    }
    AggregatedSample s = aggregate_window(flows, schema);
    CHECK(s.features[11] == doctest::Approx(1.0).epsilon(1e-12));  // dst-port entropy
    const size_t dp_base = 15 + kTrackedPortCount;
    CHECK(s.features[dp_base + 11] == doctest::Approx(0.5));  // port 80
    CHECK(s.features[dp_base + 24] == doctest::Approx(0.5));  // port 443
    CHECK(schema.tracked_ports[24] == 443);
}

TEST_CASE("aggregate_window mean and population std") {
    const FeatureSchema schema = FeatureSchema::defaults();
    std::vector<FlowRecord> flows;
    for (int i = 1; i <= 20; ++i) {
        flows.push_back(flow(10.0, static_cast<double>(i), "10.0.0.1", "10.0.0.9", 1234, 80,
                             1, 10));
    }
    AggregatedSample s = aggregate_window(flows, schema);
    // oracle: direct arithmetic over 1..20
    double mean = 0.0;
    for (int i = 1; i <= 20; ++i) mean += i;
    mean /= 20.0;
    double var = 0.0;
    for (int i = 1; i <= 20; ++i) var += (i - mean) * (i - mean);
    var /= 20.0;
    CHECK(mean == 10.5);
    CHECK(s.features[0] == doctest::Approx(10.5).epsilon(1e-12));
    CHECK(s.features[5] == doctest::Approx(5.766281).epsilon(1e-6));
    CHECK(s.features[5] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("aggregate_window rejects undersized windows and mixed keys") {
    const FeatureSchema schema = FeatureSchema::defaults();
    std::vector<FlowRecord> flows;
    for (int i = 0; i < 10; ++i) {
        flows.push_back(flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100));
    }
    CHECK_THROWS_AS(aggregate_window(flows, schema), DataError);
    flows.push_back(flow(400.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100));
    flows.push_back(flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100));
    CHECK_THROWS_AS(aggregate_window(flows, schema), DataError);
}

TEST_CASE("rates clamp zero durations at one millisecond") {
    const FeatureSchema schema = FeatureSchema::defaults();
    std::vector<FlowRecord> flows;
    for (int i = 0; i < 11; ++i) {
        flows.push_back(flow(10.0, 0.0, "10.0.0.1", "10.0.0.9", 1234, 80, 1, 40));
    }
    AggregatedSample s = aggregate_window(flows, schema);
    CHECK(s.features[3] == doctest::Approx(1000.0));   // packets per second
    CHECK(s.features[4] == doctest::Approx(40000.0));  // bytes per second
}

TEST_CASE("extract_dataset applies the minimum-flow filter strictly") {
    const FeatureSchema schema = FeatureSchema::defaults();

    SUBCASE("exactly min_flows flows are omitted entirely") {
        std::vector<FlowRecord> flows;
        for (int i = 0; i < 10; ++i) {
            flows.push_back(flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100,
                                 ClassLabel::dos));
        }
        ExtractResult r = extract_dataset(flows, schema);
        CHECK(r.samples.empty());
        CHECK(r.visibility.omitted_fraction(ClassLabel::dos) == 1.0);
    }

    SUBCASE("outvoted flows are reported") {
        std::vector<FlowRecord> flows;
        for (int i = 0; i < 11; ++i) {
            flows.push_back(flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100));
        }
        flows.push_back(
            flow(10.0, 1.0, "10.0.0.1", "10.0.0.9", 1234, 80, 2, 100, ClassLabel::dos));
        ExtractResult r = extract_dataset(flows, schema);
        REQUIRE(r.samples.size() == 1);
        CHECK(r.samples[0].label == ClassLabel::background);
        CHECK(r.visibility.outvoted_fraction(ClassLabel::dos) == 1.0);
        CHECK(r.visibility.outvoted_fraction(ClassLabel::background) == 0.0);
    }

    SUBCASE("empty input") {
        ExtractResult r = extract_dataset(std::vector<FlowRecord>{}, schema);
        CHECK(r.samples.empty());
        for (const auto& [label, counts] : r.visibility.per_class) {
            CHECK(counts.total_flows == 0);
            CHECK(counts.omitted_flows == 0);
            CHECK(counts.outvoted_flows == 0);
        }
    }
}

TEST_CASE("extract_dataset sorts samples and accounts for every flow") {
    const FeatureSchema schema = FeatureSchema::defaults();
    Rng rng(23);
    std::vector<FlowRecord> flows;
    const std::vector<std::string> sources = {"10.0.0.3", "10.0.0.1", "10.0.0.2"};
    for (const auto& src : sources) {
        for (int w = 0; w < 3; ++w) {
            const int n = 5 + static_cast<int>(rng.below(20));
            for (int i = 0; i < n; ++i) {
                flows.push_back(flow(w * 180.0 + rng.uniform() * 179.0, 1.0, src, "10.9.9.9",
                                     static_cast<uint16_t>(rng.below(65536)), 80, 2, 100,
                                     rng.chance(0.2) ? ClassLabel::dos
                                                     : ClassLabel::background));
            }
        }
    }
    rng.shuffle(flows);
    ExtractResult r = extract_dataset(flows, schema);

    CHECK(std::is_sorted(r.samples.begin(), r.samples.end(),
                         [](const AggregatedSample& a, const AggregatedSample& b) {
                             return a.key < b.key;
                         }));

    // accounting identity: omitted + kept = total, outvoted within kept
    std::map<ClassLabel, uint64_t> total_in;
    for (const auto& f : flows) total_in[f.label] += 1;
    uint64_t kept_flows = 0;
    for (const auto& s : r.samples) kept_flows += s.flow_count;
    uint64_t omitted = 0, total = 0;
    for (const auto& [label, counts] : r.visibility.per_class) {
        CHECK(counts.total_flows == total_in[label]);
        CHECK(counts.omitted_flows + counts.outvoted_flows <= counts.total_flows);
        omitted += counts.omitted_flows;
        total += counts.total_flows;
    }
    CHECK(kept_flows + omitted == total);
}

TEST_CASE("aggregation is invariant to flow order within a window") {
    const FeatureSchema schema = FeatureSchema::defaults();
    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<FlowRecord> flows;
        const int n = 11 + static_cast<int>(rng.below(60));
        for (int i = 0; i < n; ++i) {
            flows.push_back(flow(rng.uniform() * 179.9, rng.uniform() * 30.0, "10.0.0.1",
                                 "10.9.9." + std::to_string(rng.below(5)),
                                 static_cast<uint16_t>(rng.below(65536)),
                                 static_cast<uint16_t>(rng.below(1024)),
                                 1 + rng.below(50), 40 + rng.below(100000),
                                 rng.chance(0.3) ? ClassLabel::scan11
                                                 : ClassLabel::background));
        }
        AggregatedSample a = aggregate_window(flows, schema);
        rng.shuffle(flows);
        AggregatedSample b = aggregate_window(flows, schema);
        CHECK(a.features == b.features);  // exact equality, not approximate
        CHECK(a.label == b.label);
    }
}

TEST_CASE("normalizer clamps and degenerates to zero") {
    AggregatedSample lo, hi;
    lo.features.assign(kFeatureCount, 2.0);
    hi.features.assign(kFeatureCount, 6.0);

    SUBCASE("single sample maps to zero") {
        std::vector<AggregatedSample> train{lo};
        Normalizer n = Normalizer::fit(train);
        auto out = n.apply(lo.features);
        for (double v : out) CHECK(v == 0.0);
    }
    SUBCASE("midpoint and clamping") {
        std::vector<AggregatedSample> train{lo, hi};
        Normalizer n = Normalizer::fit(train);
        std::vector<double> mid(kFeatureCount, 4.0), big(kFeatureCount, 10.0),
            small(kFeatureCount, -3.0);
        CHECK(n.apply(mid)[0] == doctest::Approx(0.5));
        CHECK(n.apply(big)[0] == 1.0);
        CHECK(n.apply(small)[0] == 0.0);
    }
    SUBCASE("empty fit fails") {
        CHECK_THROWS_AS(Normalizer::fit(std::vector<AggregatedSample>{}),
                        DataError);
    }
}

TEST_CASE("samples csv round trip preserves values") {
    testutil::TempDir dir("samples");
    const FeatureSchema schema = FeatureSchema::defaults();
    Rng rng(41);
    std::vector<AggregatedSample> samples;
    for (int i = 0; i < 20; ++i) {
        AggregatedSample s;
        s.key = {"10.0.0." + std::to_string(i % 5), static_cast<int64_t>(i)};
        s.features.resize(kFeatureCount);
        for (auto& f : s.features) f = rng.uniform() * 1e6 - 1e3;
        s.label = i % 3 == 0 ? ClassLabel::dos : ClassLabel::background;
        s.flow_count = 11 + static_cast<uint32_t>(rng.below(100));
        samples.push_back(std::move(s));
    }
    const std::string path = dir.file("samples.csv");
    write_samples_csv(path, samples, schema);
    auto loaded = read_samples_csv(path, schema);
    REQUIRE(loaded.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].features == samples[i].features);  // exact via to_chars round trip
        CHECK(loaded[i].label == samples[i].label);
        CHECK(loaded[i].flow_count == samples[i].flow_count);
        CHECK(loaded[i].key == samples[i].key);
    }

    SUBCASE("header mismatch is rejected") {
        FeatureSchema other = schema;
        other.tracked_ports[0] = 9999;
        CHECK_THROWS_AS(read_samples_csv(path, other), DataError);
    }
}

TEST_CASE("schema fingerprint tracks content") {
    FeatureSchema a = FeatureSchema::defaults();
    FeatureSchema b = a;
    CHECK(a.fingerprint() == b.fingerprint());
    b.min_flows = 5;
    CHECK(a.fingerprint() != b.fingerprint());
    FeatureSchema c = a;
    c.tracked_ports[3] = 8080;
    CHECK(a.fingerprint() != c.fingerprint());
    CHECK(a.feature_names().size() == kFeatureCount);
}

TEST_CASE("schema validation rejects bad port lists") {
    FeatureSchema s = FeatureSchema::defaults();
    s.tracked_ports.pop_back();
    CHECK_THROWS_AS(s.validate(), DataError);
    s = FeatureSchema::defaults();
    s.tracked_ports[1] = s.tracked_ports[0];
    CHECK_THROWS_AS(s.validate(), DataError);
}
