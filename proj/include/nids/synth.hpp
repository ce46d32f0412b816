#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nids/flow.hpp"

namespace nids {

// Desk-scale generator: background service traffic plus attack archetypes
// (SYN flood on port 80, one-to-one and four-to-four port scans, periodic
// C2-style bot traffic, bursty mail spam). Train and test splits use disjoint
// address pools. Counts are windows; a scan44 window yields four samples
// (one per attacking source).
struct GenConfig {
    double duration_seconds = 10800.0;  // 60 windows of 180 s per split
    int background_sources = 100;
    std::map<ClassLabel, int> train_attack_windows = {
        {ClassLabel::dos, 30},          {ClassLabel::scan11, 25},
        {ClassLabel::scan44, 7},        {ClassLabel::nerisbotnet, 40},
        {ClassLabel::anomaly_spam, 40},
    };
    std::map<ClassLabel, int> test_attack_windows = {
        {ClassLabel::dos, 35},          {ClassLabel::scan11, 30},
        {ClassLabel::scan44, 9},        {ClassLabel::nerisbotnet, 45},
        {ClassLabel::anomaly_spam, 50},
    };
    uint64_t seed = 42;
    std::string train_path = "train_flows.csv";
    std::string test_path = "test_flows.csv";
    std::string manifest_path = "gen_manifest.json";
};

struct SplitManifest {
    std::string path;
    uint64_t total_flows = 0;
    std::map<ClassLabel, uint64_t> flows_per_class;
    std::map<ClassLabel, uint64_t> intended_samples;  // windows requested per class
};

struct GenManifest {
    uint64_t seed = 0;
    SplitManifest train;
    SplitManifest test;

    std::string to_json(const GenConfig& config) const;
};

GenManifest generate(const GenConfig& config);

void write_flows_csv(const std::string& path, const std::vector<FlowRecord>& flows);

}  // namespace nids
