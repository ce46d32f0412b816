#include "nids/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "nids/errors.hpp"
#include "nids/rng.hpp"

namespace nids {

namespace {

constexpr double kWindowSeconds = 180.0;
constexpr double kBaseEpoch = 1458345600.0;  // arbitrary fixed day start

double quantize_ms(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string ip(const std::string& prefix, int a, int b) {
    return prefix + "." + std::to_string(a) + "." + std::to_string(b);
}

uint16_t ephemeral_port(Rng& rng) {
    return static_cast<uint16_t>(1024 + rng.below(64512));
}

TcpFlags flags_of(uint8_t bits) { return TcpFlags{bits}; }

struct FlagMix {
    std::vector<std::pair<uint8_t, double>> options;

    uint8_t pick(Rng& rng) const {
        double roll = rng.uniform();
        for (const auto& [bits, w] : options) {
            if (roll < w) return bits;
            roll -= w;
        }
        return options.back().first;
    }
};

const FlagMix kTcpSessionFlags{{
    {TcpFlags::ACK | TcpFlags::PSH | TcpFlags::SYN | TcpFlags::FIN, 0.45},
    {TcpFlags::ACK, 0.25},
    {TcpFlags::ACK | TcpFlags::PSH, 0.15},
    {TcpFlags::ACK | TcpFlags::SYN, 0.06},
    {TcpFlags::ACK | TcpFlags::FIN, 0.05},
    {TcpFlags::SYN, 0.03},
    {TcpFlags::ACK | TcpFlags::RST, 0.01},
}};

struct PortMix {
    std::vector<std::pair<uint16_t, double>> options;  // port 0 = ephemeral

    uint16_t pick(Rng& rng) const {
        double roll = rng.uniform();
        for (const auto& [port, w] : options) {
            if (roll < w) return port == 0 ? ephemeral_port(rng) : port;
            roll -= w;
        }
        return ephemeral_port(rng);
    }
};

enum class Archetype { office, web, mail, dns, scatter, service };

struct BackgroundSource {
    std::string addr;
    Archetype type = Archetype::office;
    std::vector<std::string> peers;
    std::vector<uint16_t> service_ports;  // service archetype only
};

const PortMix kOfficePorts{{{80, 0.28},
                            {443, 0.28},
                            {53, 0.12},
                            {22, 0.04},
                            {25, 0.02},
                            {110, 0.02},
                            {123, 0.03},
                            {143, 0.02},
                            {389, 0.02},
                            {0, 0.17}}};
const PortMix kWebPorts{{{80, 0.42}, {443, 0.42}, {53, 0.08}, {0, 0.08}}};
const PortMix kMailPorts{{{25, 0.80},
                          {53, 0.05},
                          {80, 0.03},
                          {443, 0.03},
                          {110, 0.04},
                          {143, 0.03},
                          {0, 0.02}}};
const PortMix kDnsPorts{{{53, 0.90}, {123, 0.05}, {0, 0.05}}};
const PortMix kScatterPorts{{{0, 0.75}, {80, 0.10}, {443, 0.10}, {53, 0.05}}};

FlowRecord base_flow(double t, double duration, std::string src, std::string dst, uint16_t sp,
                     uint16_t dp, Protocol proto, uint8_t flag_bits, uint64_t packets,
                     uint64_t bytes, ClassLabel label) {
    FlowRecord f;
    f.end_time = quantize_ms(t);
    f.duration = quantize_ms(std::max(duration, 0.0));
    f.src_ip = std::move(src);
    f.dst_ip = std::move(dst);
    f.src_port = sp;
    f.dst_port = dp;
    f.protocol = proto;
    f.tcp_flags = proto.kind == Protocol::Kind::tcp ? flags_of(flag_bits) : TcpFlags{};
    f.packets = std::max<uint64_t>(packets, 1);
    f.bytes = std::max<uint64_t>(bytes, 1);
    f.label = label;
    return f;
}

class SplitGenerator {
public:
    SplitGenerator(const GenConfig& config, bool is_test, uint64_t seed)
        : config_(config), is_test_(is_test), rng_(seed) {
        windows_ = std::max(1, static_cast<int>(config.duration_seconds / kWindowSeconds));
        bg_prefix_ = is_test ? "10.2" : "10.1";
        atk_prefix_ = is_test ? "172.17" : "172.16";
    }

    std::vector<FlowRecord> run() {
        if (config_.background_sources < 1) {
            throw DataError("generate: background_sources must be >= 1");
        }
        make_background_sources();
        for (int w = 0; w < windows_; ++w) {
            for (auto& src : sources_) emit_background_window(src, w);
        }
        const auto& plan = is_test_ ? config_.test_attack_windows : config_.train_attack_windows;
        for (const auto& [label, count] : plan) {
            if (count < 0) throw DataError("generate: negative window count");
            for (int i = 0; i < count; ++i) emit_attack_window(label, i);
        }
        std::stable_sort(flows_.begin(), flows_.end(),
                         [](const FlowRecord& a, const FlowRecord& b) {
                             return a.end_time < b.end_time;
                         });
        return std::move(flows_);
    }

private:
    const GenConfig& config_;
    bool is_test_;
    Rng rng_;
    int windows_ = 0;
    std::string bg_prefix_;
    std::string atk_prefix_;
    std::vector<BackgroundSource> sources_;
    std::vector<FlowRecord> flows_;
    std::set<std::pair<int, int>> used_attack_slots_;  // (attacker id, window)

    double window_start(int w) const { return kBaseEpoch + w * kWindowSeconds; }

    double time_in_window(int w) { return window_start(w) + rng_.uniform() * kWindowSeconds; }

    void make_background_sources() {
        static const uint16_t kServicePorts[] = {3306, 5432, 6379, 8080,
                                                 8443, 9200, 11211, 27017};
        for (int i = 0; i < config_.background_sources; ++i) {
            BackgroundSource src;
            src.addr = ip(bg_prefix_, i / 250, i % 250 + 1);
            const double roll = rng_.uniform();
            if (roll < 0.42) {
                src.type = Archetype::office;
            } else if (roll < 0.58) {
                src.type = Archetype::web;
            } else if (roll < 0.72) {
                src.type = Archetype::mail;
            } else if (roll < 0.82) {
                src.type = Archetype::dns;
            } else if (roll < 0.90) {
                src.type = Archetype::scatter;
            } else {
                src.type = Archetype::service;
            }
            size_t peer_count = 8 + rng_.below(src.type == Archetype::scatter ? 50 : 28);
            if (src.type == Archetype::mail) peer_count = 12 + rng_.below(34);
            if (src.type == Archetype::service) peer_count = 2 + rng_.below(4);
            for (size_t p = 0; p < peer_count; ++p) {
                src.peers.push_back(ip("192.168", static_cast<int>(rng_.below(32)),
                                       static_cast<int>(1 + rng_.below(250))));
            }
            if (src.type == Archetype::service) {
                const size_t port_count = 1 + rng_.below(3);
                for (size_t p = 0; p < port_count; ++p) {
                    src.service_ports.push_back(kServicePorts[rng_.below(8)]);
                }
            }
            sources_.push_back(std::move(src));
        }
    }

    const PortMix& ports_for(Archetype type) const {
        switch (type) {
            case Archetype::office: return kOfficePorts;
            case Archetype::web: return kWebPorts;
            case Archetype::mail: return kMailPorts;
            case Archetype::dns: return kDnsPorts;
            case Archetype::scatter: return kScatterPorts;
            case Archetype::service: return kOfficePorts;  // unused, ports are per host
        }
        return kOfficePorts;
    }

    void emit_background_window(BackgroundSource& src, int w) {
        if (!rng_.chance(0.85)) return;
        int n;
        if (rng_.chance(0.05)) {
            n = 2 + static_cast<int>(rng_.below(7));  // below the min-flow filter
        } else {
            n = 12 + static_cast<int>(std::min(rng_.exponential(14.0), 55.0));
        }
        const PortMix& ports = ports_for(src.type);
        for (int i = 0; i < n; ++i) {
            const double t = time_in_window(w);
            Protocol proto = Protocol::tcp();
            double proto_roll = rng_.uniform();
            if (src.type == Archetype::dns) {
                proto = proto_roll < 0.88 ? Protocol::udp()
                                          : (proto_roll < 0.98 ? Protocol::tcp()
                                                               : Protocol::icmp());
            } else {
                if (proto_roll >= 0.98) {
                    proto = Protocol::icmp();
                } else if (proto_roll >= 0.82) {
                    proto = Protocol::udp();
                }
            }

            uint64_t packets;
            uint64_t bytes_per_pkt;
            double duration;
            switch (src.type) {
                case Archetype::dns:
                    packets = 1 + rng_.below(3);
                    bytes_per_pkt = 60 + rng_.below(240);
                    duration = rng_.uniform(0.001, 0.2);
                    break;
                case Archetype::scatter:
                    packets = 1 + rng_.below(8);
                    bytes_per_pkt = 50 + rng_.below(300);
                    duration = rng_.uniform(0.01, 1.0);
                    break;
                case Archetype::mail:
                    packets = 6 + rng_.below(19);
                    bytes_per_pkt = 200 + rng_.below(700);
                    duration = rng_.uniform(0.3, 4.0);
                    break;
                case Archetype::service:
                    packets = 5 + rng_.below(36);
                    bytes_per_pkt = 100 + rng_.below(600);
                    duration = rng_.uniform(0.5, 8.0);
                    proto = rng_.chance(0.97) ? Protocol::tcp() : Protocol::icmp();
                    break;
                default:
                    packets = 2 + static_cast<uint64_t>(
                                      std::min(rng_.lognormal(1.4, 0.9), 350.0));
                    bytes_per_pkt = 70 + static_cast<uint64_t>(
                                            std::min(rng_.lognormal(5.1, 0.7), 1390.0));
                    duration = std::min(rng_.lognormal(-0.7, 1.1), 60.0);
                    break;
            }

            uint16_t sp = ephemeral_port(rng_);
            uint16_t dp = src.type == Archetype::service
                              ? src.service_ports[rng_.below(src.service_ports.size())]
                              : ports.pick(rng_);
            if (rng_.chance(src.type == Archetype::service ? 0.05 : 0.10)) {
                std::swap(sp, dp);  // server-side direction
            }

            flows_.push_back(base_flow(
                t, duration, src.addr, rng_.pick(src.peers), sp, dp, proto,
                proto.kind == Protocol::Kind::tcp ? kTcpSessionFlags.pick(rng_) : 0, packets,
                packets * bytes_per_pkt, ClassLabel::background));
        }
    }

    // distinct (attacker index, window) slot per event keeps one sample per
    // requested attack window
    std::pair<int, int> reserve_slot(int attacker_space, int salt) {
        for (int tries = 0; tries < 10000; ++tries) {
            const int a = salt * 101 + static_cast<int>(rng_.below(attacker_space));
            const int w = static_cast<int>(rng_.below(windows_));
            if (used_attack_slots_.insert({a, w}).second) return {a, w};
        }
        throw DataError("generate: unable to place attack window (too many requested?)");
    }

    void emit_attack_window(ClassLabel label, int event_index) {
        switch (label) {
            case ClassLabel::dos: emit_dos(event_index); return;
            case ClassLabel::scan11: emit_scan11(event_index); return;
            case ClassLabel::scan44: emit_scan44(event_index); return;
            case ClassLabel::nerisbotnet: emit_botnet(event_index); return;
            case ClassLabel::anomaly_spam: emit_spam(event_index); return;
            default:
                throw DataError("generate: no traffic profile for class '" +
                                std::string(to_string(label)) + "'");
        }
    }

    void emit_dos(int event) {
        auto [a, w] = reserve_slot(40, 1);
        const std::string attacker = ip(atk_prefix_, 1, a % 250 + 1);
        const std::string victim = ip("198.18", event % 4, 1 + static_cast<int>(rng_.below(40)));
        const int n = 70 + static_cast<int>(rng_.below(80));
        for (int i = 0; i < n; ++i) {
            const uint64_t packets = 1 + rng_.below(3);
            flows_.push_back(base_flow(time_in_window(w), rng_.uniform(0.0, 0.03), attacker,
                                       victim, ephemeral_port(rng_), 80, Protocol::tcp(),
                                       TcpFlags::SYN, packets, packets * (40 + rng_.below(21)),
                                       ClassLabel::dos));
        }
    }

    void emit_scan11(int event) {
        auto [a, w] = reserve_slot(40, 2);
        const std::string attacker = ip(atk_prefix_, 2, a % 250 + 1);
        const std::string victim = ip("198.19", event % 4, 1 + static_cast<int>(rng_.below(40)));
        const int n = 45 + static_cast<int>(rng_.below(45));
        const uint16_t sp = ephemeral_port(rng_);
        auto ports = rng_.sample_indices(10200, static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            flows_.push_back(base_flow(time_in_window(w), 0.0, attacker, victim, sp,
                                       static_cast<uint16_t>(1 + ports[static_cast<size_t>(i)]),
                                       Protocol::tcp(), TcpFlags::SYN, 1, 40 + rng_.below(9),
                                       ClassLabel::scan11));
        }
    }

    void emit_scan44(int event) {
        auto [a, w] = reserve_slot(24, 3);
        std::vector<std::string> victims;
        for (int v = 0; v < 4; ++v) {
            victims.push_back(ip("198.20", event % 8, 1 + static_cast<int>(rng_.below(60))));
        }
        for (int atk = 0; atk < 4; ++atk) {
            const std::string attacker = ip(atk_prefix_, 3, (a * 4 + atk) % 250 + 1);
            const int n = 45 + static_cast<int>(rng_.below(45));
            const uint16_t sp = ephemeral_port(rng_);
            auto ports = rng_.sample_indices(10200, static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                flows_.push_back(base_flow(
                    time_in_window(w), 0.0, attacker, victims[static_cast<size_t>(i % 4)], sp,
                    static_cast<uint16_t>(1 + ports[static_cast<size_t>(i)]), Protocol::tcp(),
                    TcpFlags::SYN, 1, 40 + rng_.below(9), ClassLabel::scan44));
            }
        }
    }

    void emit_botnet(int event) {
        auto [a, w] = reserve_slot(40, 4);
        const std::string bot = ip(atk_prefix_, 4, a % 250 + 1);
        static const uint16_t kC2Ports[] = {6667, 4444, 8081, 1337, 3128, 9001};
        std::vector<std::string> c2;
        const size_t c2_count = 2 + rng_.below(3);
        for (size_t i = 0; i < c2_count; ++i) {
            c2.push_back(ip("203.0", 113, 1 + static_cast<int>(rng_.below(30))));
        }
        std::vector<uint16_t> c2_ports;
        const size_t port_count = 1 + rng_.below(3);
        for (size_t i = 0; i < port_count; ++i) {
            c2_ports.push_back(kC2Ports[(static_cast<size_t>(event) + i) % 6]);
        }
        const int n = 13 + static_cast<int>(rng_.below(16));
        const double period = rng_.uniform(5.0, 12.0);
        double t = window_start(w) + rng_.uniform(0.0, 5.0);
        for (int i = 0; i < n; ++i) {
            t += period + rng_.uniform(-1.0, 1.0);
            if (t >= window_start(w) + kWindowSeconds) {
                t = window_start(w) + rng_.uniform() * kWindowSeconds;
            }
            // beaconing: tight packet/byte profile, session-like otherwise
            const uint64_t packets = 6 + rng_.below(4);
            const FlagMix mix{{{TcpFlags::ACK | TcpFlags::PSH | TcpFlags::SYN | TcpFlags::FIN,
                                0.7},
                               {TcpFlags::ACK | TcpFlags::PSH, 0.3}}};
            flows_.push_back(base_flow(t, rng_.uniform(0.8, 3.2), bot, rng_.pick(c2),
                                       ephemeral_port(rng_), rng_.pick(c2_ports),
                                       Protocol::tcp(), mix.pick(rng_), packets,
                                       packets * (430 + rng_.below(60)),
                                       ClassLabel::nerisbotnet));
        }
    }

    void emit_spam(int event) {
        auto [a, w] = reserve_slot(40, 5);
        const std::string spammer = ip(atk_prefix_, 5, a % 250 + 1);
        const bool aggressive = rng_.chance(0.45);
        const int recipients = aggressive ? 70 + static_cast<int>(rng_.below(90))
                                          : 15 + static_cast<int>(rng_.below(26));
        std::vector<std::string> mx;
        for (int i = 0; i < recipients; ++i) {
            mx.push_back(ip("198.51", 100 - event % 2, 1 + static_cast<int>(rng_.below(200))));
        }
        const int n = aggressive ? 28 + static_cast<int>(rng_.below(30))
                                 : 15 + static_cast<int>(rng_.below(30));
        const uint16_t fixed_sp = ephemeral_port(rng_);
        for (int i = 0; i < n; ++i) {
            const uint64_t packets = 7 + rng_.below(9);
            const uint64_t bytes_per_pkt =
                aggressive ? 290 + rng_.below(21) : 260 + rng_.below(180);
            const FlagMix mix{{{TcpFlags::ACK | TcpFlags::PSH | TcpFlags::SYN | TcpFlags::FIN,
                                0.8},
                               {TcpFlags::ACK | TcpFlags::PSH, 0.2}}};
            flows_.push_back(base_flow(time_in_window(w), rng_.uniform(0.3, 2.1), spammer,
                                       rng_.pick(mx),
                                       aggressive ? fixed_sp : ephemeral_port(rng_), 25,
                                       Protocol::tcp(), mix.pick(rng_), packets,
                                       packets * bytes_per_pkt, ClassLabel::anomaly_spam));
        }
    }
};

SplitManifest summarize(const std::string& path, const std::vector<FlowRecord>& flows,
                        const std::map<ClassLabel, int>& plan) {
    SplitManifest m;
    m.path = path;
    m.total_flows = flows.size();
    for (const FlowRecord& f : flows) m.flows_per_class[f.label] += 1;
    m.intended_samples[ClassLabel::background] = 0;  // background windows are probabilistic
    for (const auto& [label, count] : plan) {
        const uint64_t per_window = label == ClassLabel::scan44 ? 4 : 1;
        m.intended_samples[label] = static_cast<uint64_t>(count) * per_window;
    }
    return m;
}

}  // namespace

void write_flows_csv(const std::string& path, const std::vector<FlowRecord>& flows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write flow file '" + path + "'");
    for (const FlowRecord& f : flows) {
        out << format_flow(f) << '\n';
    }
}

GenManifest generate(const GenConfig& config) {
    if (config.background_sources < 1) {
        throw DataError("generate: config requests zero background traffic");
    }
    const uint64_t gen_seed = derive_seed(config.seed, "gen");

    SplitGenerator train_gen(config, false, derive_seed(gen_seed, "train"));
    auto train_flows = train_gen.run();
    write_flows_csv(config.train_path, train_flows);

    SplitGenerator test_gen(config, true, derive_seed(gen_seed, "test"));
    auto test_flows = test_gen.run();
    write_flows_csv(config.test_path, test_flows);

    GenManifest manifest;
    manifest.seed = config.seed;
    manifest.train = summarize(config.train_path, train_flows, config.train_attack_windows);
    manifest.test = summarize(config.test_path, test_flows, config.test_attack_windows);
    return manifest;
}

std::string GenManifest::to_json(const GenConfig& config) const {
    nlohmann::json j;
    j["format"] = "gen-manifest/1";
    j["seed"] = seed;
    nlohmann::json cfg;
    cfg["duration_seconds"] = config.duration_seconds;
    cfg["background_sources"] = config.background_sources;
    auto windows_json = [](const std::map<ClassLabel, int>& plan) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [label, count] : plan) {
            out[std::string(to_string(label))] = count;
        }
        return out;
    };
    cfg["train_attack_windows"] = windows_json(config.train_attack_windows);
    cfg["test_attack_windows"] = windows_json(config.test_attack_windows);
    j["config"] = cfg;
    auto split_json = [](const SplitManifest& m) {
        nlohmann::json out;
        out["path"] = m.path;
        out["total_flows"] = m.total_flows;
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [label, count] : m.flows_per_class) {
            per[std::string(to_string(label))] = count;
        }
        out["flows_per_class"] = per;
        nlohmann::json intended = nlohmann::json::object();
        for (const auto& [label, count] : m.intended_samples) {
            intended[std::string(to_string(label))] = count;
        }
        out["intended_samples"] = intended;
        return out;
    };
    j["train"] = split_json(train);
    j["test"] = split_json(test);
    return j.dump(2);
}

}  // namespace nids
