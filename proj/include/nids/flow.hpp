#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nids {

// Closed label set of the flow corpus. background is index 0 so that binary
// tie-breaks ("lowest class index") resolve to the benign class.
enum class ClassLabel : uint8_t {
    background = 0,
    blacklist,
    nerisbotnet,
    anomaly_spam,
    dos,
    scan11,
    scan44,
    anomaly_udpscan,
    anomaly_sshscan,
};

inline constexpr size_t kClassCount = 9;

inline constexpr std::array<ClassLabel, kClassCount> all_class_labels() {
    return {ClassLabel::background,      ClassLabel::blacklist,
            ClassLabel::nerisbotnet,     ClassLabel::anomaly_spam,
            ClassLabel::dos,             ClassLabel::scan11,
            ClassLabel::scan44,          ClassLabel::anomaly_udpscan,
            ClassLabel::anomaly_sshscan};
}

std::string_view to_string(ClassLabel label);
std::optional<ClassLabel> class_label_from(std::string_view name);

inline bool is_attack(ClassLabel label) { return label != ClassLabel::background; }

// TCP flag bits laid out as in the TCP header; textual form is the
// six-character UAPRSF mask ("....S." = SYN only).
struct TcpFlags {
    static constexpr uint8_t FIN = 0x01;
    static constexpr uint8_t SYN = 0x02;
    static constexpr uint8_t RST = 0x04;
    static constexpr uint8_t PSH = 0x08;
    static constexpr uint8_t ACK = 0x10;
    static constexpr uint8_t URG = 0x20;

    uint8_t bits = 0;

    bool has(uint8_t flag) const { return (bits & flag) != 0; }
    bool none() const { return bits == 0; }

    std::string str() const;
    static std::optional<TcpFlags> parse(std::string_view text);

    bool operator==(const TcpFlags&) const = default;
};

struct Protocol {
    enum class Kind : uint8_t { tcp, udp, icmp, other };

    Kind kind = Kind::other;
    uint8_t code = 0;  // raw IP protocol number, used only for Kind::other

    static Protocol tcp() { return {Kind::tcp, 6}; }
    static Protocol udp() { return {Kind::udp, 17}; }
    static Protocol icmp() { return {Kind::icmp, 1}; }
    static Protocol other(uint8_t c);

    uint8_t canonical_code() const;
    std::string str() const;
    static std::optional<Protocol> parse(std::string_view text);

    bool operator==(const Protocol&) const = default;
};

// One unidirectional flow record. Immutable by convention once parsed;
// addresses are stored as opaque tokens (anonymized corpora use letters in
// the host octet, so no structural IP validation is imposed).
struct FlowRecord {
    double end_time = 0.0;  // epoch seconds, fractional part allowed
    double duration = 0.0;  // seconds
    std::string src_ip;
    std::string dst_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Protocol protocol;
    TcpFlags tcp_flags;
    int fwd_status = 0;
    int tos = 0;
    uint64_t packets = 1;
    uint64_t bytes = 1;
    ClassLabel label = ClassLabel::background;

    bool operator==(const FlowRecord&) const = default;
};

// "YYYY-MM-DD hh:mm:ss(.fff)" <-> epoch seconds. Naive timestamps map through
// a fixed civil calendar (no timezone state), so parsing is deterministic.
double parse_timestamp(std::string_view text);
std::string format_timestamp(double epoch_seconds);

// One CSV line in the 13-column layout
// te,td,sa,da,sp,dp,pr,flg,fwd,stos,ipkt,ibyt,label.
// line_no is only used to tag error messages (0 = unknown).
FlowRecord parse_flow_line(std::string_view line, size_t line_no = 0);
std::string format_flow(const FlowRecord& flow);

// Streams records from a plain or gzip-compressed flow CSV (compression
// detected from magic bytes). Constant memory in file size.
class FlowReader {
public:
    explicit FlowReader(const std::string& path);
    ~FlowReader();

    FlowReader(const FlowReader&) = delete;
    FlowReader& operator=(const FlowReader&) = delete;
    FlowReader(FlowReader&&) noexcept;
    FlowReader& operator=(FlowReader&&) noexcept;

    // next record in file order, nullopt at end of file
    std::optional<FlowRecord> next();

    size_t line_number() const { return line_no_; }

private:
    bool read_line(std::string& out);

    void* file_ = nullptr;  // gzFile
    size_t line_no_ = 0;
};

void stream_flows(const std::string& path, const std::function<void(const FlowRecord&)>& sink);
std::vector<FlowRecord> read_flows(const std::string& path);

}  // namespace nids
