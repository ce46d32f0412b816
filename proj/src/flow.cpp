#include "nids/flow.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "nids/errors.hpp"

namespace nids {

namespace {

constexpr std::array<std::string_view, kClassCount> kLabelNames = {
    "background",      "blacklist", "nerisbotnet", "anomaly-spam",   "dos",
    "scan11",          "scan44",    "anomaly-udpscan", "anomaly-sshscan"};

constexpr char kFlagLetters[6] = {'U', 'A', 'P', 'R', 'S', 'F'};
constexpr uint8_t kFlagBits[6] = {TcpFlags::URG, TcpFlags::ACK, TcpFlags::PSH,
                                  TcpFlags::RST, TcpFlags::SYN, TcpFlags::FIN};

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
        --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(size_t line_no, const std::string& what) {
    if (line_no > 0) {
        throw ParseError("line " + std::to_string(line_no) + ": " + what);
    }
    throw ParseError(what);
}

template <class T>
T parse_number(std::string_view field, size_t line_no, const char* name) {
    T value{};
    const char* b = field.data();
    const char* e = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(b, e, value);
    if (ec != std::errc() || ptr != e || field.empty()) {
        fail(line_no, std::string("unparsable ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

// Howard Hinnant's days-from-civil: days since 1970-01-01 for a proleptic
// Gregorian date.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::string_view to_string(ClassLabel label) {
    return kLabelNames[static_cast<size_t>(label)];
}

std::optional<ClassLabel> class_label_from(std::string_view name) {
    for (size_t i = 0; i < kClassCount; ++i) {
        if (kLabelNames[i] == name) return static_cast<ClassLabel>(i);
    }
    return std::nullopt;
}

std::string TcpFlags::str() const {
    std::string out(6, '.');
    for (int i = 0; i < 6; ++i) {
        if (bits & kFlagBits[i]) out[i] = kFlagLetters[i];
    }
    return out;
}

std::optional<TcpFlags> TcpFlags::parse(std::string_view text) {
    if (text.size() != 6) return std::nullopt;
    TcpFlags f;
    for (int i = 0; i < 6; ++i) {
        if (text[i] == kFlagLetters[i]) {
            f.bits |= kFlagBits[i];
        } else if (text[i] != '.') {
            return std::nullopt;
        }
    }
    return f;
}

Protocol Protocol::other(uint8_t c) {
    switch (c) {
        case 6: return tcp();
        case 17: return udp();
        case 1: return icmp();
        default: return {Kind::other, c};
    }
}

uint8_t Protocol::canonical_code() const {
    switch (kind) {
        case Kind::tcp: return 6;
        case Kind::udp: return 17;
        case Kind::icmp: return 1;
        case Kind::other: return code;
    }
    return code;
}

std::string Protocol::str() const {
    switch (kind) {
        case Kind::tcp: return "TCP";
        case Kind::udp: return "UDP";
        case Kind::icmp: return "ICMP";
        case Kind::other: return std::to_string(code);
    }
    return std::to_string(code);
}

std::optional<Protocol> Protocol::parse(std::string_view text) {
    if (text == "TCP") return tcp();
    if (text == "UDP") return udp();
    if (text == "ICMP") return icmp();
    unsigned code = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), code);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || code > 255) {
        return std::nullopt;
    }
    return other(static_cast<uint8_t>(code));
}

double parse_timestamp(std::string_view text) {
    // YYYY-MM-DD hh:mm:ss with optional .fraction
    auto bad = [&]() -> double {
        throw ParseError("unparsable timestamp '" + std::string(text) + "'");
    };
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' || text[10] != ' ' ||
        text[13] != ':' || text[16] != ':') {
        bad();
    }
    auto num = [&](size_t off, size_t len) -> int {
        int v = 0;
        auto field = text.substr(off, len);
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) bad();
        return v;
    };
    const int year = num(0, 4);
    const int month = num(5, 2);
    const int day = num(8, 2);
    const int hour = num(11, 2);
    const int minute = num(14, 2);
    const int second = num(17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60) {
        bad();
    }
    double frac = 0.0;
    if (text.size() > 19) {
        if (text[19] != '.' || text.size() == 20 || text.size() > 29) bad();
        double scale = 0.1;
        for (size_t i = 20; i < text.size(); ++i) {
            if (text[i] < '0' || text[i] > '9') bad();
            frac += (text[i] - '0') * scale;
            scale *= 0.1;
        }
    }
    const int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                         static_cast<unsigned>(day));
    return static_cast<double>(days * 86400 + hour * 3600 + minute * 60 + second) + frac;
}

std::string format_timestamp(double epoch_seconds) {
    int64_t whole = static_cast<int64_t>(std::floor(epoch_seconds));
    int ms = static_cast<int>(std::llround((epoch_seconds - static_cast<double>(whole)) * 1000.0));
    if (ms >= 1000) {
        whole += 1;
        ms -= 1000;
    }
    int64_t days = whole / 86400;
    int64_t rem = whole % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    const int hour = static_cast<int>(rem / 3600);
    const int minute = static_cast<int>((rem % 3600) / 60);
    const int second = static_cast<int>(rem % 60);
    char buf[40];
    if (ms != 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d.%03d", year, month, day,
                      hour, minute, second, ms);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", year, month, day, hour,
                      minute, second);
    }
    return buf;
}

FlowRecord parse_flow_line(std::string_view line, size_t line_no) {
    std::array<std::string_view, 13> cols;
    size_t ncols = 0;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            if (ncols >= cols.size()) {
                fail(line_no, "wrong column count (more than 13)");
            }
            cols[ncols++] = trim(line.substr(start, i - start));
            start = i + 1;
        }
    }
    if (ncols != 13) {
        fail(line_no, "wrong column count (" + std::to_string(ncols) + ", expected 13)");
    }

    FlowRecord flow;
    try {
        flow.end_time = parse_timestamp(cols[0]);
    } catch (const ParseError& e) {
        fail(line_no, e.what());
    }
    flow.duration = parse_number<double>(cols[1], line_no, "duration");
    if (!(flow.duration >= 0.0) || !std::isfinite(flow.duration)) {
        fail(line_no, "negative or non-finite duration");
    }
    if (cols[2].empty() || cols[3].empty()) {
        fail(line_no, "empty address field");
    }
    flow.src_ip = std::string(cols[2]);
    flow.dst_ip = std::string(cols[3]);
    flow.src_port = parse_number<uint16_t>(cols[4], line_no, "src_port");
    flow.dst_port = parse_number<uint16_t>(cols[5], line_no, "dst_port");
    auto proto = Protocol::parse(cols[6]);
    if (!proto) {
        fail(line_no, "unknown protocol '" + std::string(cols[6]) + "'");
    }
    flow.protocol = *proto;
    auto flags = TcpFlags::parse(cols[7]);
    if (!flags) {
        fail(line_no, "malformed tcp_flags '" + std::string(cols[7]) + "'");
    }
    flow.tcp_flags = *flags;
    flow.fwd_status = parse_number<int>(cols[8], line_no, "fwd_status");
    flow.tos = parse_number<int>(cols[9], line_no, "tos");
    flow.packets = parse_number<uint64_t>(cols[10], line_no, "packets");
    flow.bytes = parse_number<uint64_t>(cols[11], line_no, "bytes");
    if (flow.packets < 1) fail(line_no, "packets must be >= 1");
    if (flow.bytes < 1) fail(line_no, "bytes must be >= 1");
    auto label = class_label_from(cols[12]);
    if (!label) {
        fail(line_no, "unknown label '" + std::string(cols[12]) + "'");
    }
    flow.label = *label;

    // normalization: flag bits are TCP-only
    if (flow.protocol.kind != Protocol::Kind::tcp) {
        flow.tcp_flags = TcpFlags{};
    }
    return flow;
}

std::string format_flow(const FlowRecord& flow) {
    char num[64];
    std::string out = format_timestamp(flow.end_time);
    out += ',';
    std::snprintf(num, sizeof(num), "%.3f", flow.duration);
    out += num;
    out += ',';
    out += flow.src_ip;
    out += ',';
    out += flow.dst_ip;
    out += ',';
    out += std::to_string(flow.src_port);
    out += ',';
    out += std::to_string(flow.dst_port);
    out += ',';
    out += flow.protocol.str();
    out += ',';
    out += flow.tcp_flags.str();
    out += ',';
    out += std::to_string(flow.fwd_status);
    out += ',';
    out += std::to_string(flow.tos);
    out += ',';
    out += std::to_string(flow.packets);
    out += ',';
    out += std::to_string(flow.bytes);
    out += ',';
    out += to_string(flow.label);
    return out;
}

FlowReader::FlowReader(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) {
        throw DataError("cannot open flow file '" + path + "'");
    }
    gzbuffer(f, 1 << 16);
    file_ = f;
}

FlowReader::~FlowReader() {
    if (file_ != nullptr) {
        gzclose(static_cast<gzFile>(file_));
    }
}

FlowReader::FlowReader(FlowReader&& other) noexcept
    : file_(std::exchange(other.file_, nullptr)), line_no_(other.line_no_) {}

FlowReader& FlowReader::operator=(FlowReader&& other) noexcept {
    if (this != &other) {
        if (file_ != nullptr) gzclose(static_cast<gzFile>(file_));
        file_ = std::exchange(other.file_, nullptr);
        line_no_ = other.line_no_;
    }
    return *this;
}

bool FlowReader::read_line(std::string& out) {
    out.clear();
    gzFile f = static_cast<gzFile>(file_);
    char buf[4096];
    bool got_any = false;
    while (true) {
        if (gzgets(f, buf, sizeof(buf)) == nullptr) {
            int errnum = 0;
            const char* msg = gzerror(f, &errnum);
            if (errnum != Z_OK && errnum != Z_STREAM_END) {
                throw DataError(std::string("flow file read error: ") + (msg ? msg : "?"));
            }
            return got_any;
        }
        got_any = true;
        out += buf;
        if (!out.empty() && out.back() == '\n') {
            out.pop_back();
            return true;
        }
    }
}

std::optional<FlowRecord> FlowReader::next() {
    std::string line;
    while (read_line(line)) {
        ++line_no_;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        return parse_flow_line(sv, line_no_);
    }
    return std::nullopt;
}

void stream_flows(const std::string& path, const std::function<void(const FlowRecord&)>& sink) {
    FlowReader reader(path);
    while (auto flow = reader.next()) {
        sink(*flow);
    }
}

std::vector<FlowRecord> read_flows(const std::string& path) {
    std::vector<FlowRecord> flows;
    stream_flows(path, [&](const FlowRecord& f) { flows.push_back(f); });
    return flows;
}

}  // namespace nids
