#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "surfsim/errors.hpp"
#include "surfsim/topology.hpp"

namespace surfsim {

using ChannelId = std::size_t;
using MessageId = std::size_t;

/// PR occupancy of every channel for one slot.
class ChannelState {
public:
    ChannelState() = default;
    explicit ChannelState(std::size_t channels, bool on = false) : on_(channels, on) {}
    explicit ChannelState(std::vector<bool> on) : on_(std::move(on)) {}

    std::size_t size() const noexcept { return on_.size(); }
    bool on(ChannelId c) const { return on_.at(c); }
    void set(ChannelId c, bool value) { on_.at(c) = value; }

    friend bool operator==(const ChannelState&, const ChannelState&) = default;

private:
    std::vector<bool> on_;
};

enum class Role : std::uint8_t { transmit, overhear };

/// What one node is tuned to during one slot. A transmitter uses exactly one
/// channel; a listener usually one, several for multi-radio CA receivers.
struct Activity {
    Role role = Role::overhear;
    std::vector<ChannelId> channels;

    friend bool operator==(const Activity&, const Activity&) = default;
};

enum class Outcome : std::uint8_t { delivered, collided, pr_interrupted, no_listener };

struct TxEvent {
    NodeId node = 0;
    ChannelId channel = 0;
    MessageId msg = 0;
    int ttl = 0; // carried by this copy
    Outcome outcome = Outcome::no_listener;
    std::vector<NodeId> delivered_to; // sorted; non-empty iff outcome == delivered

    friend bool operator==(const TxEvent&, const TxEvent&) = default;
};

/// First reception of `msg` at `node`. Later clean copies show up only in the
/// matching TxEvent's delivered_to list.
struct RxEvent {
    NodeId node = 0;
    MessageId msg = 0;
    NodeId from = 0;
    int hop = 0;

    friend bool operator==(const RxEvent&, const RxEvent&) = default;
};

struct SlotRecord {
    std::size_t slot = 0;
    ChannelState pr;
    std::vector<Activity> activity; // indexed by node
    std::vector<TxEvent> transmissions;
    std::vector<RxEvent> receptions;

    friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
};

struct MessageInfo {
    MessageId id = 0;
    NodeId origin = 0;
    std::size_t created_slot = 0;
    bool background = false; // contention traffic; never relayed, excluded from metrics

    friend bool operator==(const MessageInfo&, const MessageInfo&) = default;
};

struct SimTrace {
    std::string strategy;
    std::size_t channel_count = 0;
    int initial_ttl = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;
    std::vector<Position> positions;
    std::vector<MessageInfo> messages;
    std::vector<SlotRecord> slots;
    bool truncated = false;

    std::size_t node_count() const noexcept { return positions.size(); }
    Topology topology() const { return Topology{positions, radius}; }

    friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

inline std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::delivered: return "delivered";
    case Outcome::collided: return "collided";
    case Outcome::pr_interrupted: return "pr-interrupted";
    case Outcome::no_listener: return "no-listener";
    }
    return "?";
}

inline Outcome parse_outcome(std::string_view s) {
    if (s == "delivered") return Outcome::delivered;
    if (s == "collided") return Outcome::collided;
    if (s == "pr-interrupted") return Outcome::pr_interrupted;
    if (s == "no-listener") return Outcome::no_listener;
    throw TraceFormatError("unknown outcome '" + std::string(s) + "'");
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

template <typename T>
std::string join_ids(const std::vector<T>& ids) {
    if (ids.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(ids[i]);
    }
    return out;
}

inline std::vector<std::size_t> split_ids(std::string_view s) {
    std::vector<std::size_t> out;
    if (s == "-") return out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto tok = s.substr(0, comma);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) {
            throw TraceFormatError("bad id list '" + std::string(s) + "'");
        }
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

} // namespace detail

inline constexpr std::string_view trace_magic = "surfsim-trace 1";

/// Line-oriented event log. One record per line, fields separated by single
/// spaces, slot-major order:
///
///     surfsim-trace 1
///     run <strategy> <N> <Ch> <ttl> <seed> <radius> <slots> <truncated>
///     node <id> <x> <y>
///     msg <id> <origin> <created_slot> <background>
///     slot <t> <pr bits, channel 0 first>
///     act <t> <node> tx|rx <ch>[,<ch>...]
///     tx <t> <node> <ch> <msg> <ttl> <outcome> <receivers|->
///     rx <t> <node> <msg> <from> <hop>
///     end
inline void write_trace(std::ostream& out, const SimTrace& trace) {
    std::string buf;
    buf.reserve(1 << 16);
    auto flush = [&] {
        out << buf;
        buf.clear();
    };
    buf += trace_magic;
    buf += '\n';
    buf += "run " + trace.strategy + ' ' + std::to_string(trace.node_count()) + ' ' +
           std::to_string(trace.channel_count) + ' ' + std::to_string(trace.initial_ttl) + ' ' +
           std::to_string(trace.seed) + ' ' + detail::format_double(trace.radius) + ' ' +
           std::to_string(trace.slots.size()) + ' ' + (trace.truncated ? "1" : "0") + '\n';
    for (NodeId id = 0; id < trace.positions.size(); ++id) {
        buf += "node " + std::to_string(id) + ' ' + detail::format_double(trace.positions[id].x) + ' ' +
               detail::format_double(trace.positions[id].y) + '\n';
    }
    for (const auto& m : trace.messages) {
        buf += "msg " + std::to_string(m.id) + ' ' + std::to_string(m.origin) + ' ' + std::to_string(m.created_slot) +
               ' ' + (m.background ? "1" : "0") + '\n';
    }
    for (const auto& rec : trace.slots) {
        const auto t = std::to_string(rec.slot);
        buf += "slot " + t + ' ';
        for (ChannelId c = 0; c < rec.pr.size(); ++c) buf += rec.pr.on(c) ? '1' : '0';
        buf += '\n';
        for (NodeId id = 0; id < rec.activity.size(); ++id) {
            const auto& a = rec.activity[id];
            buf += "act " + t + ' ' + std::to_string(id) + (a.role == Role::transmit ? " tx " : " rx ") +
                   detail::join_ids(a.channels) + '\n';
        }
        for (const auto& tx : rec.transmissions) {
            buf += "tx " + t + ' ' + std::to_string(tx.node) + ' ' + std::to_string(tx.channel) + ' ' +
                   std::to_string(tx.msg) + ' ' + std::to_string(tx.ttl) + ' ' + std::string(to_string(tx.outcome)) +
                   ' ' + detail::join_ids(tx.delivered_to) + '\n';
        }
        for (const auto& rx : rec.receptions) {
            buf += "rx " + t + ' ' + std::to_string(rx.node) + ' ' + std::to_string(rx.msg) + ' ' +
                   std::to_string(rx.from) + ' ' + std::to_string(rx.hop) + '\n';
        }
        if (buf.size() > (1 << 15)) flush();
    }
    buf += "end\n";
    flush();
}

inline std::string trace_to_string(const SimTrace& trace) {
    std::ostringstream out;
    write_trace(out, trace);
    return out.str();
}

inline SimTrace read_trace(std::istream& in) {
    SimTrace trace;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) -> TraceFormatError {
        return TraceFormatError("trace line " + std::to_string(lineno) + ": " + why);
    };
    if (!std::getline(in, line) || line != trace_magic) {
        throw TraceFormatError("missing '" + std::string(trace_magic) + "' header");
    }
    ++lineno;
    std::size_t declared_nodes = 0;
    std::size_t declared_slots = 0;
    bool saw_run = false;
    bool saw_end = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream f(line);
        std::string kind;
        f >> kind;
        if (kind == "run") {
            int truncated = 0;
            if (!(f >> trace.strategy >> declared_nodes >> trace.channel_count >> trace.initial_ttl >> trace.seed >>
                  trace.radius >> declared_slots >> truncated)) {
                throw fail("malformed run record");
            }
            trace.truncated = truncated != 0;
            saw_run = true;
        } else if (kind == "node") {
            NodeId id = 0;
            Position p;
            if (!(f >> id >> p.x >> p.y) || id != trace.positions.size()) throw fail("malformed node record");
            trace.positions.push_back(p);
        } else if (kind == "msg") {
            MessageInfo m;
            int bg = 0;
            if (!(f >> m.id >> m.origin >> m.created_slot >> bg)) throw fail("malformed msg record");
            m.background = bg != 0;
            trace.messages.push_back(m);
        } else if (kind == "slot") {
            SlotRecord rec;
            std::string bits;
            if (!(f >> rec.slot >> bits) || bits.size() != trace.channel_count) throw fail("malformed slot record");
            std::vector<bool> on(bits.size());
            for (std::size_t c = 0; c < bits.size(); ++c) on[c] = bits[c] == '1';
            rec.pr = ChannelState{std::move(on)};
            rec.activity.resize(declared_nodes);
            trace.slots.push_back(std::move(rec));
        } else if (kind == "act" || kind == "tx" || kind == "rx") {
            if (trace.slots.empty()) throw fail("event before first slot record");
            auto& rec = trace.slots.back();
            std::size_t t = 0;
            if (!(f >> t) || t != rec.slot) throw fail("event slot does not match enclosing slot");
            if (kind == "act") {
                NodeId id = 0;
                std::string role, chans;
                if (!(f >> id >> role >> chans) || id >= rec.activity.size()) throw fail("malformed act record");
                rec.activity[id].role = role == "tx" ? Role::transmit : Role::overhear;
                rec.activity[id].channels = detail::split_ids(chans);
            } else if (kind == "tx") {
                TxEvent tx;
                std::string outcome, recv;
                if (!(f >> tx.node >> tx.channel >> tx.msg >> tx.ttl >> outcome >> recv)) {
                    throw fail("malformed tx record");
                }
                tx.outcome = parse_outcome(outcome);
                tx.delivered_to = detail::split_ids(recv);
                rec.transmissions.push_back(std::move(tx));
            } else {
                RxEvent rx;
                if (!(f >> rx.node >> rx.msg >> rx.from >> rx.hop)) throw fail("malformed rx record");
                rec.receptions.push_back(rx);
            }
        } else if (kind == "end") {
            saw_end = true;
            break;
        } else if (!kind.empty()) {
            throw fail("unknown record '" + kind + "'");
        }
    }
    if (!saw_run) throw TraceFormatError("missing run record");
    if (!saw_end) throw TraceFormatError("trace truncated: missing end record");
    if (trace.positions.size() != declared_nodes) throw TraceFormatError("node count mismatch");
    if (trace.slots.size() != declared_slots) throw TraceFormatError("slot count mismatch");
    return trace;
}

} // namespace surfsim
