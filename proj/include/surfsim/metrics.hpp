#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "surfsim/config.hpp"
#include "surfsim/engine.hpp"
#include "surfsim/errors.hpp"
#include "surfsim/trace.hpp"

namespace surfsim {

struct MetricsReport {
    std::string strategy;
    std::size_t channel_count = 0;
    std::size_t node_count = 0;
    std::uint64_t seed = 0;
    int ttl = 0;

    std::map<NodeId, double> per_node_delivery;
    std::vector<double> accumulative_receivers; // index = hop, 0..ttl
    std::optional<double> source_delivery;      // neighbourhood delivery of the first origin
    std::size_t transmissions = 0;              // foreground only
    std::size_t pr_interrupts = 0;
    bool truncated = false;

    double final_receivers() const { return accumulative_receivers.empty() ? 0.0 : accumulative_receivers.back(); }

    double final_fraction() const {
        return node_count <= 1 ? 0.0 : final_receivers() / static_cast<double>(node_count - 1);
    }
};

namespace detail {

inline std::vector<const MessageInfo*> foreground(const SimTrace& trace) {
    std::vector<const MessageInfo*> out;
    for (const auto& m : trace.messages) {
        if (!m.background) out.push_back(&m);
    }
    return out;
}

} // namespace detail

/// Per node: distinct foreground messages received over those originated
/// network-wide by other nodes. Nodes that originated everything are omitted.
inline std::map<NodeId, double> delivery_ratio(const SimTrace& trace) {
    const auto fg = detail::foreground(trace);
    if (fg.empty()) throw UndefinedRatioError("no messages were originated");
    const auto n = trace.node_count();
    std::vector<std::set<MessageId>> got(n);
    for (const auto& rec : trace.slots) {
        for (const auto& rx : rec.receptions) {
            if (!trace.messages.at(rx.msg).background) got.at(rx.node).insert(rx.msg);
        }
    }
    std::vector<std::size_t> own(n, 0);
    for (const auto* m : fg) ++own.at(m->origin);
    std::map<NodeId, double> out;
    for (NodeId v = 0; v < n; ++v) {
        const auto others = fg.size() - own[v];
        if (others == 0) continue;
        std::size_t hits = 0;
        for (MessageId id : got[v]) hits += trace.messages[id].origin != v ? 1 : 0;
        out[v] = static_cast<double>(hits) / static_cast<double>(others);
    }
    return out;
}

/// Entry h: distinct nodes whose first reception happened at hop <= h, where
/// hop = initial TTL - TTL carried by the received copy. Averaged over the
/// foreground messages (an integer count when there is only one).
inline std::vector<double> accumulative_receivers(const SimTrace& trace) {
    const auto hops = static_cast<std::size_t>(std::max(trace.initial_ttl, 0)) + 1;
    std::vector<double> acc(hops, 0.0);
    const auto fg = detail::foreground(trace);
    if (fg.empty()) return acc;
    std::vector<double> at_hop(hops, 0.0);
    for (const auto& rec : trace.slots) {
        for (const auto& rx : rec.receptions) {
            if (trace.messages.at(rx.msg).background) continue;
            const auto h = static_cast<std::size_t>(std::clamp(rx.hop, 0, static_cast<int>(hops - 1)));
            at_hop[h] += 1.0;
        }
    }
    double running = 0.0;
    for (std::size_t h = 0; h < hops; ++h) {
        running += at_hop[h];
        acc[h] = running / static_cast<double>(fg.size());
    }
    return acc;
}

/// Mean delivery ratio of the first origin's own messages over its in-range
/// neighbours, competitors excluded. Empty when there is no such neighbour.
inline std::optional<double> source_delivery(const SimTrace& trace) {
    const auto fg = detail::foreground(trace);
    if (fg.empty()) throw UndefinedRatioError("no messages were originated");
    const NodeId source = fg.front()->origin;
    std::set<NodeId> competitors;
    for (const auto& m : trace.messages) {
        if (m.background) competitors.insert(m.origin);
    }
    std::set<MessageId> mine;
    for (const auto* m : fg) {
        if (m->origin == source) mine.insert(m->id);
    }
    const auto topo = trace.topology();
    std::map<NodeId, std::size_t> hits;
    for (NodeId v : topo.neighbors(source)) {
        if (!competitors.count(v)) hits[v] = 0;
    }
    if (hits.empty()) return std::nullopt;
    for (const auto& rec : trace.slots) {
        for (const auto& rx : rec.receptions) {
            auto it = hits.find(rx.node);
            if (it != hits.end() && mine.count(rx.msg)) ++it->second;
        }
    }
    double sum = 0.0;
    for (const auto& [v, h] : hits) sum += static_cast<double>(h) / static_cast<double>(mine.size());
    return sum / static_cast<double>(hits.size());
}

inline MetricsReport compute_report(const SimTrace& trace) {
    MetricsReport r;
    r.strategy = trace.strategy;
    r.channel_count = trace.channel_count;
    r.node_count = trace.node_count();
    r.seed = trace.seed;
    r.ttl = trace.initial_ttl;
    r.per_node_delivery = delivery_ratio(trace);
    r.accumulative_receivers = accumulative_receivers(trace);
    r.source_delivery = source_delivery(trace);
    r.truncated = trace.truncated;
    for (const auto& rec : trace.slots) {
        for (const auto& tx : rec.transmissions) {
            if (trace.messages.at(tx.msg).background) continue;
            ++r.transmissions;
            if (tx.outcome == Outcome::pr_interrupted) ++r.pr_interrupts;
        }
    }
    return r;
}

struct Summary {
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation; 0 for a single value
    std::size_t count = 0;
};

inline Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

struct AggregateReport {
    std::string strategy;
    std::size_t channel_count = 0;
    std::size_t node_count = 0;
    int ttl = 0;
    std::size_t runs = 0;
    std::map<NodeId, Summary> per_node_delivery;
    std::vector<Summary> accumulative_receivers;
    Summary final_fraction;
    Summary source_delivery; // over runs where it is defined
};

/// Elementwise mean and sample standard deviation across runs that share
/// (strategy, Ch, N, TTL).
inline AggregateReport aggregate_runs(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw AggregationError("no reports to aggregate");
    const auto& first = reports.front();
    AggregateReport agg;
    agg.strategy = first.strategy;
    agg.channel_count = first.channel_count;
    agg.node_count = first.node_count;
    agg.ttl = first.ttl;
    agg.runs = reports.size();
    for (const auto& r : reports) {
        if (r.strategy != first.strategy || r.channel_count != first.channel_count || r.node_count != first.node_count ||
            r.ttl != first.ttl) {
            throw AggregationError("reports differ in strategy, channel count, node count or TTL");
        }
    }
    std::map<NodeId, std::vector<double>> per_node;
    for (const auto& r : reports) {
        for (const auto& [n, v] : r.per_node_delivery) per_node[n].push_back(v);
    }
    for (const auto& [n, vs] : per_node) {
        if (vs.size() != reports.size()) throw AggregationError("reports cover different node sets");
        agg.per_node_delivery[n] = summarize(vs);
    }
    for (std::size_t h = 0; h < first.accumulative_receivers.size(); ++h) {
        std::vector<double> vs;
        for (const auto& r : reports) vs.push_back(r.accumulative_receivers.at(h));
        agg.accumulative_receivers.push_back(summarize(vs));
    }
    std::vector<double> fractions, source;
    for (const auto& r : reports) {
        fractions.push_back(r.final_fraction());
        if (r.source_delivery) source.push_back(*r.source_delivery);
    }
    agg.final_fraction = summarize(fractions);
    agg.source_delivery = summarize(source);
    return agg;
}

struct ContentionRow {
    std::size_t competitors = 0;
    Summary delivery;
};

/// Mean delivery ratio at the receivers of a single source as saturated
/// competitors are added on the source's channel. Seeds where the source has
/// no eligible receiver are skipped.
inline std::vector<ContentionRow> contention_curve(const ScenarioConfig& base, std::vector<std::size_t> competitor_counts,
                                                   const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("needs at least one seed", "seeds");
    std::sort(competitor_counts.begin(), competitor_counts.end());
    std::vector<ContentionRow> rows;
    for (std::size_t k : competitor_counts) {
        auto cfg = base;
        cfg.competitors = k;
        if (k + cfg.messages.origins.size() > cfg.node_count) {
            throw ConfigError("more competitors than non-origin nodes", "background.competitors");
        }
        std::vector<double> values;
        for (auto seed : seeds) {
            if (auto d = source_delivery(run_dissemination(cfg, seed))) values.push_back(*d);
        }
        rows.push_back({k, summarize(values)});
    }
    return rows;
}

/// Transmissions beyond what the strategy plans for one relay: one copy for
/// SURF and RD, one per distinct planned channel for SB and CA.
inline std::size_t duplicate_rebroadcasts_of(const SimTrace& trace,
                                             const std::map<std::pair<NodeId, MessageId>, std::vector<ChannelId>>& sent) {
    const bool multi = trace.strategy == "sb" || trace.strategy == "ca";
    std::size_t dups = 0;
    for (const auto& [key, chans] : sent) {
        const std::set<ChannelId> distinct(chans.begin(), chans.end());
        const std::size_t allowed = multi ? distinct.size() : 1;
        dups += chans.size() > allowed ? chans.size() - allowed : 0;
    }
    return dups;
}

inline std::size_t duplicate_rebroadcasts(const SimTrace& trace) {
    std::map<std::pair<NodeId, MessageId>, std::vector<ChannelId>> sent;
    for (const auto& rec : trace.slots) {
        for (const auto& tx : rec.transmissions) {
            if (!trace.messages.at(tx.msg).background) sent[{tx.node, tx.msg}].push_back(tx.channel);
        }
    }
    return duplicate_rebroadcasts_of(trace, sent);
}

/// Consistency checks over a finished trace. Returns one message per
/// violation; empty when the trace is sound.
inline std::vector<std::string> audit_trace(const SimTrace& trace) {
    std::vector<std::string> issues;
    const auto n = trace.node_count();
    std::set<std::pair<NodeId, MessageId>> received;
    std::map<std::pair<NodeId, MessageId>, std::vector<ChannelId>> sent;
    for (const auto& rec : trace.slots) {
        const auto at = " at slot " + std::to_string(rec.slot);
        for (const auto& tx : rec.transmissions) {
            if (rec.pr.on(tx.channel) && !tx.delivered_to.empty()) issues.push_back("delivery under PR activity" + at);
            if ((tx.outcome == Outcome::delivered) != !tx.delivered_to.empty()) {
                issues.push_back("outcome inconsistent with receivers" + at);
            }
            if (!trace.messages.at(tx.msg).background) sent[{tx.node, tx.msg}].push_back(tx.channel);
        }
        for (const auto& rx : rec.receptions) {
            if (rx.node >= n) issues.push_back("receiver out of range" + at);
            if (!received.insert({rx.node, rx.msg}).second) issues.push_back("repeated reception" + at);
            if (trace.messages.at(rx.msg).origin == rx.node) issues.push_back("origin received own message" + at);
            std::size_t matches = 0;
            for (const auto& tx : rec.transmissions) {
                if (tx.node == rx.from && tx.msg == rx.msg &&
                    std::binary_search(tx.delivered_to.begin(), tx.delivered_to.end(), rx.node)) {
                    ++matches;
                }
            }
            if (matches != 1) issues.push_back("reception without exactly one matching transmission" + at);
            if (rx.hop < 1 || rx.hop > trace.initial_ttl) issues.push_back("hop out of range" + at);
        }
    }
    if (duplicate_rebroadcasts_of(trace, sent) != 0) issues.push_back("duplicate rebroadcasts");
    return issues;
}

} // namespace surfsim
