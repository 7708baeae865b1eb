#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <tuple>
#include <span>
#include <vector>

#include "surfsim/config.hpp"
#include "surfsim/rng.hpp"
#include "surfsim/spectrum.hpp"
#include "surfsim/strategy.hpp"
#include "surfsim/topology.hpp"
#include "surfsim/trace.hpp"

namespace surfsim {

/// A transmission attempt for the current slot, before resolution.
struct PlannedTx {
    NodeId node = 0;
    ChannelId channel = 0;
    MessageId msg = 0;
    int ttl = 0;
};

/// Resolves one slot under the protocol interference model.
///
/// A transmission on a PR-occupied channel is interrupted and heard by
/// nobody. Otherwise a listener tuned to channel c decodes iff exactly one of
/// its in-range neighbours transmits on c; with two or more it records a
/// collision and decodes nothing on c. Transmitters do not listen.
///
/// Returns one TxEvent per planned transmission, in input order.
inline std::vector<TxEvent> resolve_slot(const Topology& topo, const ChannelState& pr,
                                         std::span<const Activity> activity, std::span<const PlannedTx> planned) {
    std::vector<TxEvent> events;
    events.reserve(planned.size());
    // Index of the transmission each node makes this slot, if any.
    std::vector<std::ptrdiff_t> tx_of(topo.size(), -1);
    for (std::size_t i = 0; i < planned.size(); ++i) {
        const auto& p = planned[i];
        tx_of.at(p.node) = static_cast<std::ptrdiff_t>(i);
        TxEvent e;
        e.node = p.node;
        e.channel = p.channel;
        e.msg = p.msg;
        e.ttl = p.ttl;
        e.outcome = pr.on(p.channel) ? Outcome::pr_interrupted : Outcome::no_listener;
        events.push_back(std::move(e));
    }
    std::vector<bool> heard_collision(planned.size(), false);
    for (NodeId v = 0; v < topo.size(); ++v) {
        if (tx_of[v] >= 0 || activity[v].role != Role::overhear) continue;
        for (ChannelId c : activity[v].channels) {
            if (pr.on(c)) continue;
            std::ptrdiff_t sender = -1;
            std::size_t count = 0;
            for (NodeId u : topo.neighbors(v)) {
                const auto i = tx_of[u];
                if (i >= 0 && planned[static_cast<std::size_t>(i)].channel == c) {
                    ++count;
                    sender = i;
                    heard_collision[static_cast<std::size_t>(i)] = true;
                }
            }
            if (count == 1) events[static_cast<std::size_t>(sender)].delivered_to.push_back(v);
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto& e = events[i];
        if (e.outcome == Outcome::pr_interrupted) continue;
        if (!e.delivered_to.empty()) e.outcome = Outcome::delivered;
        else if (heard_collision[i]) e.outcome = Outcome::collided;
    }
    return events;
}

/// A queued transmission of one message by one node. SB and CA send the same
/// copy once per planned channel, in consecutive turns.
struct PendingTx {
    MessageId msg = 0;
    int ttl = 0;                  // carried by the copy
    std::size_t ready_slot = 0;
    std::uint64_t seq = 0;        // global FIFO order
    std::vector<ChannelId> plan;  // fixed at the first turn (SB, CA)
    std::size_t next = 0;
    bool background = false;
};

struct NodeState {
    NodeId id = 0;
    std::deque<PendingTx> pending; // ordered by (ready_slot, seq)
    std::vector<bool> received;    // indexed by message id
    std::vector<bool> relayed;     // indexed by message id
    ChannelId current_channel = 0;
    Role role = Role::overhear;

    bool has(MessageId m) const { return m < received.size() && received[m]; }

    void mark_received(MessageId m) {
        if (received.size() <= m) received.resize(m + 1, false);
        received[m] = true;
    }

    void enqueue(PendingTx tx) {
        auto pos = std::find_if(pending.begin(), pending.end(), [&](const PendingTx& p) {
            return std::tie(p.ready_slot, p.seq) > std::tie(tx.ready_slot, tx.seq);
        });
        pending.insert(pos, std::move(tx));
    }

    bool has_foreground_work() const {
        return std::any_of(pending.begin(), pending.end(), [](const PendingTx& p) { return !p.background; });
    }
};

/// Queues a relay of a freshly received copy carrying `received_ttl`. The
/// relay carries received_ttl - 1 and goes out after a uniform delay in
/// [1, max_delay] slots. Copies carrying TTL 0 and messages this node already
/// relayed are not scheduled; returns the slot when one is.
inline std::optional<std::size_t> schedule_rebroadcast(NodeState& node, MessageId msg, int received_ttl,
                                                       std::size_t current_slot, std::size_t max_delay,
                                                       std::uint64_t seq, RngStream& rng) {
    if (received_ttl <= 0) return std::nullopt;
    if (node.relayed.size() <= msg) node.relayed.resize(msg + 1, false);
    if (node.relayed[msg]) return std::nullopt;
    node.relayed[msg] = true;
    const std::size_t delay = max_delay <= 1 ? 1 : 1 + uniform_index(rng, max_delay);
    PendingTx tx;
    tx.msg = msg;
    tx.ttl = received_ttl - 1;
    tx.ready_slot = current_slot + delay;
    tx.seq = seq;
    const auto ready = tx.ready_slot;
    node.enqueue(std::move(tx));
    return ready;
}

namespace detail {

class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), seed_(seed), topo_(cfg.make_topology(seed)), pr_model_(cfg.pr_model()),
          channels_(cfg.channel_count) {
        if (topo_.size() != cfg_.node_count) throw ConfigError("topology size differs from node_count", "node_count");
        for (NodeId o : cfg_.messages.origins) {
            if (o >= topo_.size()) throw ConfigError("origin out of range", "messages.origins");
        }
        nodes_.resize(topo_.size());
        for (NodeId n = 0; n < topo_.size(); ++n) {
            nodes_[n].id = n;
            decision_rng_.push_back(make_stream(seed_, streams::decision, n));
            jitter_rng_.push_back(make_stream(seed_, streams::jitter, n));
        }
        if (cfg_.strategy == StrategyKind::ca) {
            auto rng = make_stream(seed_, streams::assignment);
            acs_ = assign_ca(topo_.size(), channels_, std::min(cfg_.ca_set_size, channels_), rng);
        }
        pick_competitors();

        trace_.strategy = std::string(to_string(cfg_.strategy));
        trace_.channel_count = channels_;
        trace_.initial_ttl = cfg_.ttl;
        trace_.seed = seed_;
        trace_.radius = topo_.radius();
        trace_.positions = topo_.positions();
    }

    SimTrace run() {
        auto pr_rng = make_stream(seed_, streams::pr);
        // Pre-roll W slots so the first decisions see a full occupancy window.
        ChannelState state = pr_model_.initial_state(pr_rng);
        std::deque<ChannelState> sensed;
        for (std::size_t i = 0; i < cfg_.window; ++i) {
            sensed.push_back(state);
            state = step_pr_activity(pr_model_, state, pr_rng);
        }

        for (std::size_t t = 0; t < cfg_.max_slots; ++t) {
            if (t > 0) state = step_pr_activity(pr_model_, state, pr_rng);
            originate(t);
            play_slot(t, state, sensed);
            sensed.push_back(state);
            if (sensed.size() > cfg_.window) sensed.pop_front();
            if (finished(t)) return std::move(trace_);
        }
        trace_.truncated = true;
        return std::move(trace_);
    }

private:
    void pick_competitors() {
        if (cfg_.competitors == 0) return;
        std::vector<NodeId> pool;
        for (NodeId n = 0; n < topo_.size(); ++n) {
            if (std::find(cfg_.messages.origins.begin(), cfg_.messages.origins.end(), n) == cfg_.messages.origins.end()) {
                pool.push_back(n);
            }
        }
        // Shuffle the whole pool so competitor sets are nested as the count grows.
        auto rng = make_stream(seed_, streams::background);
        for (std::size_t i = 0; i + 1 < pool.size(); ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
        competitors_.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg_.competitors));
        std::sort(competitors_.begin(), competitors_.end());
    }

    bool is_competitor(NodeId n) const { return std::binary_search(competitors_.begin(), competitors_.end(), n); }

    MessageId new_message(NodeId origin, std::size_t slot, bool background) {
        const MessageId id = trace_.messages.size();
        trace_.messages.push_back({id, origin, slot, background});
        nodes_[origin].mark_received(id);
        nodes_[origin].relayed.resize(std::max(nodes_[origin].relayed.size(), id + 1), false);
        nodes_[origin].relayed[id] = true;
        return id;
    }

    void originate(std::size_t t) {
        const auto& plan = cfg_.messages;
        if (t >= plan.start_slot && (t - plan.start_slot) % plan.interval == 0 &&
            (t - plan.start_slot) / plan.interval < plan.count) {
            for (NodeId o : plan.origins) {
                const MessageId id = new_message(o, t, false);
                if (cfg_.ttl >= 1) {
                    PendingTx tx;
                    tx.msg = id;
                    tx.ttl = cfg_.ttl - 1;
                    tx.ready_slot = t;
                    tx.seq = next_seq_++;
                    nodes_[o].enqueue(std::move(tx));
                }
            }
        }
        // Saturated competitors: a fresh background message every slot.
        for (NodeId c : competitors_) {
            const MessageId id = new_message(c, t, true);
            PendingTx tx;
            tx.msg = id;
            tx.ttl = 0;
            tx.ready_slot = t;
            tx.seq = next_seq_++;
            tx.background = true;
            nodes_[c].pending.clear();
            nodes_[c].enqueue(std::move(tx));
        }
    }

    bool last_origination_done(std::size_t t) const {
        const auto& plan = cfg_.messages;
        return t >= plan.start_slot + (plan.count - 1) * plan.interval;
    }

    bool finished(std::size_t t) const {
        if (!last_origination_done(t)) return false;
        return std::none_of(nodes_.begin(), nodes_.end(), [](const NodeState& n) { return n.has_foreground_work(); });
    }

    // Which node transmits which pending entry this slot.
    std::vector<std::ptrdiff_t> due_transmitters(std::size_t t) const {
        std::vector<std::ptrdiff_t> due(nodes_.size(), -1);
        if (cfg_.scheduling == Scheduling::serial) {
            std::optional<std::pair<std::size_t, std::uint64_t>> best;
            NodeId best_node = 0;
            for (const auto& n : nodes_) {
                if (n.pending.empty() || n.pending.front().background || n.pending.front().ready_slot > t) continue;
                const auto key = std::make_pair(n.pending.front().ready_slot, n.pending.front().seq);
                if (!best || key < *best) {
                    best = key;
                    best_node = n.id;
                }
            }
            if (best) due[best_node] = 0;
            for (NodeId c : competitors_) due[c] = 0;
            return due;
        }
        for (const auto& n : nodes_) {
            if (!n.pending.empty() && n.pending.front().ready_slot <= t) due[n.id] = 0;
        }
        return due;
    }

    std::vector<ChannelObservation> observations(NodeId node, std::span<const double> occupancy) const {
        std::vector<ChannelObservation> obs(channels_);
        const auto history = std::span<const SlotRecord>(trace_.slots).last(std::min(cfg_.window, trace_.slots.size()));
        std::vector<std::size_t> counts(channels_, 0);
        if (!history.empty()) counts = estimate_cr_counts(topo_, history, node, channels_, cfg_.estimation);
        for (ChannelId c = 0; c < channels_; ++c) obs[c] = {c, occupancy[c], counts[c], 0.0};
        return obs;
    }

    std::vector<ChannelId> listen_channels(NodeId n, std::span<ChannelObservation> obs,
                                           const std::set<ChannelId>& available) {
        auto& rng = decision_rng_[n];
        switch (cfg_.strategy) {
        case StrategyKind::surf: return {select_channel_surf(obs, cfg_.surf, rng)};
        case StrategyKind::rd: return {select_channel_rd(channels_, rng)};
        case StrategyKind::sb:
            if (cfg_.sb_receiver == SbReceiver::lowest) return {*available.begin()};
            return {*std::next(available.begin(), static_cast<std::ptrdiff_t>(uniform_index(rng, available.size())))};
        case StrategyKind::ca: {
            const auto& acs = acs_.of(n);
            if (cfg_.ca_receiver == CaReceiver::multi) return acs;
            return {acs[uniform_index(rng, acs.size())]};
        }
        }
        return {0};
    }

    ChannelId transmit_channel(NodeId n, PendingTx& job, std::span<ChannelObservation> obs,
                               const std::set<ChannelId>& available) {
        auto& rng = decision_rng_[n];
        switch (cfg_.strategy) {
        case StrategyKind::surf: return select_channel_surf(obs, cfg_.surf, rng);
        case StrategyKind::rd: return select_channel_rd(channels_, rng);
        case StrategyKind::sb:
            if (job.plan.empty()) {
                // PR is global, so every neighbour senses the same availability.
                NeighborAvailability nb;
                for (NodeId v : topo_.neighbors(n)) nb[v] = available;
                job.plan = nb.empty() ? std::vector<ChannelId>{*available.begin()} : compute_ecs_sb(nb);
            }
            return job.plan[job.next];
        case StrategyKind::ca:
            if (job.plan.empty()) job.plan = acs_.of(n);
            return job.plan[job.next];
        }
        return 0;
    }

    void play_slot(std::size_t t, const ChannelState& pr, const std::deque<ChannelState>& sensed) {
        SlotRecord rec;
        rec.slot = t;
        rec.pr = pr;
        rec.activity.resize(nodes_.size());

        const std::vector<ChannelState> window(sensed.begin(), sensed.end());
        std::vector<double> occupancy(channels_);
        for (ChannelId c = 0; c < channels_; ++c) occupancy[c] = observe_pr_occupancy(window, c);
        std::vector<ChannelObservation> occ_only(channels_);
        for (ChannelId c = 0; c < channels_; ++c) occ_only[c] = {c, occupancy[c], 0, 0.0};
        const auto available = sb_availability(window.back(), occ_only);

        const auto due = due_transmitters(t);
        std::vector<PlannedTx> planned;
        auto decide = [&](NodeId n) {
            auto& node = nodes_[n];
            std::vector<ChannelObservation> obs;
            if (cfg_.strategy == StrategyKind::surf) obs = observations(n, occupancy);
            if (due[n] >= 0) {
                auto& job = node.pending.front();
                ChannelId c = 0;
                if (job.background) {
                    const NodeId source = cfg_.messages.origins.front();
                    c = rec.activity[source].channels.front();
                } else {
                    c = transmit_channel(n, job, obs, available);
                }
                node.role = Role::transmit;
                node.current_channel = c;
                rec.activity[n] = {Role::transmit, {c}};
                planned.push_back({n, c, job.msg, job.ttl});
            } else {
                auto chans = listen_channels(n, obs, available);
                node.role = Role::overhear;
                node.current_channel = chans.front();
                rec.activity[n] = {Role::overhear, std::move(chans)};
            }
        };
        // The first origin decides before the competitors pinned to its channel.
        const NodeId source = cfg_.messages.origins.front();
        decide(source);
        for (NodeId n = 0; n < nodes_.size(); ++n) {
            if (n != source && !is_competitor(n)) decide(n);
        }
        for (NodeId n : competitors_) decide(n);
        std::sort(planned.begin(), planned.end(), [](const auto& a, const auto& b) { return a.node < b.node; });

        rec.transmissions = resolve_slot(topo_, pr, rec.activity, planned);

        // Advance the transmitters' queues.
        for (const auto& p : planned) {
            auto& node = nodes_[p.node];
            auto& job = node.pending.front();
            ++job.next;
            if (job.plan.empty() || job.next >= job.plan.size()) node.pending.pop_front();
        }

        for (const auto& tx : rec.transmissions) {
            for (NodeId v : tx.delivered_to) {
                auto& node = nodes_[v];
                if (node.has(tx.msg)) continue;
                node.mark_received(tx.msg);
                rec.receptions.push_back({v, tx.msg, tx.node, cfg_.ttl - tx.ttl});
                if (trace_.messages[tx.msg].background || is_competitor(v)) continue;
                const std::size_t max_delay = cfg_.scheduling == Scheduling::serial ? 1 : cfg_.jitter;
                if (schedule_rebroadcast(node, tx.msg, tx.ttl, t, max_delay, next_seq_, jitter_rng_[v])) ++next_seq_;
            }
        }
        std::sort(rec.receptions.begin(), rec.receptions.end(),
                  [](const auto& a, const auto& b) { return std::tie(a.node, a.msg) < std::tie(b.node, b.msg); });
        trace_.slots.push_back(std::move(rec));
    }

    const ScenarioConfig& cfg_;
    std::uint64_t seed_;
    Topology topo_;
    PrActivityModel pr_model_;
    std::size_t channels_;
    std::vector<NodeState> nodes_;
    std::vector<RngStream> decision_rng_;
    std::vector<RngStream> jitter_rng_;
    CaAssignment acs_;
    std::vector<NodeId> competitors_;
    std::uint64_t next_seq_ = 0;
    SimTrace trace_;
};

} // namespace detail

/// Runs one dissemination experiment. Deterministic in (config, seed).
inline SimTrace run_dissemination(const ScenarioConfig& cfg, std::uint64_t seed) {
    return detail::Simulation(cfg, seed).run();
}

inline SimTrace run_dissemination(const ScenarioConfig& cfg) { return run_dissemination(cfg, cfg.seed); }

} // namespace surfsim
