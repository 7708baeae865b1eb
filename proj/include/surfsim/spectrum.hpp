#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "surfsim/errors.hpp"
#include "surfsim/rng.hpp"
#include "surfsim/topology.hpp"
#include "surfsim/trace.hpp"

namespace surfsim {

/// Long-run ON fraction of a two-state OFF/ON chain.
inline double stationary_occupancy(double p_on, double p_off) {
    if (p_on + p_off <= 0.0) throw DegenerateChainError("p_on + p_off must be positive");
    return p_on / (p_on + p_off);
}

struct ChannelTransitions {
    double p_on = 0.0;  // P(OFF -> ON) per slot
    double p_off = 0.0; // P(ON -> OFF) per slot

    double occupancy() const { return stationary_occupancy(p_on, p_off); }
};

/// Independent per-channel ON/OFF Markov chains driving PR activity. PR
/// activity is global: every CR node sees the same ChannelState.
class PrActivityModel {
public:
    explicit PrActivityModel(std::vector<ChannelTransitions> channels) : channels_(std::move(channels)) {
        if (channels_.empty()) throw ConfigError("must be at least 1", "channel_count");
        for (std::size_t c = 0; c < channels_.size(); ++c) {
            const auto& t = channels_[c];
            if (t.p_on < 0.0 || t.p_on > 1.0 || t.p_off < 0.0 || t.p_off > 1.0) {
                throw ConfigError("transition probabilities of channel " + std::to_string(c) + " must lie in [0,1]",
                                  "pr");
            }
            if (t.p_on + t.p_off <= 0.0) {
                throw DegenerateChainError("channel " + std::to_string(c) + " has p_on = p_off = 0");
            }
        }
    }

    static PrActivityModel uniform(std::size_t channel_count, double p_on, double p_off) {
        return PrActivityModel(std::vector<ChannelTransitions>(channel_count, {p_on, p_off}));
    }

    /// Every channel gets stationary occupancy `occupancy` with mean ON
    /// period `mean_on_slots` (so p_off = 1/mean_on_slots). When the implied
    /// p_on would exceed 1 the chain is sped up instead: p_on = 1 and p_off is
    /// lowered to keep the same occupancy.
    static PrActivityModel from_occupancy(std::size_t channel_count, double occupancy, double mean_on_slots) {
        if (occupancy < 0.0 || occupancy > 1.0) throw ConfigError("must lie in [0,1]", "pr.occupancy");
        if (!(mean_on_slots >= 1.0)) throw ConfigError("must be >= 1", "pr.mean_on_slots");
        double p_off = 1.0 / mean_on_slots;
        double p_on = 0.0;
        if (occupancy >= 1.0) {
            p_on = 1.0;
            p_off = 0.0;
        } else {
            p_on = p_off * occupancy / (1.0 - occupancy);
            if (p_on > 1.0) {
                p_on = 1.0;
                p_off = (1.0 - occupancy) / occupancy;
            }
        }
        return uniform(channel_count, p_on, p_off);
    }

    /// Aggregate PR demand `load` spread evenly: per-channel occupancy load/Ch.
    static PrActivityModel from_load(std::size_t channel_count, double load, double mean_on_slots) {
        if (channel_count == 0) throw ConfigError("must be at least 1", "channel_count");
        if (load < 0.0 || load > static_cast<double>(channel_count)) {
            throw ConfigError("must lie in [0, channel_count]", "pr.load");
        }
        return from_occupancy(channel_count, load / static_cast<double>(channel_count), mean_on_slots);
    }

    std::size_t channel_count() const noexcept { return channels_.size(); }
    const ChannelTransitions& channel(ChannelId c) const { return channels_.at(c); }

    double total_load() const {
        double sum = 0.0;
        for (const auto& t : channels_) sum += t.occupancy();
        return sum;
    }

    /// Draws each channel from its stationary distribution.
    ChannelState initial_state(RngStream& rng) const {
        ChannelState s(channel_count());
        for (ChannelId c = 0; c < channel_count(); ++c) s.set(c, bernoulli(rng, channels_[c].occupancy()));
        return s;
    }

private:
    std::vector<ChannelTransitions> channels_;
};

/// One slot of PR dynamics. Consumes exactly one draw per channel.
inline ChannelState step_pr_activity(const PrActivityModel& model, const ChannelState& prev, RngStream& rng) {
    if (prev.size() != model.channel_count()) {
        throw ConfigError("state has " + std::to_string(prev.size()) + " channels, model has " +
                              std::to_string(model.channel_count()),
                          "channel_count");
    }
    ChannelState next(prev.size());
    for (ChannelId c = 0; c < prev.size(); ++c) {
        const auto& t = model.channel(c);
        const bool flip = bernoulli(rng, prev.on(c) ? t.p_off : t.p_on);
        next.set(c, prev.on(c) != flip);
    }
    return next;
}

/// Fraction of the window's slots in which `channel` was PR-occupied.
inline double observe_pr_occupancy(std::span<const ChannelState> history, ChannelId channel) {
    if (history.empty()) throw InsufficientHistoryError("occupancy window is empty");
    std::size_t on = 0;
    for (const auto& s : history) {
        if (channel >= s.size()) throw ConfigError("channel out of range", "channel_id");
        if (s.on(channel)) ++on;
    }
    return static_cast<double>(on) / static_cast<double>(history.size());
}

/// One node's view of one channel. `weight` is filled in by the strategy.
struct ChannelObservation {
    ChannelId channel = 0;
    double o_pr = 0.0;
    std::size_t n_cr = 0;
    double weight = 0.0;
};

enum class EstimationMode {
    oracle,  // distinct in-range nodes that transmitted or listened on the channel
    sampled, // distinct in-range transmitters the node decoded cleanly on the channel
};

/// Active-CR count per channel as seen by `node` over `window`. Entry c of
/// the result is estimate_cr_count(..., c, mode).
inline std::vector<std::size_t> estimate_cr_counts(const Topology& topo, std::span<const SlotRecord> window,
                                                   NodeId node, std::size_t channel_count, EstimationMode mode) {
    const auto& nb = topo.neighbors(node);
    if (window.empty()) throw InsufficientHistoryError("CR activity window is empty");
    // seen[c * |nb| + i]: neighbor i was active on channel c.
    std::vector<bool> seen(channel_count * nb.size(), false);
    auto mark = [&](NodeId other, ChannelId c) {
        if (c >= channel_count) throw ConfigError("channel out of range", "channel_id");
        auto it = std::lower_bound(nb.begin(), nb.end(), other);
        if (it != nb.end() && *it == other) {
            seen[c * nb.size() + static_cast<std::size_t>(it - nb.begin())] = true;
        }
    };
    for (const auto& rec : window) {
        if (mode == EstimationMode::oracle) {
            for (std::size_t i = 0; i < nb.size(); ++i) {
                if (nb[i] >= rec.activity.size()) continue;
                for (ChannelId c : rec.activity[nb[i]].channels) {
                    if (c >= channel_count) throw ConfigError("channel out of range", "channel_id");
                    seen[c * nb.size() + i] = true;
                }
            }
        } else {
            for (const auto& tx : rec.transmissions) {
                if (std::binary_search(tx.delivered_to.begin(), tx.delivered_to.end(), node)) mark(tx.node, tx.channel);
            }
        }
    }
    std::vector<std::size_t> counts(channel_count, 0);
    for (ChannelId c = 0; c < channel_count; ++c) {
        for (std::size_t i = 0; i < nb.size(); ++i) counts[c] += seen[c * nb.size() + i] ? 1 : 0;
    }
    return counts;
}

inline std::size_t estimate_cr_count(const Topology& topo, std::span<const SlotRecord> window, NodeId node,
                                     ChannelId channel, std::size_t channel_count, EstimationMode mode) {
    if (channel >= channel_count) throw ConfigError("channel out of range", "channel_id");
    return estimate_cr_counts(topo, window, node, channel_count, mode)[channel];
}

} // namespace surfsim
