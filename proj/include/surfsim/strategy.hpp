#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surfsim/errors.hpp"
#include "surfsim/rng.hpp"
#include "surfsim/spectrum.hpp"

namespace surfsim {

enum class StrategyKind { surf, rd, sb, ca };

inline std::string_view to_string(StrategyKind k) {
    switch (k) {
    case StrategyKind::surf: return "surf";
    case StrategyKind::rd: return "rd";
    case StrategyKind::sb: return "sb";
    case StrategyKind::ca: return "ca";
    }
    return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
    if (s == "surf") return StrategyKind::surf;
    if (s == "rd") return StrategyKind::rd;
    if (s == "sb") return StrategyKind::sb;
    if (s == "ca") return StrategyKind::ca;
    throw ConfigError("unknown strategy '" + std::string(s) + "' (expected surf, rd, sb or ca)", "strategy");
}

struct SurfParams {
    std::size_t n_ref = 2;       // contention scale: utility peaks at n_ref/2 active CRs
    double weight_floor = 1e-9;  // relative tolerance under which two weights count as tied

    void validate() const {
        if (n_ref < 1) throw ConfigError("must be at least 1", "surf.n_ref");
        if (!(weight_floor >= 0.0) || weight_floor >= 1.0) throw ConfigError("must lie in [0,1)", "surf.weight_floor");
    }
};

/// Default contention scale: expected number of in-range CRs, N * pi * r^2,
/// rounded and clamped to at least 2.
inline std::size_t default_n_ref(std::size_t node_count, double radius) {
    const double expected = static_cast<double>(node_count) * std::numbers::pi * radius * radius;
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(expected)));
}

/// u(n) = n * max(0, 1 - n / n_ref).
inline double contention_utility(double n_cr, std::size_t n_ref) {
    return n_cr * std::max(0.0, 1.0 - n_cr / static_cast<double>(n_ref));
}

/// w = (1 - o_pr) * u(n_cr): favours little PR activity and a moderate
/// number of active CRs. Zero on fully occupied or empty channels.
inline double surf_weight(const ChannelObservation& obs, const SurfParams& params) {
    return (1.0 - obs.o_pr) * contention_utility(static_cast<double>(obs.n_cr), params.n_ref);
}

using WeightFunction = std::function<double(const ChannelObservation&, const SurfParams&)>;

namespace detail {

inline ChannelId pick_tied(const std::vector<ChannelId>& tied, RngStream& rng) {
    return tied.size() == 1 ? tied.front() : tied[uniform_index(rng, tied.size())];
}

} // namespace detail

/// Highest-weight channel, ties broken uniformly at random. When every weight
/// is zero, the least PR-occupied channel wins instead. Writes the computed
/// weights back into `observations`.
inline ChannelId select_channel_surf(std::span<ChannelObservation> observations, const SurfParams& params,
                                     RngStream& rng, const WeightFunction& weight = surf_weight) {
    if (observations.empty()) throw ConfigError("no channel observations", "channel_count");
    double best = 0.0;
    for (auto& o : observations) {
        o.weight = o.o_pr >= 1.0 ? 0.0 : std::max(0.0, weight(o, params));
        best = std::max(best, o.weight);
    }
    std::vector<ChannelId> tied;
    if (best > 0.0) {
        const double cut = best * (1.0 - params.weight_floor);
        for (const auto& o : observations) {
            if (o.weight >= cut) tied.push_back(o.channel);
        }
    } else {
        double least = 2.0;
        for (const auto& o : observations) least = std::min(least, o.o_pr);
        for (const auto& o : observations) {
            if (o.o_pr == least) tied.push_back(o.channel);
        }
    }
    return detail::pick_tied(tied, rng);
}

inline ChannelId select_channel_rd(std::size_t channel_count, RngStream& rng) {
    if (channel_count == 0) throw ConfigError("must be at least 1", "channel_count");
    return uniform_index(rng, channel_count);
}

using NeighborAvailability = std::map<NodeId, std::set<ChannelId>>;

/// Essential channel set for selective broadcasting: greedy set cover of the
/// neighbours by their available channels. Each round takes the channel that
/// covers the most still-uncovered neighbours (lowest id on ties). The result
/// is in selection order.
inline std::vector<ChannelId> compute_ecs_sb(const NeighborAvailability& availability) {
    std::set<ChannelId> all;
    for (const auto& [node, chans] : availability) {
        if (chans.empty()) throw UncoverableNeighborError("neighbor " + std::to_string(node) + " has no channel");
        all.insert(chans.begin(), chans.end());
    }
    std::set<NodeId> uncovered;
    for (const auto& [node, chans] : availability) uncovered.insert(node);

    std::vector<ChannelId> ecs;
    while (!uncovered.empty()) {
        ChannelId best = 0;
        std::size_t best_gain = 0;
        for (ChannelId c : all) {
            std::size_t gain = 0;
            for (NodeId n : uncovered) gain += availability.at(n).count(c);
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        ecs.push_back(best);
        std::erase_if(uncovered, [&](NodeId n) { return availability.at(n).count(best) > 0; });
    }
    return ecs;
}

/// A node's available channels for selective broadcasting: those idle in the
/// most recently sensed slot. If all are busy, the least occupied one over
/// the observation window (lowest id on ties).
inline std::set<ChannelId> sb_availability(const ChannelState& last_sensed,
                                           std::span<const ChannelObservation> observations) {
    std::set<ChannelId> out;
    for (ChannelId c = 0; c < last_sensed.size(); ++c) {
        if (!last_sensed.on(c)) out.insert(c);
    }
    if (out.empty() && !observations.empty()) {
        const auto it = std::min_element(observations.begin(), observations.end(),
                                         [](const auto& a, const auto& b) { return a.o_pr < b.o_pr; });
        out.insert(it->channel);
    }
    return out;
}

/// Centrally assigned channel sets (Acs), one per node, each of size k.
struct CaAssignment {
    std::size_t set_size = 0;
    std::vector<std::vector<ChannelId>> sets; // sorted ascending

    const std::vector<ChannelId>& of(NodeId node) const { return sets.at(node); }
};

/// Each node independently gets a uniform random k-subset of the channels.
inline CaAssignment assign_ca(std::size_t node_count, std::size_t channel_count, std::size_t k, RngStream& rng) {
    if (k < 1 || k > channel_count) throw ConfigError("must lie in [1, channel_count]", "ca.set_size");
    std::vector<ChannelId> channels(channel_count);
    std::iota(channels.begin(), channels.end(), ChannelId{0});
    CaAssignment out{k, {}};
    out.sets.reserve(node_count);
    for (NodeId n = 0; n < node_count; ++n) {
        // Partial Fisher-Yates: the first k entries form a uniform k-subset.
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + uniform_index(rng, channel_count - i);
            std::swap(channels[i], channels[j]);
        }
        std::vector<ChannelId> set(channels.begin(), channels.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(set.begin(), set.end());
        out.sets.push_back(std::move(set));
    }
    return out;
}

/// A node's plan for one message (transmit) or one slot (overhear). SURF and
/// RD use a single channel; SB lists its ECS; CA lists the node's Acs.
struct Decision {
    Role role = Role::overhear;
    std::vector<ChannelId> channels;
};

} // namespace surfsim
