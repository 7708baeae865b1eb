#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "surfsim/errors.hpp"
#include "surfsim/rng.hpp"
#include "surfsim/spectrum.hpp"
#include "surfsim/strategy.hpp"
#include "surfsim/topology.hpp"

namespace surfsim {

inline constexpr int config_schema_version = 1;

enum class PrSpec { load, occupancy, transitions, per_channel };

enum class Scheduling {
    jitter, // rebroadcast after a uniform delay in [1, jitter] slots
    serial, // one transmission network-wide per slot, FIFO (collision-free)
};

enum class CaReceiver {
    single, // listen on one random member of the node's Acs per slot
    multi,  // one radio per Acs channel, all listening
};

enum class SbReceiver {
    lowest, // lowest-id available channel
    random, // uniform over the node's available channels, per slot
};

struct MessagePlan {
    std::vector<NodeId> origins{0};
    std::size_t count = 1; // per origin
    std::size_t interval = 1;
    std::size_t start_slot = 0;
};

/// Fully validated scenario with defaults filled in.
struct ScenarioConfig {
    std::size_t node_count = 70;
    std::size_t channel_count = 15;
    double radius = 0.25;

    PrSpec pr_spec = PrSpec::occupancy;
    double pr_load = 0.0;
    double pr_occupancy = 0.3;
    double pr_mean_on_slots = 10.0;
    ChannelTransitions pr_transitions{};
    std::vector<ChannelTransitions> pr_channels;

    StrategyKind strategy = StrategyKind::surf;
    SurfParams surf{};
    bool surf_n_ref_auto = true;
    std::size_t ca_set_size = 2;
    CaReceiver ca_receiver = CaReceiver::single;
    SbReceiver sb_receiver = SbReceiver::lowest;

    int ttl = 8;
    std::size_t window = 20;
    std::size_t jitter = 4;
    std::size_t max_slots = 500;
    Scheduling scheduling = Scheduling::jitter;
    MessagePlan messages{};
    std::size_t competitors = 0;
    EstimationMode estimation = EstimationMode::oracle;
    std::uint64_t seed = 1;

    std::optional<std::vector<Position>> positions;
    std::optional<std::string> topology_file;

    PrActivityModel pr_model() const {
        switch (pr_spec) {
        case PrSpec::load: return PrActivityModel::from_load(channel_count, pr_load, pr_mean_on_slots);
        case PrSpec::occupancy: return PrActivityModel::from_occupancy(channel_count, pr_occupancy, pr_mean_on_slots);
        case PrSpec::transitions: return PrActivityModel::uniform(channel_count, pr_transitions.p_on, pr_transitions.p_off);
        case PrSpec::per_channel: return PrActivityModel(pr_channels);
        }
        throw ConfigError("unknown PR specification", "pr");
    }

    /// Explicit positions, a node-list file, or a fresh draw from the
    /// topology stream of `seed`.
    Topology make_topology(std::uint64_t run_seed) const {
        if (positions) return Topology{*positions, radius};
        if (topology_file) {
            std::ifstream in(*topology_file);
            if (!in) throw ConfigError("cannot read '" + *topology_file + "'", "topology_file");
            auto pos = read_node_list(in);
            if (pos.size() != node_count) throw ConfigError("node list size differs from node_count", "topology_file");
            return Topology{std::move(pos), radius};
        }
        auto rng = make_stream(run_seed, streams::topology);
        return generate_topology(node_count, radius, rng);
    }
};

namespace detail {

using nlohmann::json;

inline std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("must be an object", prefix.empty() ? "<root>" : prefix);
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("unknown key", join_path(prefix, k));
    }
}

template <typename T>
T get_or(const json& obj, const std::string& prefix, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    const auto path = join_path(prefix, key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("must be a boolean", path);
        return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("must be an integer", path);
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) return v.get<T>();
            throw ConfigError("must be non-negative", path);
        } else {
            return v.get<T>();
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("must be a number", path);
        return v.get<T>();
    } else {
        if (!v.is_string()) throw ConfigError("must be a string", path);
        return v.get<T>();
    }
}

inline ChannelTransitions parse_transitions(const json& obj, const std::string& prefix) {
    reject_unknown(obj, prefix, {"p_on", "p_off"});
    if (!obj.contains("p_on") || !obj.contains("p_off")) throw ConfigError("needs both p_on and p_off", prefix);
    return {get_or(obj, prefix, "p_on", 0.0), get_or(obj, prefix, "p_off", 0.0)};
}

} // namespace detail

/// Parses a JSON scenario document. Every key is optional except `strategy`;
/// unknown keys are rejected. Throws ConfigError naming the offending key.
inline ScenarioConfig parse_and_validate(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what(), "<document>");
    }
    detail::reject_unknown(doc, "",
                           {"version", "node_count", "channel_count", "radius", "pr", "strategy", "surf", "ca", "sb",
                            "ttl", "window", "jitter", "max_slots", "scheduling", "messages", "background",
                            "estimation", "seed", "positions", "topology_file"});
    ScenarioConfig cfg;
    using detail::get_or;

    const int version = get_or(doc, "", "version", config_schema_version);
    if (version != config_schema_version) {
        throw ConfigError("unsupported schema version " + std::to_string(version), "version");
    }
    cfg.node_count = get_or(doc, "", "node_count", cfg.node_count);
    if (cfg.node_count < 1) throw ConfigError("must be at least 1", "node_count");
    cfg.channel_count = get_or(doc, "", "channel_count", cfg.channel_count);
    if (cfg.channel_count < 1) throw ConfigError("must be at least 1", "channel_count");
    cfg.radius = get_or(doc, "", "radius", cfg.radius);
    if (!(cfg.radius > 0.0) || cfg.radius > std::sqrt(2.0)) throw ConfigError("must lie in (0, sqrt(2)]", "radius");

    if (doc.contains("pr")) {
        const auto& pr = doc.at("pr");
        detail::reject_unknown(pr, "pr", {"load", "occupancy", "p_on", "p_off", "channels", "mean_on_slots"});
        cfg.pr_mean_on_slots = get_or(pr, "pr", "mean_on_slots", cfg.pr_mean_on_slots);
        if (!(cfg.pr_mean_on_slots >= 1.0)) throw ConfigError("must be >= 1", "pr.mean_on_slots");
        const int forms = int(pr.contains("load")) + int(pr.contains("occupancy")) +
                          int(pr.contains("p_on") || pr.contains("p_off")) + int(pr.contains("channels"));
        if (forms > 1) throw ConfigError("give exactly one of load, occupancy, p_on/p_off, channels", "pr");
        if (pr.contains("load")) {
            cfg.pr_spec = PrSpec::load;
            cfg.pr_load = get_or(pr, "pr", "load", 0.0);
            if (cfg.pr_load < 0.0 || cfg.pr_load > static_cast<double>(cfg.channel_count)) {
                throw ConfigError("must lie in [0, channel_count]", "pr.load");
            }
        } else if (pr.contains("channels")) {
            cfg.pr_spec = PrSpec::per_channel;
            const auto& list = pr.at("channels");
            if (!list.is_array()) throw ConfigError("must be an array", "pr.channels");
            if (list.size() != cfg.channel_count) throw ConfigError("needs one entry per channel", "pr.channels");
            for (std::size_t i = 0; i < list.size(); ++i) {
                cfg.pr_channels.push_back(detail::parse_transitions(list[i], "pr.channels[" + std::to_string(i) + "]"));
            }
        } else if (pr.contains("p_on") || pr.contains("p_off")) {
            cfg.pr_spec = PrSpec::transitions;
            json pair = json::object();
            if (pr.contains("p_on")) pair["p_on"] = pr.at("p_on");
            if (pr.contains("p_off")) pair["p_off"] = pr.at("p_off");
            cfg.pr_transitions = detail::parse_transitions(pair, "pr");
        } else if (pr.contains("occupancy")) {
            cfg.pr_spec = PrSpec::occupancy;
            cfg.pr_occupancy = get_or(pr, "pr", "occupancy", 0.0);
            if (cfg.pr_occupancy < 0.0 || cfg.pr_occupancy > 1.0) throw ConfigError("must lie in [0,1]", "pr.occupancy");
        }
    }

    if (!doc.contains("strategy")) throw ConfigError("is required", "strategy");
    cfg.strategy = parse_strategy(get_or<std::string>(doc, "", "strategy", ""));

    if (doc.contains("surf")) {
        const auto& s = doc.at("surf");
        detail::reject_unknown(s, "surf", {"n_ref", "weight_floor"});
        if (s.contains("n_ref")) {
            const auto n_ref = get_or<std::int64_t>(s, "surf", "n_ref", 0);
            if (n_ref < 1) throw ConfigError("must be at least 1", "surf.n_ref");
            cfg.surf.n_ref = static_cast<std::size_t>(n_ref);
            cfg.surf_n_ref_auto = false;
        }
        cfg.surf.weight_floor = get_or(s, "surf", "weight_floor", cfg.surf.weight_floor);
    }
    if (cfg.surf_n_ref_auto) cfg.surf.n_ref = default_n_ref(cfg.node_count, cfg.radius);
    cfg.surf.validate();

    if (doc.contains("ca")) {
        const auto& s = doc.at("ca");
        detail::reject_unknown(s, "ca", {"set_size", "receiver"});
        cfg.ca_set_size = get_or(s, "ca", "set_size", cfg.ca_set_size);
        if (s.contains("receiver")) {
            const auto r = get_or<std::string>(s, "ca", "receiver", "");
            if (r == "single") cfg.ca_receiver = CaReceiver::single;
            else if (r == "multi") cfg.ca_receiver = CaReceiver::multi;
            else throw ConfigError("must be 'single' or 'multi'", "ca.receiver");
        }
    }
    if (cfg.ca_set_size > cfg.channel_count) cfg.ca_set_size = cfg.channel_count;
    if (doc.contains("ca") && doc.at("ca").contains("set_size")) {
        const auto k = doc.at("ca").at("set_size").get<std::size_t>();
        if (k < 1 || k > cfg.channel_count) throw ConfigError("must lie in [1, channel_count]", "ca.set_size");
    }

    if (doc.contains("sb")) {
        const auto& s = doc.at("sb");
        detail::reject_unknown(s, "sb", {"receiver"});
        const auto r = get_or<std::string>(s, "sb", "receiver", "lowest");
        if (r == "lowest") cfg.sb_receiver = SbReceiver::lowest;
        else if (r == "random") cfg.sb_receiver = SbReceiver::random;
        else throw ConfigError("must be 'lowest' or 'random'", "sb.receiver");
    }

    cfg.ttl = get_or(doc, "", "ttl", cfg.ttl);
    if (cfg.ttl < 0) throw ConfigError("must be non-negative", "ttl");
    cfg.window = get_or(doc, "", "window", cfg.window);
    if (cfg.window < 1) throw ConfigError("must be at least 1", "window");
    cfg.jitter = get_or(doc, "", "jitter", cfg.jitter);
    if (cfg.jitter < 1) throw ConfigError("must be at least 1", "jitter");
    cfg.max_slots = get_or(doc, "", "max_slots", cfg.max_slots);
    if (cfg.max_slots < 1) throw ConfigError("must be at least 1", "max_slots");
    if (doc.contains("scheduling")) {
        const auto s = get_or<std::string>(doc, "", "scheduling", "");
        if (s == "jitter") cfg.scheduling = Scheduling::jitter;
        else if (s == "serial") cfg.scheduling = Scheduling::serial;
        else throw ConfigError("must be 'jitter' or 'serial'", "scheduling");
    }
    if (doc.contains("estimation")) {
        const auto s = get_or<std::string>(doc, "", "estimation", "");
        if (s == "oracle") cfg.estimation = EstimationMode::oracle;
        else if (s == "sampled") cfg.estimation = EstimationMode::sampled;
        else throw ConfigError("must be 'oracle' or 'sampled'", "estimation");
    }
    cfg.seed = get_or(doc, "", "seed", cfg.seed);

    if (doc.contains("messages")) {
        const auto& m = doc.at("messages");
        detail::reject_unknown(m, "messages", {"origins", "count", "interval", "start_slot"});
        if (m.contains("origins")) {
            const auto& o = m.at("origins");
            if (!o.is_array() || o.empty()) throw ConfigError("must be a non-empty array", "messages.origins");
            cfg.messages.origins.clear();
            for (const auto& v : o) {
                if (!v.is_number_unsigned()) throw ConfigError("must hold node ids", "messages.origins");
                cfg.messages.origins.push_back(v.get<NodeId>());
            }
        }
        cfg.messages.count = get_or(m, "messages", "count", cfg.messages.count);
        cfg.messages.interval = get_or(m, "messages", "interval", cfg.messages.interval);
        cfg.messages.start_slot = get_or(m, "messages", "start_slot", cfg.messages.start_slot);
        if (cfg.messages.count < 1) throw ConfigError("must be at least 1", "messages.count");
        if (cfg.messages.interval < 1) throw ConfigError("must be at least 1", "messages.interval");
    }
    std::set<NodeId> distinct_origins;
    for (NodeId o : cfg.messages.origins) {
        if (o >= cfg.node_count) throw ConfigError("origin " + std::to_string(o) + " >= node_count", "messages.origins");
        if (!distinct_origins.insert(o).second) throw ConfigError("duplicate origin", "messages.origins");
    }

    if (doc.contains("background")) {
        const auto& b = doc.at("background");
        detail::reject_unknown(b, "background", {"competitors"});
        cfg.competitors = get_or(b, "background", "competitors", cfg.competitors);
        if (cfg.competitors + cfg.messages.origins.size() > cfg.node_count) {
            throw ConfigError("more competitors than non-origin nodes", "background.competitors");
        }
    }

    if (doc.contains("positions") && doc.contains("topology_file")) {
        throw ConfigError("give at most one of positions, topology_file", "positions");
    }
    if (doc.contains("positions")) {
        const auto& p = doc.at("positions");
        if (!p.is_array() || p.size() != cfg.node_count) throw ConfigError("needs node_count [x, y] pairs", "positions");
        std::vector<Position> pos;
        for (const auto& xy : p) {
            if (!xy.is_array() || xy.size() != 2 || !xy[0].is_number() || !xy[1].is_number()) {
                throw ConfigError("entries must be [x, y] number pairs", "positions");
            }
            pos.push_back({xy[0].get<double>(), xy[1].get<double>()});
        }
        cfg.positions = std::move(pos);
    }
    if (doc.contains("topology_file")) cfg.topology_file = get_or<std::string>(doc, "", "topology_file", "");

    // Construct the PR model once so transition-probability errors surface here.
    (void)cfg.pr_model();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'", "config");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_and_validate(text.str());
}

/// Canonical JSON form with every default spelled out (keys sorted).
inline nlohmann::json to_json(const ScenarioConfig& cfg) {
    using nlohmann::json;
    json j;
    j["version"] = config_schema_version;
    j["node_count"] = cfg.node_count;
    j["channel_count"] = cfg.channel_count;
    j["radius"] = cfg.radius;
    json pr;
    pr["mean_on_slots"] = cfg.pr_mean_on_slots;
    switch (cfg.pr_spec) {
    case PrSpec::load: pr["load"] = cfg.pr_load; break;
    case PrSpec::occupancy: pr["occupancy"] = cfg.pr_occupancy; break;
    case PrSpec::transitions:
        pr["p_on"] = cfg.pr_transitions.p_on;
        pr["p_off"] = cfg.pr_transitions.p_off;
        break;
    case PrSpec::per_channel:
        pr["channels"] = json::array();
        for (const auto& t : cfg.pr_channels) pr["channels"].push_back({{"p_on", t.p_on}, {"p_off", t.p_off}});
        break;
    }
    j["pr"] = pr;
    j["strategy"] = std::string(to_string(cfg.strategy));
    j["surf"] = {{"n_ref", cfg.surf.n_ref}, {"weight_floor", cfg.surf.weight_floor}};
    j["ca"] = {{"set_size", cfg.ca_set_size}, {"receiver", cfg.ca_receiver == CaReceiver::multi ? "multi" : "single"}};
    j["sb"] = {{"receiver", cfg.sb_receiver == SbReceiver::random ? "random" : "lowest"}};
    j["ttl"] = cfg.ttl;
    j["window"] = cfg.window;
    j["jitter"] = cfg.jitter;
    j["max_slots"] = cfg.max_slots;
    j["scheduling"] = cfg.scheduling == Scheduling::serial ? "serial" : "jitter";
    j["messages"] = {{"origins", cfg.messages.origins},
                     {"count", cfg.messages.count},
                     {"interval", cfg.messages.interval},
                     {"start_slot", cfg.messages.start_slot}};
    j["background"] = {{"competitors", cfg.competitors}};
    j["estimation"] = cfg.estimation == EstimationMode::sampled ? "sampled" : "oracle";
    j["seed"] = cfg.seed;
    if (cfg.positions) {
        j["positions"] = json::array();
        for (const auto& p : *cfg.positions) j["positions"].push_back({p.x, p.y});
    }
    if (cfg.topology_file) j["topology_file"] = *cfg.topology_file;
    return j;
}

/// FNV-1a over the canonical JSON dump.
inline std::uint64_t config_hash(const ScenarioConfig& cfg) {
    return detail::fnv1a(to_json(cfg).dump());
}

} // namespace surfsim
