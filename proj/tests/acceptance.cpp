// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "surfsim/surfsim.hpp"

using namespace surfsim;
namespace fs = std::filesystem;

namespace {

const fs::path config_dir = SURFSIM_CONFIG_DIR;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_p(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", p);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
    return out;
}

// Every trace produced anywhere in the suite, for the invariant sweep.
std::vector<SimTrace> all_traces;

struct Headline {
    std::vector<cli::Cell> cells;
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::vector<MetricsReport>> by_strategy;
    std::map<std::string, std::vector<SimTrace>> traces;
};

Headline run_headline() {
    Headline h;
    const auto text = slurp(config_dir / "headline.json");
    const auto spec = cli::parse_sweep(slurp(config_dir / "strategies_sweep.json"));
    h.cells = cli::expand_cells(text, spec);
    h.seeds = spec.seeds;
    const auto runs = cli::execute(h.cells, h.seeds, 4, true);
    for (const auto& r : runs) {
        h.by_strategy[r.report.strategy].push_back(r.report);
        std::istringstream in(r.trace_log);
        auto t = read_trace(in);
        h.traces[r.report.strategy].push_back(t);
        all_traces.push_back(std::move(t));
    }
    return h;
}

std::vector<double> finals(const std::vector<MetricsReport>& rs) {
    std::vector<double> out;
    for (const auto& r : rs) out.push_back(r.final_receivers());
    return out;
}

double mean(const std::vector<double>& v) { return summarize(v).mean; }

Verdict ordering(const Headline& h) {
    const auto surf = finals(h.by_strategy.at("surf"));
    const auto rd = finals(h.by_strategy.at("rd"));
    const auto sb = finals(h.by_strategy.at("sb"));
    const auto ca = finals(h.by_strategy.at("ca"));
    const double p_ca = oracle::mann_whitney_p(ca, surf);
    const double p_rd = oracle::mann_whitney_p(surf, rd);
    const double p_sb = oracle::mann_whitney_p(surf, sb);
    const bool ok = surf.size() == 30 && mean(ca) >= mean(surf) && mean(surf) > mean(rd) && mean(surf) > mean(sb) &&
                    p_ca < 0.05 && p_rd < 0.05 && p_sb < 0.05;
    return {ok, "mean final receivers CA " + fmt(mean(ca), 1) + ", SURF " + fmt(mean(surf), 1) + ", RD " +
                    fmt(mean(rd), 1) + ", SB " + fmt(mean(sb), 1) + "; p(CA,SURF)=" + fmt_p(p_ca) +
                    " p(SURF,RD)=" + fmt_p(p_rd) + " p(SURF,SB)=" + fmt_p(p_sb)};
}

Verdict ca_plateau(const Headline& h) {
    const auto& ca = h.by_strategy.at("ca");
    std::size_t plateaued = 0;
    for (const auto& r : ca) {
        const auto& acc = r.accumulative_receivers;
        const double tail = acc.back() - acc.at(std::min<std::size_t>(5, acc.size() - 1));
        if (tail < 0.02 * static_cast<double>(r.node_count)) ++plateaued;
    }
    const double share = static_cast<double>(plateaued) / static_cast<double>(ca.size());
    return {share >= 0.8, std::to_string(plateaued) + "/" + std::to_string(ca.size()) +
                              " CA seeds gain < 2% of N after hop 5"};
}

Verdict magnitude(const Headline& h) {
    std::vector<double> surf_frac, ca_frac, connected;
    for (const auto& r : h.by_strategy.at("surf")) surf_frac.push_back(r.final_fraction());
    for (const auto& r : h.by_strategy.at("ca")) ca_frac.push_back(r.final_fraction());
    for (const auto& t : h.traces.at("surf")) connected.push_back(t.topology().connected_fraction(t.messages.front().origin));
    const double s = mean(surf_frac);
    const double gap = mean(ca_frac) - s;
    const double conn = mean(connected);
    const bool ok = s >= 0.35 && s <= 0.75 && gap >= 0.10 && gap <= 0.40 && conn >= 0.9;
    return {ok, "SURF fraction " + fmt(s) + ", CA - SURF " + fmt(gap) + ", mean connected_fraction " + fmt(conn) +
                    " (radius " + fmt(h.cells.front().config.radius, 3) + ", calibrated)"};
}

Verdict contention() {
    const auto cfg = load_config((config_dir / "contention.json").string());
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 30; ++s) seeds.push_back(s);
    const std::vector<std::size_t> counts{0, 2, 4, 8, 16};
    const auto rows = contention_curve(cfg, counts, seeds);
    bool ok = rows.size() == counts.size() && rows.front().delivery.mean >= 0.95;
    std::string curve;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].delivery.mean > rows[i - 1].delivery.mean + 0.05) ok = false;
        curve += (i ? ", " : "") + std::to_string(rows[i].competitors) + ":" + fmt(rows[i].delivery.mean);
    }
    // Keep the contention traces for the invariant sweep.
    for (std::size_t k : counts) {
        auto c = cfg;
        c.competitors = k;
        for (auto s : seeds) all_traces.push_back(run_dissemination(c, s));
    }
    return {ok, "source delivery by competitors {" + curve + "}"};
}

Verdict channel_count_effect() {
    const double load = 2.5;
    auto measured = [&](std::size_t ch) {
        const auto model = PrActivityModel::from_load(ch, load, 10);
        auto rng = make_stream(77, streams::pr);
        auto s = model.initial_state(rng);
        std::size_t on = 0;
        const std::size_t slots = 100'000;
        for (std::size_t t = 0; t < slots; ++t) {
            s = step_pr_activity(model, s, rng);
            for (ChannelId c = 0; c < ch; ++c) on += s.on(c) ? 1 : 0;
        }
        return static_cast<double>(on) / static_cast<double>(slots * ch);
    };
    const double o5 = measured(5);
    const double o15 = measured(15);
    const double ratio = o5 / o15;
    const double rel = std::abs(ratio - 3.0) / 3.0;
    return {o15 < o5 && rel <= 0.05, "occupancy Ch=5 " + fmt(o5, 4) + ", Ch=15 " + fmt(o15, 4) + ", ratio " +
                                         fmt(ratio) + " (relative error " + fmt(100 * rel, 2) + "%)"};
}

Verdict oracle_equivalence() {
    auto pick = make_stream(4242, streams::decision);
    const char* strategies[] = {"surf", "rd", "sb", "ca"};
    std::size_t instances = 0, slots = 0, mismatches = 0;
    for (std::uint64_t seed = 1; seed <= 240; ++seed) {
        const std::size_t n = 1 + uniform_index(pick, 6);
        const std::size_t ch = 1 + uniform_index(pick, 3);
        nlohmann::json j{
            {"node_count", n},
            {"channel_count", ch},
            {"radius", 0.3 + 0.1 * static_cast<double>(uniform_index(pick, 6))},
            {"strategy", strategies[seed % 4]},
            {"pr", {{"occupancy", 0.1 * static_cast<double>(uniform_index(pick, 6))}, {"mean_on_slots", 3}}},
            {"ttl", 1 + uniform_index(pick, 4)},
            {"max_slots", 10 + uniform_index(pick, 41)},
            {"ca", {{"set_size", 1 + uniform_index(pick, ch)}, {"receiver", seed % 8 < 4 ? "single" : "multi"}}},
            {"sb", {{"receiver", seed % 3 == 0 ? "random" : "lowest"}}},
            {"messages", {{"count", 1 + uniform_index(pick, 3)}, {"interval", 2}}}};
        const auto t = run_dissemination(parse_and_validate(j.dump()), seed);
        ++instances;
        for (const auto& rec : t.slots) {
            ++slots;
            if (oracle::engine_deliveries(rec) != oracle::resolve(t, rec)) ++mismatches;
        }
        if (oracle::engine_receptions(t) != oracle::first_receptions(t)) ++mismatches;
        all_traces.push_back(t);
    }

    std::size_t covers = 0, bound_violations = 0, uncovered = 0;
    auto rng = make_stream(99, streams::decision);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t channels = 1 + uniform_index(rng, 6);
        const std::size_t nb = 1 + uniform_index(rng, 4);
        NeighborAvailability avail;
        for (NodeId v = 0; v < nb; ++v) {
            std::set<ChannelId> s;
            for (ChannelId c = 0; c < channels; ++c) {
                if (bernoulli(rng, 0.35)) s.insert(c);
            }
            if (s.empty()) s.insert(uniform_index(rng, channels));
            avail[v] = s;
        }
        const auto ecs = compute_ecs_sb(avail);
        const std::set<ChannelId> chosen(ecs.begin(), ecs.end());
        for (const auto& [v, s] : avail) {
            bool hit = false;
            for (ChannelId c : s) hit = hit || chosen.count(c);
            if (!hit) ++uncovered;
        }
        const auto best = oracle::min_cover_size(avail, channels);
        if (static_cast<double>(ecs.size()) > static_cast<double>(best) * oracle::harmonic(4)) ++bound_violations;
        ++covers;
    }
    const bool ok = instances >= 200 && mismatches == 0 && uncovered == 0 && bound_violations == 0;
    return {ok, std::to_string(instances) + " engine instances / " + std::to_string(slots) + " slots, " +
                    std::to_string(mismatches) + " mismatches; " + std::to_string(covers) + " ECS instances, " +
                    std::to_string(uncovered) + " uncovered, " + std::to_string(bound_violations) +
                    " over the greedy bound"};
}

Verdict determinism() {
    const auto base = fs::temp_directory_path() / "surfsim_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    std::ostringstream err;
    const auto cfg = (config_dir / "headline.json").string();
    const auto sweep = (config_dir / "strategies_sweep.json").string();
    const int a = cli::sweep_command({cfg, sweep, (base / "serial1").string(), 1, true}, err);
    const int b = cli::sweep_command({cfg, sweep, (base / "serial2").string(), 1, true}, err);
    const int c = cli::sweep_command({cfg, sweep, (base / "workers8").string(), 8, true}, err);
    const int d = cli::run_command({cfg, 17, (base / "run1").string(), true}, err);
    const int e = cli::run_command({cfg, 17, (base / "run2").string(), true}, err);
    bool ok = a == 0 && b == 0 && c == 0 && d == 0 && e == 0;
    std::size_t files = 0;
    if (ok) {
        const auto s1 = dir_contents(base / "serial1");
        files = s1.size();
        ok = s1 == dir_contents(base / "serial2") && s1 == dir_contents(base / "workers8") &&
             dir_contents(base / "run1") == dir_contents(base / "run2");
    }
    fs::remove_all(base);
    return {ok, std::to_string(files) + " sweep files (CSVs and trace logs) identical across serial, serial and 8 workers" +
                    (err.str().empty() ? "" : "; " + err.str())};
}

Verdict invariants() {
    std::size_t pr_deliveries = 0, monotone = 0, bound = 0, ratio = 0, duplicates = 0, audit = 0;
    for (const auto& t : all_traces) {
        for (const auto& rec : t.slots) {
            for (const auto& tx : rec.transmissions) {
                if (rec.pr.on(tx.channel) && !tx.delivered_to.empty()) ++pr_deliveries;
            }
        }
        const auto r = compute_report(t);
        for (std::size_t h = 1; h < r.accumulative_receivers.size(); ++h) {
            if (r.accumulative_receivers[h] < r.accumulative_receivers[h - 1]) ++monotone;
        }
        if (r.final_receivers() > static_cast<double>(t.node_count()) - 1.0) ++bound;
        for (const auto& [n, v] : r.per_node_delivery) {
            if (v < 0.0 || v > 1.0) ++ratio;
        }
        duplicates += duplicate_rebroadcasts(t);
        audit += audit_trace(t).empty() ? 0 : 1;
    }
    const bool ok = !all_traces.empty() && pr_deliveries + monotone + bound + ratio + duplicates + audit == 0;
    return {ok, std::to_string(all_traces.size()) + " traces: " + std::to_string(pr_deliveries) +
                    " PR-ON deliveries, " + std::to_string(monotone) + " non-monotone steps, " +
                    std::to_string(bound) + " over N-1, " + std::to_string(ratio) + " ratios outside [0,1], " +
                    std::to_string(duplicates) + " duplicate rebroadcasts, " + std::to_string(audit) +
                    " failed audits"};
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    bool all = true;
    auto report = [&](int n, const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        all = all && v.pass;
        std::printf("[%s] criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str());
        std::fflush(stdout);
    };

    Headline headline;
    try {
        headline = run_headline();
    } catch (const std::exception& e) {
        std::printf("headline sweep failed: %s\n", e.what());
    }
    auto needs_headline = [&](auto fn) {
        return [&, fn]() -> Verdict {
            if (headline.by_strategy.size() != 4) return {false, "headline sweep unavailable"};
            return fn(headline);
        };
    };
    report(1, "strategy ordering", needs_headline(ordering));
    report(2, "CA plateau", needs_headline(ca_plateau));
    report(3, "magnitude band", needs_headline(magnitude));
    report(4, "contention curve", contention);
    report(5, "channel-count effect", channel_count_effect);
    report(6, "oracle equivalence", oracle_equivalence);
    report(7, "determinism", determinism);
    report(8, "invariant suite", invariants);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool fast = secs < 120.0;
    std::printf("[%s] runtime %.1f s (budget 120 s)\n", fast ? "PASS" : "FAIL", secs);
    return all && fast ? 0 : 1;
}
