#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "surfsim/config.hpp"
#include "surfsim/engine.hpp"
#include "surfsim/metrics.hpp"
#include "surfsim/trace.hpp"

#ifndef SURFSIM_VERSION
#define SURFSIM_VERSION "dev"
#endif

namespace surfsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* tool_version = SURFSIM_VERSION;

/// One swept parameter assignment: dotted config path -> JSON value.
using Assignment = std::vector<std::pair<std::string, json>>;

struct SweepSpec {
    std::vector<std::pair<std::string, std::vector<json>>> params; // key order
    std::vector<std::uint64_t> seeds;
};

struct Cell {
    std::size_t index = 0;
    Assignment assignment;
    ScenarioConfig config;
};

struct RunOutput {
    std::size_t cell = 0;
    std::uint64_t seed = 0;
    MetricsReport report;
    std::string trace_log; // empty unless traces were requested
};

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

inline std::string num(double v) { return surfsim::detail::format_double(v); }

/// Sets `path` ("a.b.c") inside `doc`, creating intermediate objects.
inline void set_path(json& doc, const std::string& path, const json& value) {
    json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("malformed parameter path", path);
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key)) (*cur)[key] = json::object();
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

/// Sweep file: {"params": {"<dotted key>": [values...], ...},
///              "seeds": [s, ...] | {"from": a, "to": b}}
/// Parameters cross in key order, the last key varying fastest.
inline SweepSpec parse_sweep(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what(), "sweep");
    }
    surfsim::detail::reject_unknown(doc, "sweep", {"params", "seeds"});
    SweepSpec spec;
    if (doc.contains("params")) {
        const auto& p = doc.at("params");
        if (!p.is_object()) throw ConfigError("must be an object", "sweep.params");
        // nlohmann's default object is key-sorted; keep that as the canonical order.
        for (const auto& [key, values] : p.items()) {
            if (!values.is_array() || values.empty()) throw ConfigError("must be a non-empty array", "sweep.params." + key);
            spec.params.emplace_back(key, std::vector<json>(values.begin(), values.end()));
        }
    }
    if (!doc.contains("seeds")) throw ConfigError("is required", "sweep.seeds");
    const auto& s = doc.at("seeds");
    if (s.is_array()) {
        for (const auto& v : s) {
            if (!v.is_number_unsigned()) throw ConfigError("must be non-negative integers", "sweep.seeds");
            spec.seeds.push_back(v.get<std::uint64_t>());
        }
    } else if (s.is_object() && s.contains("from") && s.contains("to")) {
        surfsim::detail::reject_unknown(s, "sweep.seeds", {"from", "to"});
        const auto from = s.at("from").get<std::uint64_t>();
        const auto to = s.at("to").get<std::uint64_t>();
        if (to < from) throw ConfigError("'to' must not precede 'from'", "sweep.seeds");
        for (auto v = from; v <= to; ++v) spec.seeds.push_back(v);
    } else {
        throw ConfigError("must be an array or {from, to}", "sweep.seeds");
    }
    if (spec.seeds.empty()) throw ConfigError("needs at least one seed", "sweep.seeds");
    return spec;
}

inline std::vector<Cell> expand_cells(const std::string& config_text, const SweepSpec& spec) {
    json base;
    try {
        base = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what(), "<document>");
    }
    std::vector<Assignment> assignments{{}};
    for (const auto& [key, values] : spec.params) {
        std::vector<Assignment> next;
        for (const auto& a : assignments) {
            for (const auto& v : values) {
                auto b = a;
                b.emplace_back(key, v);
                next.push_back(std::move(b));
            }
        }
        assignments = std::move(next);
    }
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        json doc = base;
        for (const auto& [key, value] : assignments[i]) set_path(doc, key, value);
        cells.push_back({i, assignments[i], parse_and_validate(doc.dump())});
    }
    return cells;
}

inline std::string label(const Assignment& a) {
    std::string out;
    for (const auto& [k, v] : a) {
        if (!out.empty()) out += ';';
        out += k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    }
    return out;
}

/// Runs every (cell, seed) pair on up to `workers` threads. Results come back
/// in canonical (cell, seed) order whatever the interleaving was.
inline std::vector<RunOutput> execute(const std::vector<Cell>& cells, const std::vector<std::uint64_t>& seeds,
                                      std::size_t workers, bool keep_traces) {
    const std::size_t total = cells.size() * seeds.size();
    std::vector<std::optional<RunOutput>> results(total);
    std::vector<std::string> errors(total);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto work = [&] {
        while (!failed.load()) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            const auto& cell = cells[job / seeds.size()];
            const auto seed = seeds[job % seeds.size()];
            try {
                auto trace = run_dissemination(cell.config, seed);
                RunOutput out{cell.index, seed, compute_report(trace), {}};
                if (keep_traces) out.trace_log = trace_to_string(trace);
                results[job] = std::move(out);
            } catch (const std::exception& e) {
                errors[job] = e.what();
                failed.store(true);
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, total));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }

    if (failed.load()) {
        std::ostringstream msg;
        for (std::size_t j = 0; j < total; ++j) {
            if (!errors[j].empty()) {
                msg << "run failed (cell " << j / seeds.size() << ", seed " << seeds[j % seeds.size()]
                    << "): " << errors[j] << "\n";
            }
        }
        msg << "completed cells:";
        bool any = false;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            bool done = true;
            for (std::size_t s = 0; s < seeds.size(); ++s) done = done && results[c * seeds.size() + s].has_value();
            if (done) {
                msg << ' ' << c;
                any = true;
            }
        }
        if (!any) msg << " none";
        throw std::runtime_error(msg.str());
    }
    std::vector<RunOutput> out;
    out.reserve(total);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

namespace csv {

inline std::string run_prefix(const RunOutput& r) {
    const auto& m = r.report;
    return std::to_string(r.cell) + ',' + m.strategy + ',' + std::to_string(m.channel_count) + ',' +
           std::to_string(m.node_count) + ',' + std::to_string(r.seed) + ',' + std::to_string(m.ttl) + ',';
}

inline std::string cell_prefix(std::size_t cell, const AggregateReport& a) {
    return std::to_string(cell) + ',' + a.strategy + ',' + std::to_string(a.channel_count) + ',' +
           std::to_string(a.node_count) + ',' + std::to_string(a.ttl) + ',' + std::to_string(a.runs) + ',';
}

} // namespace csv

/// Writes per-run and per-cell CSVs plus manifest.json into `out_dir`:
///
///   accumulative_receivers.csv  cell,strategy,channel_count,node_count,seed,ttl,hop,receivers
///   delivery_ratio.csv          cell,strategy,channel_count,node_count,seed,ttl,node,ratio
///   delivery_ratio_sorted.csv   cell,strategy,channel_count,node_count,seed,ttl,rank,ratio
///   runs.csv                    cell,...,ttl,final_receivers,final_fraction,source_delivery,
///                               transmissions,pr_interrupts,truncated
///   summary_*.csv               the same metrics as mean,stddev across seeds per cell
///   cells.csv                   cell,parameters
inline void write_outputs(const fs::path& out_dir, const std::vector<Cell>& cells,
                          const std::vector<std::uint64_t>& seeds, const std::vector<RunOutput>& runs,
                          const json& manifest_extra, bool emit_traces) {
    fs::create_directories(out_dir);
    const std::string run_cols = "cell,strategy,channel_count,node_count,seed,ttl,";
    const std::string cell_cols = "cell,strategy,channel_count,node_count,ttl,runs,";

    std::string acc = run_cols + "hop,receivers\n";
    std::string dr = run_cols + "node,ratio\n";
    std::string drs = run_cols + "rank,ratio\n";
    std::string rs = run_cols + "final_receivers,final_fraction,source_delivery,transmissions,pr_interrupts,truncated\n";
    for (const auto& r : runs) {
        const auto p = csv::run_prefix(r);
        const auto& m = r.report;
        for (std::size_t h = 0; h < m.accumulative_receivers.size(); ++h) {
            acc += p + std::to_string(h) + ',' + num(m.accumulative_receivers[h]) + '\n';
        }
        std::vector<double> sorted;
        for (const auto& [n, v] : m.per_node_delivery) {
            dr += p + std::to_string(n) + ',' + num(v) + '\n';
            sorted.push_back(v);
        }
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        for (std::size_t i = 0; i < sorted.size(); ++i) drs += p + std::to_string(i) + ',' + num(sorted[i]) + '\n';
        rs += p + num(m.final_receivers()) + ',' + num(m.final_fraction()) + ',' +
              (m.source_delivery ? num(*m.source_delivery) : std::string()) + ',' + std::to_string(m.transmissions) +
              ',' + std::to_string(m.pr_interrupts) + ',' + (m.truncated ? "1" : "0") + '\n';
    }

    std::string sacc = cell_cols + "hop,mean,stddev\n";
    std::string sdr = cell_cols + "node,mean,stddev\n";
    std::string sdrs = cell_cols + "rank,mean\n";
    std::string srs = cell_cols + "final_fraction_mean,final_fraction_stddev,source_delivery_mean,"
                                  "source_delivery_stddev,source_delivery_runs\n";
    std::string cells_csv = "cell,parameters\n";
    for (const auto& cell : cells) {
        std::vector<MetricsReport> reports;
        for (const auto& r : runs) {
            if (r.cell == cell.index) reports.push_back(r.report);
        }
        const auto agg = aggregate_runs(reports);
        const auto p = csv::cell_prefix(cell.index, agg);
        for (std::size_t h = 0; h < agg.accumulative_receivers.size(); ++h) {
            sacc += p + std::to_string(h) + ',' + num(agg.accumulative_receivers[h].mean) + ',' +
                    num(agg.accumulative_receivers[h].stddev) + '\n';
        }
        std::vector<double> means;
        for (const auto& [n, s] : agg.per_node_delivery) {
            sdr += p + std::to_string(n) + ',' + num(s.mean) + ',' + num(s.stddev) + '\n';
            means.push_back(s.mean);
        }
        std::sort(means.begin(), means.end(), std::greater<>());
        for (std::size_t i = 0; i < means.size(); ++i) sdrs += p + std::to_string(i) + ',' + num(means[i]) + '\n';
        srs += p + num(agg.final_fraction.mean) + ',' + num(agg.final_fraction.stddev) + ',' +
               num(agg.source_delivery.mean) + ',' + num(agg.source_delivery.stddev) + ',' +
               std::to_string(agg.source_delivery.count) + '\n';
        cells_csv += std::to_string(cell.index) + ',' + label(cell.assignment) + '\n';
    }

    write_file(out_dir / "accumulative_receivers.csv", acc);
    write_file(out_dir / "delivery_ratio.csv", dr);
    write_file(out_dir / "delivery_ratio_sorted.csv", drs);
    write_file(out_dir / "runs.csv", rs);
    write_file(out_dir / "summary_accumulative_receivers.csv", sacc);
    write_file(out_dir / "summary_delivery_ratio.csv", sdr);
    write_file(out_dir / "summary_delivery_ratio_sorted.csv", sdrs);
    write_file(out_dir / "summary_runs.csv", srs);
    write_file(out_dir / "cells.csv", cells_csv);

    json files = json::array({"accumulative_receivers.csv", "delivery_ratio.csv", "delivery_ratio_sorted.csv",
                              "runs.csv", "summary_accumulative_receivers.csv", "summary_delivery_ratio.csv",
                              "summary_delivery_ratio_sorted.csv", "summary_runs.csv", "cells.csv"});
    if (emit_traces) {
        if (runs.size() == 1) {
            write_file(out_dir / "trace.log", runs.front().trace_log);
            files.push_back("trace.log");
        } else {
            fs::create_directories(out_dir / "traces");
            for (const auto& r : runs) {
                const auto name =
                    "traces/cell" + std::to_string(r.cell) + "_seed" + std::to_string(r.seed) + ".log";
                write_file(out_dir / name, r.trace_log);
                files.push_back(name);
            }
        }
    }

    json manifest = manifest_extra;
    manifest["tool"] = "surfsim";
    manifest["version"] = tool_version;
    manifest["seeds"] = seeds;
    manifest["files"] = files;
    json cell_list = json::array();
    for (const auto& cell : cells) {
        cell_list.push_back({{"cell", cell.index},
                             {"parameters", label(cell.assignment)},
                             {"config_hash", hex64(config_hash(cell.config))}});
    }
    manifest["cells"] = cell_list;
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool emit_trace = false;
};

inline int run_command(const RunOptions& opt, std::ostream& err) {
    try {
        const auto text = read_file(opt.config_path);
        auto cells = expand_cells(text, SweepSpec{{}, {}});
        const auto seed = opt.seed.value_or(cells.front().config.seed);
        const std::vector<std::uint64_t> seeds{seed};
        const auto runs = execute(cells, seeds, 1, opt.emit_trace);
        json extra;
        extra["command"] = "run";
        extra["config_hash"] = hex64(config_hash(cells.front().config));
        write_outputs(opt.out_dir, cells, seeds, runs, extra, opt.emit_trace);
        return 0;
    } catch (const std::exception& e) {
        err << "surfsim run: " << e.what() << "\n";
        return 1;
    }
}

struct SweepOptions {
    std::string config_path;
    std::string sweep_path;
    std::string out_dir;
    std::size_t workers = 1;
    bool emit_trace = false;
};

inline int sweep_command(const SweepOptions& opt, std::ostream& err) {
    try {
        const auto text = read_file(opt.config_path);
        const auto spec_text = read_file(opt.sweep_path);
        const auto spec = parse_sweep(spec_text);
        const auto cells = expand_cells(text, spec);
        const auto runs = execute(cells, spec.seeds, opt.workers, opt.emit_trace);
        json extra;
        extra["command"] = "sweep";
        extra["config_hash"] = hex64(surfsim::detail::fnv1a(json::parse(text).dump()));
        extra["sweep_hash"] = hex64(surfsim::detail::fnv1a(json::parse(spec_text).dump()));
        write_outputs(opt.out_dir, cells, spec.seeds, runs, extra, opt.emit_trace);
        return 0;
    } catch (const std::exception& e) {
        err << "surfsim sweep: " << e.what() << "\n";
        return 1;
    }
}

inline int validate_command(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = parse_and_validate(read_file(config_path));
        out << to_json(cfg).dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "surfsim validate: " << e.what() << "\n";
        return 1;
    }
}

/// Recomputes the metric CSVs from a saved trace log.
inline int trace_replay_command(const std::string& trace_path, const std::string& out_dir, std::ostream& err) {
    try {
        std::ifstream in(trace_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read '" + trace_path + "'");
        const auto trace = read_trace(in);
        if (const auto issues = audit_trace(trace); !issues.empty()) {
            throw std::runtime_error("inconsistent trace: " + issues.front());
        }
        std::vector<Cell> cells(1);
        const std::vector<std::uint64_t> seeds{trace.seed};
        const std::vector<RunOutput> runs{{0, trace.seed, compute_report(trace), {}}};
        json extra;
        extra["command"] = "trace-replay";
        extra["trace"] = fs::path(trace_path).filename().string();
        write_outputs(out_dir, cells, seeds, runs, extra, false);
        return 0;
    } catch (const std::exception& e) {
        err << "surfsim trace-replay: " << e.what() << "\n";
        return 1;
    }
}

} // namespace surfsim::cli
