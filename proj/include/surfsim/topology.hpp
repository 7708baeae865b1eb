#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "surfsim/errors.hpp"
#include "surfsim/rng.hpp"

namespace surfsim {

using NodeId = std::size_t;

struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Static CR node placement on the unit square with unit-disk connectivity:
/// u and v are adjacent iff u != v and distance(u, v) <= radius.
class Topology {
public:
    Topology(std::vector<Position> positions, double radius) : positions_(std::move(positions)), radius_(radius) {
        if (positions_.empty()) throw EmptyTopologyError("topology needs at least one node");
        if (!(radius_ > 0.0)) throw ConfigError("must be positive", "radius");
        const auto n = positions_.size();
        adjacency_.resize(n);
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = u + 1; v < n; ++v) {
                if (distance(positions_[u], positions_[v]) <= radius_) {
                    adjacency_[u].push_back(v);
                    adjacency_[v].push_back(u);
                }
            }
        }
    }

    std::size_t size() const noexcept { return positions_.size(); }
    double radius() const noexcept { return radius_; }
    const std::vector<Position>& positions() const noexcept { return positions_; }

    const Position& position(NodeId id) const {
        check(id);
        return positions_[id];
    }

    /// Sorted ascending; never contains `id`.
    const std::vector<NodeId>& neighbors(NodeId id) const {
        check(id);
        return adjacency_[id];
    }

    bool adjacent(NodeId u, NodeId v) const {
        check(u);
        check(v);
        const auto& nb = adjacency_[u];
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    /// Hop distance from `source` to every node; -1 where unreachable.
    std::vector<int> hop_distances(NodeId source) const {
        check(source);
        std::vector<int> dist(size(), -1);
        std::queue<NodeId> frontier;
        dist[source] = 0;
        frontier.push(source);
        while (!frontier.empty()) {
            const NodeId u = frontier.front();
            frontier.pop();
            for (NodeId v : adjacency_[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    frontier.push(v);
                }
            }
        }
        return dist;
    }

    /// Fraction of the other N-1 nodes reachable from `source`.
    double connected_fraction(NodeId source) const {
        if (size() == 1) {
            check(source);
            return 0.0;
        }
        const auto dist = hop_distances(source);
        std::size_t reached = 0;
        for (NodeId v = 0; v < size(); ++v) {
            if (v != source && dist[v] >= 0) ++reached;
        }
        return static_cast<double>(reached) / static_cast<double>(size() - 1);
    }

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.radius_ == b.radius_ && a.positions_ == b.positions_;
    }

private:
    void check(NodeId id) const {
        if (id >= size()) {
            throw ConfigError("node id " + std::to_string(id) + " out of range (N=" + std::to_string(size()) + ")",
                              "node_id");
        }
    }

    std::vector<Position> positions_;
    double radius_;
    std::vector<std::vector<NodeId>> adjacency_;
};

/// n positions drawn i.i.d. uniform on the unit square.
inline Topology generate_topology(std::size_t n, double radius, RngStream& rng) {
    if (n == 0) throw EmptyTopologyError("topology needs at least one node");
    if (!(radius > 0.0) || radius > std::sqrt(2.0)) throw ConfigError("must lie in (0, sqrt(2)]", "radius");
    std::uniform_real_distribution<double> coord{0.0, 1.0};
    std::vector<Position> positions(n);
    for (auto& p : positions) {
        p.x = coord(rng);
        p.y = coord(rng);
    }
    return Topology{std::move(positions), radius};
}

// Plain-text node list: "<id> <x> <y>" per line, '#' comments allowed.
// Coordinates are written with max_digits10 so a dump reloads exactly.
inline void write_node_list(std::ostream& out, const Topology& topo) {
    std::ostringstream line;
    line.precision(17);
    out << "# id x y\n";
    for (NodeId id = 0; id < topo.size(); ++id) {
        line.str({});
        line << id << ' ' << topo.position(id).x << ' ' << topo.position(id).y << '\n';
        out << line.str();
    }
}

inline std::vector<Position> read_node_list(std::istream& in) {
    std::vector<Position> positions;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.empty() || text[0] == '#') continue;
        std::istringstream fields(text);
        std::size_t id = 0;
        Position p;
        if (!(fields >> id >> p.x >> p.y)) {
            throw ConfigError("malformed node list line " + std::to_string(lineno), "topology_file");
        }
        if (id != positions.size()) {
            throw ConfigError("node ids must be consecutive from 0 (line " + std::to_string(lineno) + ")",
                              "topology_file");
        }
        positions.push_back(p);
    }
    return positions;
}

} // namespace surfsim
