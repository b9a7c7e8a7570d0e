#pragma once

// Single- and double-layer hexagonal grid circuits: grid nodes on an
// odd-row-offset lattice (odd rows shifted +0.5 column), one voltage
// source + series resistor per pixel, memristive fuses between hex
// neighbors and (for two layers) between vertically stacked pixels.

#include <array>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include "memgrid/device.hpp"

namespace memgrid {

enum class Direction : std::uint8_t { E, W, NE, NW, SE, SW, Inter };

inline Direction opposite(Direction d) {
    switch (d) {
        case Direction::E: return Direction::W;
        case Direction::W: return Direction::E;
        case Direction::NE: return Direction::SW;
        case Direction::NW: return Direction::SE;
        case Direction::SE: return Direction::NW;
        case Direction::SW: return Direction::NE;
        case Direction::Inter: return Direction::Inter;
    }
    return d;
}

inline const char* direction_name(Direction d) {
    switch (d) {
        case Direction::E: return "E";
        case Direction::W: return "W";
        case Direction::NE: return "NE";
        case Direction::NW: return "NW";
        case Direction::SE: return "SE";
        case Direction::SW: return "SW";
        case Direction::Inter: return "Inter";
    }
    return "?";
}

// Image-plane vector: x grows eastward (+col), y grows southward (+row).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Unit vector of a lattice direction; rows are spaced sqrt(3)/2 apart so
// all six in-plane directions have unit length. Inter maps to (0,0).
inline Vec2 direction_unit(Direction d) {
    constexpr double h = std::numbers::sqrt3 / 2.0;
    switch (d) {
        case Direction::E: return {1.0, 0.0};
        case Direction::W: return {-1.0, 0.0};
        case Direction::NE: return {0.5, -h};
        case Direction::NW: return {-0.5, -h};
        case Direction::SE: return {0.5, h};
        case Direction::SW: return {-0.5, h};
        case Direction::Inter: return {0.0, 0.0};
    }
    return {};
}

enum class NodeKind : std::uint8_t { Ground, Grid, Source };

struct Node {
    NodeKind kind = NodeKind::Ground;
    std::int16_t layer = 0; // 1-based; 0 for ground
    std::int16_t row = -1;
    std::int16_t col = -1;
};

struct FuseEdge {
    int node_a = -1;
    int node_b = -1;
    Direction dir = Direction::E; // direction of b as seen from a
    Fuse fuse;
};

struct SourceResistor {
    int source_node = -1;
    int grid_node = -1;
    double r_series = 1000.0;
};

struct VoltageSource {
    int source_node = -1;
    std::int16_t layer = 1; // stimulus channel identity
    std::int16_t row = 0;
    std::int16_t col = 0;
};

struct ElementCounts {
    long nodes = 0; // grid + source nodes, ground excluded
    long fuses = 0;
    long resistors = 0;
    long sources = 0;
    bool operator==(const ElementCounts&) const = default;
};

struct IncidentFuse {
    int fuse = -1; // index into GridTopology::fuses
    int sign = 0;  // +1 when the node is endpoint a, -1 when it is b
};

struct GridTopology {
    int rows = 0;
    int cols = 0;
    int layers = 1;
    std::vector<Node> nodes; // nodes[0] is the single ground node
    std::vector<FuseEdge> fuses;
    std::vector<SourceResistor> resistors;
    std::vector<VoltageSource> sources;
    std::vector<std::vector<IncidentFuse>> incident; // per node id

    int pixel_count() const { return rows * cols; }
    int grid_node_count() const { return layers * rows * cols; }

    // Dense pixel index over layers; also the unknown layout of the solver.
    int grid_index(int layer, int row, int col) const {
        return (layer - 1) * rows * cols + row * cols + col;
    }
    int grid_node(int layer, int row, int col) const {
        return 1 + grid_index(layer, row, col);
    }
    int source_node(int layer, int row, int col) const {
        return 1 + grid_node_count() + grid_index(layer, row, col);
    }
    bool is_grid_node(int id) const { return nodes[id].kind == NodeKind::Grid; }
};

struct NeighborInfo {
    int node = -1;
    Direction dir = Direction::E;
    Vec2 unit;
};

namespace detail {

// Odd-r offset neighbor deltas, cycling E, W, NE, NW, SE, SW.
inline std::array<std::pair<int, int>, 6> hex_deltas(int row) {
    if (row % 2 == 0)
        return {{{0, 1}, {0, -1}, {-1, 0}, {-1, -1}, {1, 0}, {1, -1}}};
    return {{{0, 1}, {0, -1}, {-1, 1}, {-1, 0}, {1, 1}, {1, 0}}};
}

constexpr std::array<Direction, 6> hex_dirs = {Direction::E,  Direction::W,  Direction::NE,
                                               Direction::NW, Direction::SE, Direction::SW};

inline void add_fuse(GridTopology& t, int a, int b, Direction dir, const Fuse& f) {
    const int idx = static_cast<int>(t.fuses.size());
    t.fuses.push_back(FuseEdge{a, b, dir, f});
    t.incident[a].push_back(IncidentFuse{idx, +1});
    t.incident[b].push_back(IncidentFuse{idx, -1});
}

inline void build_layer(GridTopology& t, int layer, const Fuse& proto, double r_series) {
    const int R = t.rows, C = t.cols;
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const int g = t.grid_node(layer, r, c);
            const int s = t.source_node(layer, r, c);
            t.nodes[g] = Node{NodeKind::Grid, static_cast<std::int16_t>(layer),
                              static_cast<std::int16_t>(r), static_cast<std::int16_t>(c)};
            t.nodes[s] = Node{NodeKind::Source, static_cast<std::int16_t>(layer),
                              static_cast<std::int16_t>(r), static_cast<std::int16_t>(c)};
            t.resistors.push_back(SourceResistor{s, g, r_series});
            t.sources.push_back(VoltageSource{s, static_cast<std::int16_t>(layer),
                                              static_cast<std::int16_t>(r), static_cast<std::int16_t>(c)});
        }
    }
    // East fuses, then the two downward diagonals; each undirected edge once.
    for (int r = 0; r < R; ++r)
        for (int c = 0; c + 1 < C; ++c)
            add_fuse(t, t.grid_node(layer, r, c), t.grid_node(layer, r, c + 1), Direction::E, proto);
    for (int r = 0; r + 1 < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const auto deltas = hex_deltas(r);
            for (int k : {4, 5}) { // SE, SW
                const int rr = r + deltas[k].first, cc = c + deltas[k].second;
                if (cc >= 0 && cc < C)
                    add_fuse(t, t.grid_node(layer, r, c), t.grid_node(layer, rr, cc), hex_dirs[k], proto);
            }
        }
    }
}

} // namespace detail

inline long hex_layer_fuse_count(int rows, int cols) {
    return static_cast<long>(rows) * (cols - 1) + static_cast<long>(rows - 1) * (2L * cols - 1);
}

inline GridTopology build_hex_layer(int rows, int cols, const DeviceParams& device_defaults,
                                    double r_init = 200.0, double r_series = 1000.0) {
    if (rows < 2 || cols < 2)
        throw std::invalid_argument("build_hex_layer: rows and cols must both be >= 2");
    device_defaults.validate();
    GridTopology t;
    t.rows = rows;
    t.cols = cols;
    t.layers = 1;
    t.nodes.resize(1 + 2 * static_cast<size_t>(rows) * cols);
    t.incident.resize(t.nodes.size());
    detail::build_layer(t, 1, make_fuse(device_defaults, r_init), r_series);
    return t;
}

inline GridTopology build_double_layer(int rows, int cols, const DeviceParams& device_defaults,
                                       double r_init = 200.0, double r_series = 1000.0) {
    if (rows < 2 || cols < 2)
        throw std::invalid_argument("build_double_layer: rows and cols must both be >= 2");
    device_defaults.validate();
    GridTopology t;
    t.rows = rows;
    t.cols = cols;
    t.layers = 2;
    t.nodes.resize(1 + 4 * static_cast<size_t>(rows) * cols);
    t.incident.resize(t.nodes.size());
    const Fuse proto = make_fuse(device_defaults, r_init);
    detail::build_layer(t, 1, proto, r_series);
    detail::build_layer(t, 2, proto, r_series);
    // Connecting fuses: device a (cM1) faces layer 1, device b (cM2) layer 2.
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            detail::add_fuse(t, t.grid_node(1, r, c), t.grid_node(2, r, c), Direction::Inter, proto);
    return t;
}

inline std::vector<NeighborInfo> neighbors(const GridTopology& t, int node_id) {
    if (node_id < 0 || node_id >= static_cast<int>(t.nodes.size()) || !t.is_grid_node(node_id))
        throw std::invalid_argument("neighbors: node is not a grid node");
    std::vector<NeighborInfo> out;
    for (const auto& inc : t.incident[node_id]) {
        const FuseEdge& e = t.fuses[inc.fuse];
        if (e.dir == Direction::Inter) continue;
        const Direction d = inc.sign > 0 ? e.dir : opposite(e.dir);
        out.push_back(NeighborInfo{inc.sign > 0 ? e.node_b : e.node_a, d, direction_unit(d)});
    }
    return out;
}

inline ElementCounts count_elements(const GridTopology& t) {
    return ElementCounts{static_cast<long>(t.nodes.size()) - 1, static_cast<long>(t.fuses.size()),
                         static_cast<long>(t.resistors.size()), static_cast<long>(t.sources.size())};
}

inline ElementCounts predicted_counts(int rows, int cols, int layers) {
    const long px = static_cast<long>(rows) * cols;
    ElementCounts c;
    c.nodes = 2L * layers * px;
    c.fuses = layers * hex_layer_fuse_count(rows, cols) + (layers == 2 ? px : 0);
    c.resistors = layers * px;
    c.sources = layers * px;
    return c;
}

// --- fault injection --------------------------------------------------------

struct FaultSpec {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> r_on_choices = {50, 60, 70, 80, 90, 100};
    std::vector<double> r_off_choices = {10000, 10500, 11000, 11500, 12000, 12500, 13000,
                                         13500, 14000, 14500, 15000, 15500, 16000, 16500,
                                         17000, 17500, 18000, 18500, 19000, 19500, 20000};
    int multiplier_min = 2; // r_init = multiplier * drawn r_on
    int multiplier_max = 20;
};

// Re-initializes round(fraction * device_count) devices, sampled without
// replacement, with parameters drawn from the discrete fault sets. The graph
// itself is never altered.
inline GridTopology inject_faults(GridTopology t, const FaultSpec& spec) {
    if (spec.fraction < 0.0 || spec.fraction > 1.0)
        throw std::invalid_argument("inject_faults: fraction must lie in [0,1]");
    const size_t device_count = 2 * t.fuses.size();
    const size_t n_faulty = static_cast<size_t>(std::llround(spec.fraction * static_cast<double>(device_count)));
    if (n_faulty == 0) return t;

    std::mt19937_64 rng(spec.seed);
    // Partial Fisher-Yates over device indices.
    std::vector<std::uint32_t> idx(device_count);
    for (size_t i = 0; i < device_count; ++i) idx[i] = static_cast<std::uint32_t>(i);
    for (size_t i = 0; i < n_faulty; ++i) {
        const size_t pick = i + static_cast<size_t>(rng() % (device_count - i));
        std::swap(idx[i], idx[pick]);
    }
    std::vector<std::uint32_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_faulty));
    std::sort(chosen.begin(), chosen.end());

    const int n_mult = spec.multiplier_max - spec.multiplier_min + 1;
    for (std::uint32_t d : chosen) {
        FuseEdge& e = t.fuses[d / 2];
        DeviceState& s = (d % 2 == 0) ? e.fuse.a : e.fuse.b;
        DeviceParams p = s.params;
        p.r_on = spec.r_on_choices[rng() % spec.r_on_choices.size()];
        p.r_off = spec.r_off_choices[rng() % spec.r_off_choices.size()];
        const int mult = spec.multiplier_min + static_cast<int>(rng() % n_mult);
        const double r_init = mult * p.r_on;
        s.params = p;
        s.x = x_for_resistance(r_init, p);
    }
    return t;
}

// --- netlist dump -----------------------------------------------------------

// Deterministic one-element-per-line text form for debugging and for
// cross-checking against external circuit simulators.
inline void write_netlist(std::ostream& out, const GridTopology& t) {
    out << "netlist rows=" << t.rows << " cols=" << t.cols << " layers=" << t.layers << "\n";
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        const Node& n = t.nodes[i];
        switch (n.kind) {
            case NodeKind::Ground: out << "node " << i << " ground\n"; break;
            case NodeKind::Grid:
                out << "node " << i << " grid " << n.layer << " " << n.row << " " << n.col << "\n";
                break;
            case NodeKind::Source:
                out << "node " << i << " source " << n.layer << " " << n.row << " " << n.col << "\n";
                break;
        }
    }
    for (const auto& e : t.fuses)
        out << "fuse " << e.node_a << " " << e.node_b << " " << direction_name(e.dir) << " "
            << memristance(e.fuse.a) << " " << memristance(e.fuse.b) << "\n";
    for (const auto& r : t.resistors)
        out << "resistor " << r.source_node << " " << r.grid_node << " " << r.r_series << "\n";
    for (const auto& s : t.sources)
        out << "vsource " << s.source_node << " " << s.layer << " " << s.row << " " << s.col << "\n";
}

} // namespace memgrid
