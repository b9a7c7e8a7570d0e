#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "memgrid/topology.hpp"

using namespace memgrid;
using Catch::Approx;

namespace {
DeviceParams defaults() {
    DeviceParams d;
    return d;
}
} // namespace

TEST_CASE("single-layer fuse counts match the closed form") {
    // Brute-force oracle: enumerate neighbor pairs of the odd-r lattice.
    auto enumerate = [](int rows, int cols) {
        long count = 0;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                // East edge
                if (c + 1 < cols) ++count;
                // Downward diagonals
                const int se_c = (r % 2 == 0) ? c : c + 1;
                const int sw_c = (r % 2 == 0) ? c - 1 : c;
                if (r + 1 < rows && se_c >= 0 && se_c < cols) ++count;
                if (r + 1 < rows && sw_c >= 0 && sw_c < cols) ++count;
            }
        return count;
    };
    for (int rows = 2; rows <= 6; ++rows)
        for (int cols = 2; cols <= 7; ++cols) {
            const auto t = build_hex_layer(rows, cols, defaults());
            const long expect = enumerate(rows, cols);
            REQUIRE(static_cast<long>(t.fuses.size()) == expect);
            REQUIRE(hex_layer_fuse_count(rows, cols) == expect);
        }
    CHECK(hex_layer_fuse_count(70, 80) == 16501);
    const auto tiny = build_hex_layer(2, 2, defaults());
    CHECK(tiny.fuses.size() == 5);
    CHECK_THROWS_AS(build_hex_layer(1, 5, defaults()), std::invalid_argument);
}

TEST_CASE("2x2 single layer element counts") {
    const auto t = build_hex_layer(2, 2, defaults());
    const auto c = count_elements(t);
    CHECK(c.nodes == 8);
    CHECK(c.fuses == 5);
    CHECK(c.resistors == 4);
    CHECK(c.sources == 4);
}

TEST_CASE("double layer 70x80 reproduces the published element counts") {
    const auto t = build_double_layer(70, 80, defaults());
    const auto c = count_elements(t);
    CHECK(c.nodes == 22400);
    CHECK(c.fuses == 38602);
    CHECK(c.resistors == 11200);
    CHECK(c.sources == 11200);
    CHECK(predicted_counts(70, 80, 2) == c);
}

TEST_CASE("double layer 17x30 fuse count") {
    const auto t = build_double_layer(17, 30, defaults());
    CHECK(count_elements(t).fuses == 3384);
    CHECK(predicted_counts(17, 30, 2).fuses == 3384);
}

TEST_CASE("every layer-1 node has exactly one Inter fuse to its layer-2 twin") {
    const auto t = build_double_layer(4, 5, defaults());
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) {
            int inter = 0;
            for (const auto& inc : t.incident[t.grid_node(1, r, c)]) {
                const auto& e = t.fuses[inc.fuse];
                if (e.dir != Direction::Inter) continue;
                ++inter;
                CHECK(e.node_a == t.grid_node(1, r, c));
                CHECK(e.node_b == t.grid_node(2, r, c));
            }
            CHECK(inter == 1);
        }
}

TEST_CASE("neighbors: interior nodes have six unit vectors summing to zero") {
    const auto t = build_hex_layer(5, 6, defaults());
    for (int r = 1; r < 4; ++r)
        for (int c = 1; c < 5; ++c) {
            const auto nb = neighbors(t, t.grid_node(1, r, c));
            REQUIRE(nb.size() == 6);
            double sx = 0.0, sy = 0.0;
            std::set<int> distinct;
            for (const auto& n : nb) {
                sx += n.unit.x;
                sy += n.unit.y;
                distinct.insert(n.node);
                CHECK(std::hypot(n.unit.x, n.unit.y) == Approx(1.0).epsilon(1e-14));
                // All neighbors within one row.
                CHECK(std::abs(t.nodes[n.node].row - r) <= 1);
            }
            CHECK(distinct.size() == 6);
            CHECK(sx == Approx(0.0).margin(1e-14));
            CHECK(sy == Approx(0.0).margin(1e-14));
        }
}

TEST_CASE("neighbors: corner and boundary degree") {
    const auto t = build_hex_layer(5, 6, defaults());
    // (0,0) on an even (unshifted) row reaches only E and SE.
    const auto corner = neighbors(t, t.grid_node(1, 0, 0));
    REQUIRE(corner.size() == 2);
    std::set<Direction> dirs;
    for (const auto& n : corner) dirs.insert(n.dir);
    CHECK(dirs == std::set<Direction>{Direction::E, Direction::SE});
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 6; ++c) {
            const auto nb = neighbors(t, t.grid_node(1, r, c));
            CHECK(nb.size() >= 2);
            CHECK(nb.size() <= 6);
        }
    CHECK_THROWS_AS(neighbors(t, 0), std::invalid_argument);
    CHECK_THROWS_AS(neighbors(t, t.source_node(1, 0, 0)), std::invalid_argument);
}

TEST_CASE("neighbors relation is symmetric with opposite labels") {
    const auto t = build_hex_layer(4, 5, defaults());
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) {
            const int a = t.grid_node(1, r, c);
            for (const auto& n : neighbors(t, a)) {
                bool found = false;
                for (const auto& back : neighbors(t, n.node))
                    if (back.node == a) {
                        found = true;
                        CHECK(back.dir == opposite(n.dir));
                    }
                CHECK(found);
            }
        }
}

TEST_CASE("fuse graph of each layer is connected") {
    const auto t = build_double_layer(6, 7, defaults());
    for (int layer = 1; layer <= 2; ++layer) {
        std::set<int> seen;
        std::queue<int> work;
        work.push(t.grid_node(layer, 0, 0));
        seen.insert(work.front());
        while (!work.empty()) {
            const int node = work.front();
            work.pop();
            for (const auto& inc : t.incident[node]) {
                const auto& e = t.fuses[inc.fuse];
                if (e.dir == Direction::Inter) continue;
                const int other = inc.sign > 0 ? e.node_b : e.node_a;
                if (seen.insert(other).second) work.push(other);
            }
        }
        CHECK(seen.size() == 6u * 7u);
    }
}

TEST_CASE("fault injection: identity at fraction 0, determinism, legal draws") {
    const auto base = build_hex_layer(70, 80, defaults());

    FaultSpec none;
    none.fraction = 0.0;
    none.seed = 1;
    const auto untouched = inject_faults(base, none);
    for (size_t f = 0; f < base.fuses.size(); ++f) {
        CHECK(untouched.fuses[f].fuse.a.x == base.fuses[f].fuse.a.x);
        CHECK(untouched.fuses[f].fuse.b.params.r_off == base.fuses[f].fuse.b.params.r_off);
    }

    FaultSpec half;
    half.fraction = 0.5;
    half.seed = 99;
    const auto once = inject_faults(base, half);
    const auto twice = inject_faults(base, half);
    for (size_t f = 0; f < base.fuses.size(); ++f) {
        REQUIRE(once.fuses[f].fuse.a.x == twice.fuses[f].fuse.a.x);
        REQUIRE(once.fuses[f].fuse.b.x == twice.fuses[f].fuse.b.x);
        REQUIRE(once.fuses[f].fuse.a.params.r_on == twice.fuses[f].fuse.a.params.r_on);
        REQUIRE(once.fuses[f].fuse.b.params.r_off == twice.fuses[f].fuse.b.params.r_off);
    }

    FaultSpec heavy;
    heavy.fraction = 0.8;
    heavy.seed = 7;
    const auto faulted = inject_faults(base, heavy);
    // Graph untouched.
    REQUIRE(faulted.fuses.size() == base.fuses.size());
    for (size_t f = 0; f < base.fuses.size(); ++f) {
        REQUIRE(faulted.fuses[f].node_a == base.fuses[f].node_a);
        REQUIRE(faulted.fuses[f].node_b == base.fuses[f].node_b);
    }
    const std::set<double> r_on_set = {50, 60, 70, 80, 90, 100};
    long changed = 0;
    for (const auto& e : faulted.fuses) {
        for (const DeviceState* s : {&e.fuse.a, &e.fuse.b}) {
            const auto& p = s->params;
            const bool is_default = p.r_on == 100.0 && p.r_off == 16000.0 &&
                                    std::fabs(memristance(*s) - 200.0) < 1e-6;
            if (is_default) continue;
            ++changed;
            REQUIRE(r_on_set.count(p.r_on) == 1);
            REQUIRE(p.r_off >= 10000.0);
            REQUIRE(p.r_off <= 20000.0);
            REQUIRE(std::fabs(std::remainder(p.r_off, 500.0)) < 1e-9);
            const double r_init = memristance(*s);
            const double mult = r_init / p.r_on;
            REQUIRE(mult == Approx(std::round(mult)).margin(1e-9));
            REQUIRE(std::round(mult) >= 2);
            REQUIRE(std::round(mult) <= 20);
        }
    }
    // Exactly round(fraction * devices) drawn; a draw can collide with the
    // defaults (probability ~1/2394 per device), so allow that slack.
    const long drawn = std::llround(0.8 * 2.0 * static_cast<double>(base.fuses.size()));
    CHECK(changed <= drawn);
    CHECK(changed >= drawn - 60);

    FaultSpec bad;
    bad.fraction = 1.5;
    CHECK_THROWS_AS(inject_faults(base, bad), std::invalid_argument);
}

TEST_CASE("netlist dump is deterministic and complete") {
    const auto t = build_double_layer(3, 4, defaults());
    std::ostringstream a, b;
    write_netlist(a, t);
    write_netlist(b, t);
    CHECK(a.str() == b.str());
    // one line per element plus one per node plus the header
    long lines = 0;
    std::istringstream in(a.str());
    std::string line;
    while (std::getline(in, line)) ++lines;
    const auto c = count_elements(t);
    CHECK(lines == 1 + (c.nodes + 1) + c.fuses + c.resistors + c.sources);
}
