#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "memgrid/solver.hpp"

using namespace memgrid;
using Catch::Approx;

namespace {

// Ground + one grid node + one source node; optionally a fuse from the grid
// node straight to ground.
GridTopology single_pixel(bool fuse_to_ground, double r_series = 1000.0, double r_init = 200.0) {
    GridTopology t;
    t.rows = 1;
    t.cols = 1;
    t.layers = 1;
    t.nodes.resize(3);
    t.nodes[0] = Node{NodeKind::Ground, 0, -1, -1};
    t.nodes[1] = Node{NodeKind::Grid, 1, 0, 0};
    t.nodes[2] = Node{NodeKind::Source, 1, 0, 0};
    t.incident.resize(3);
    t.resistors.push_back(SourceResistor{2, 1, r_series});
    t.sources.push_back(VoltageSource{2, 1, 0, 0});
    if (fuse_to_ground) {
        t.fuses.push_back(FuseEdge{1, 0, Direction::E, make_fuse(DeviceParams{}, r_init)});
        t.incident[1].push_back(IncidentFuse{0, +1});
        t.incident[0].push_back(IncidentFuse{0, -1});
    }
    return t;
}

StaticBias uniform_bias(int rows, int cols, double volts, double r_series = 1000.0) {
    StaticBias b;
    b.rows = rows;
    b.cols = cols;
    b.r_series = r_series;
    b.kind.assign(static_cast<size_t>(rows) * cols, BiasKind::SourceResistor);
    b.volts.assign(static_cast<size_t>(rows) * cols, volts);
    return b;
}

} // namespace

TEST_CASE("single unloaded pixel: 1x1 system, node voltage equals the source") {
    const auto topo = single_pixel(false);
    const auto bias = uniform_bias(1, 1, 0.040);
    CircuitEngine eng(topo, Biasing::from_static(bias));
    CHECK(eng.dim() == 1);
    const auto stats = eng.solve_at(0.0);
    CHECK(stats.iterations <= 1);
    CHECK(eng.grid_voltage(0) == Approx(0.040).epsilon(1e-12));
}

TEST_CASE("voltage divider: 40 mV through 1 kOhm onto a 400 Ohm fuse") {
    const auto topo = single_pixel(true);
    const auto bias = uniform_bias(1, 1, 0.040);
    CircuitEngine eng(topo, Biasing::from_static(bias));
    eng.solve_at(0.0);
    const double v = eng.grid_voltage(0);
    CHECK(v == Approx(0.040 * 400.0 / 1400.0).epsilon(1e-9));
    // Fuse current equals resistor current (KCL at the grid node).
    const double i_fuse = eng.fuse_current(0);
    const double i_res = (0.040 - v) / 1000.0;
    CHECK(i_fuse == Approx(i_res).epsilon(1e-9));
    CHECK(i_fuse == Approx(0.040 / 1400.0).epsilon(1e-9));
}

TEST_CASE("zero stimulus gives zero voltages and leaves states untouched") {
    const auto topo = build_hex_layer(4, 5, DeviceParams{});
    FrameSequence seq;
    seq.frame_rate = 15.0;
    seq.frames = {ByteImage(4, 5, 0), ByteImage(4, 5, 0)};
    const auto stim = build_stimulus(seq, 1);
    const auto tr = run(topo, stim);
    for (const auto& volts : tr.grid_volts)
        for (double v : volts) REQUIRE(std::fabs(v) < 1e-15);
    for (int f = 0; f < tr.fuse_count(); ++f)
        REQUIRE(tr.fuse_m.back()[f] == tr.fuse_m.front()[f]);
}

TEST_CASE("uniform scene: equipotential grid, no fuse drift, passive voltages") {
    const auto topo = build_hex_layer(5, 6, DeviceParams{});
    FrameSequence seq;
    seq.frame_rate = 15.0;
    seq.frames = {ByteImage(5, 6, 200), ByteImage(5, 6, 200)};
    const auto stim = build_stimulus(seq, 1);
    const auto tr = run(topo, stim);
    const double v_src = quantize_to_voltage(200);
    for (const auto& volts : tr.grid_volts)
        for (double v : volts) {
            REQUIRE(v >= -1e-12);
            REQUIRE(v <= v_src + 1e-12);
            REQUIRE(v == Approx(v_src).margin(1e-9));
        }
    for (int f = 0; f < tr.fuse_count(); ++f)
        REQUIRE(std::fabs(tr.fuse_m.back()[f] - tr.fuse_m.front()[f]) < 1e-6);
}

TEST_CASE("identical stimulus on both layers: inter-fuse rates vanish") {
    const auto topo = build_double_layer(4, 5, DeviceParams{});
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f(4, 5, 30);
    f.at(1, 2) = 240; // a contrasty static scene
    f.at(2, 3) = 200;
    seq.frames = {f, f, f};
    const auto stim = build_stimulus(seq, 2);
    const auto tr = run(topo, stim);
    for (int s = 1; s < tr.sample_count(); ++s)
        for (int px = 0; px < 20; ++px) {
            REQUIRE(std::fabs(tr.inter_a_rate(s, px)) < 1e-6);
            REQUIRE(std::fabs(tr.inter_b_rate(s, px)) < 1e-6);
        }
}

TEST_CASE("trace sampling cadence and rate availability") {
    const auto topo = build_hex_layer(3, 4, DeviceParams{});
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f(3, 4, 0);
    f.at(1, 1) = 255;
    seq.frames = {f};
    const auto stim = build_stimulus(seq, 1);
    const auto tr = run(topo, stim); // duration 1/15, dt 1e-4 -> 667 steps
    REQUIRE(tr.sample_count() == 68); // t=0, 66 strides, final step
    for (int s = 1; s < tr.sample_count(); ++s) REQUIRE(tr.times[s] > tr.times[s - 1]);
    CHECK(tr.times.back() == Approx(667e-4).epsilon(1e-12));
    CHECK(std::isfinite(tr.fuse_rate(1, 0)));
    CHECK_THROWS_AS(tr.sample_index_at(1.0), std::out_of_range);
    CHECK_THROWS_AS(tr.sample_index_at(-0.5), std::out_of_range);
}

TEST_CASE("deterministic reruns produce bit-identical traces") {
    const auto topo = build_hex_layer(4, 6, DeviceParams{});
    SynthBoxSpec spec;
    spec.rows = 4;
    spec.cols = 6;
    spec.frame_count = 3;
    spec.top = 1;
    spec.height = 2;
    spec.width = 2;
    spec.fast_transitions = 1;
    const auto stim = build_stimulus(synth_box(spec), 1);
    const auto a = run(topo, stim);
    const auto b = run(topo, stim);
    REQUIRE(a.times == b.times);
    REQUIRE(a.fuse_m == b.fuse_m);
    REQUIRE(a.grid_volts == b.grid_volts);
}

TEST_CASE("KCL residuals stay below 1e-9 at every sampled instant") {
    const auto topo = build_hex_layer(5, 8, DeviceParams{});
    SynthBoxSpec spec;
    spec.rows = 5;
    spec.cols = 8;
    spec.frame_count = 3;
    spec.top = 1;
    spec.height = 3;
    spec.width = 3;
    spec.fast_transitions = 2;
    spec.fast_px = 1;
    const auto stim = build_stimulus(synth_box(spec), 1);
    const auto tr = run(topo, stim);
    const auto bias = Biasing::from_stimulus(stim, 1000.0);
    for (int s = 0; s < tr.sample_count(); ++s)
        REQUIRE(kcl_max_relative_residual(topo, tr, bias, s) < 1e-9);
}

TEST_CASE("device states stay in [0,1] under hard drive") {
    const auto topo = build_hex_layer(3, 3, DeviceParams{});
    StaticBias bias = uniform_bias(3, 3, 0.0, 100.0);
    bias.volts[4] = 0.5; // violently overdriven center pixel
    CircuitEngine eng(topo, Biasing::from_static(bias));
    eng.solve_at(0.0);
    for (int k = 1; k <= 2000; ++k) {
        eng.advance_states(1e-3);
        eng.solve_at(k * 1e-3);
        for (const auto& f : eng.fuses()) {
            REQUIRE(f.a.x >= 0.0);
            REQUIRE(f.a.x <= 1.0);
            REQUIRE(f.b.x >= 0.0);
            REQUIRE(f.b.x <= 1.0);
        }
    }
}

TEST_CASE("halving dt changes final memristances by less than 1 percent") {
    const auto topo = build_hex_layer(6, 9, DeviceParams{});
    SynthBoxSpec spec;
    spec.rows = 6;
    spec.cols = 9;
    spec.frame_count = 3;
    spec.top = 1;
    spec.height = 3;
    spec.width = 3;
    spec.fast_transitions = 1;
    const auto stim = build_stimulus(synth_box(spec), 1);
    SolverOptions coarse, fine;
    fine.dt = coarse.dt / 2.0;
    const auto a = run(topo, stim, coarse);
    const auto b = run(topo, stim, fine);
    for (int f = 0; f < a.fuse_count(); ++f) {
        const double rel = std::fabs(a.fuse_m.back()[f] - b.fuse_m.back()[f]) / a.fuse_m.back()[f];
        REQUIRE(rel < 0.01);
    }
}

TEST_CASE("isolated floating node is rejected as singular") {
    GridTopology t;
    t.rows = 1;
    t.cols = 2;
    t.layers = 1;
    t.nodes.resize(5);
    t.nodes[0] = Node{NodeKind::Ground, 0, -1, -1};
    t.nodes[1] = Node{NodeKind::Grid, 1, 0, 0};
    t.nodes[2] = Node{NodeKind::Grid, 1, 0, 1};
    t.nodes[3] = Node{NodeKind::Source, 1, 0, 0};
    t.nodes[4] = Node{NodeKind::Source, 1, 0, 1};
    t.incident.resize(5);
    t.resistors.push_back(SourceResistor{3, 1, 1000.0});
    t.sources.push_back(VoltageSource{3, 1, 0, 0});
    StaticBias bias;
    bias.rows = 1;
    bias.cols = 2;
    bias.kind = {BiasKind::SourceResistor, BiasKind::Floating};
    bias.volts = {0.04, 0.0};
    CHECK_THROWS_AS(CircuitEngine(t, Biasing::from_static(bias)), SolverError);
}

TEST_CASE("trace binary round trip") {
    const auto topo = build_hex_layer(3, 4, DeviceParams{});
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f(3, 4, 0);
    f.at(1, 1) = 255;
    seq.frames = {f};
    const auto tr = run(topo, build_stimulus(seq, 1));
    const auto path = std::filesystem::temp_directory_path() / "memgrid_trace.bin";
    write_trace_binary(path, tr);
    const auto back = read_trace_binary(path);
    REQUIRE(back.times == tr.times);
    REQUIRE(back.fuse_m == tr.fuse_m);
    std::filesystem::remove(path);
}
