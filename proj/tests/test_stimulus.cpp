#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "memgrid/stimulus.hpp"

using namespace memgrid;
using Catch::Approx;

TEST_CASE("intensity quantization is the exact 40/255 mV scaling") {
    CHECK(quantize_to_voltage(255) == 0.040);
    CHECK(quantize_to_voltage(0) == 0.0);
    CHECK(quantize_to_voltage(51) == 0.008);
    CHECK_THROWS_AS(quantize_to_voltage(-1), std::out_of_range);
    CHECK_THROWS_AS(quantize_to_voltage(256), std::out_of_range);
}

namespace {
FrameSequence two_frames() {
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f0(2, 2, 0), f1(2, 2, 0);
    f0.at(0, 0) = 255;
    f1.at(0, 1) = 255;
    seq.frames = {f0, f1};
    return seq;
}
} // namespace

TEST_CASE("layer 2 is the one-frame-delayed schedule with frame 1 held") {
    const auto seq = two_frames();
    const auto s = build_stimulus(seq, 2);
    const double T = 1.0 / 15.0;
    CHECK(s.duration == Approx(2.0 * T));
    // during the first period, layer 2 replays frame 1
    CHECK(s.value(2, 0, 0, 0.5 * T) == s.value(1, 0, 0, 0.5 * T));
    // afterwards, layer 2 is layer 1 delayed by one period
    for (double t = T; t < 2.0 * T; t += T / 7.0)
        CHECK(s.value(2, 0, 1, t) == s.value(1, 0, 1, t - T));
    // step happens exactly at the boundary (right-continuous)
    CHECK(s.value(1, 0, 1, T) == 0.040);
    CHECK(s.value(1, 0, 1, std::nextafter(T, 0.0)) == 0.0);
}

TEST_CASE("single frame: both layers constant and identical") {
    FrameSequence seq;
    seq.frame_rate = 15.0;
    seq.frames = {ByteImage(2, 3, 128)};
    const auto s = build_stimulus(seq, 2);
    for (double t = 0.0; t < s.duration; t += s.duration / 9.0)
        CHECK(s.value(2, 1, 2, t) == s.value(1, 1, 2, t));
}

TEST_CASE("identical consecutive frames create no inter-layer difference") {
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f(2, 2, 37);
    seq.frames = {f, f, f};
    const auto s = build_stimulus(seq, 2);
    for (double t = 0.0; t < s.duration; t += s.duration / 50.0)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                CHECK(s.value(1, r, c, t) == s.value(2, r, c, t));
}

TEST_CASE("frame midpoints recover the quantized source frames exactly") {
    const auto seq = two_frames();
    const auto s = build_stimulus(seq, 1);
    const double T = 1.0 / 15.0;
    for (int f = 0; f < 2; ++f)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                CHECK(s.value(1, r, c, (f + 0.5) * T) ==
                      quantize_to_voltage(seq.frames[f].at(r, c)));
}

TEST_CASE("optional boundary ramp interpolates linearly and stays local") {
    const auto seq = two_frames();
    const double T = 1.0 / 15.0;
    const auto s = build_stimulus(seq, 1, 1e-3);
    // halfway through the ramp at the frame-2 boundary
    CHECK(s.value(1, 0, 1, T + 0.5e-3) == Approx(0.020));
    CHECK(s.value(1, 0, 1, T + 2e-3) == 0.040);
    CHECK(s.value(1, 0, 1, 0.9 * T) == 0.0);
    CHECK_THROWS_AS(build_stimulus(seq, 1, T), std::invalid_argument);
}

TEST_CASE("brightness scaling rounds half up and clamps") {
    FrameSequence seq;
    seq.frame_rate = 15.0;
    ByteImage f(1, 3, 0);
    f.at(0, 0) = 255;
    f.at(0, 1) = 101;
    seq.frames = {f};
    CHECK(scale_brightness(seq, 1.0).frames[0] == seq.frames[0]);
    const auto half = scale_brightness(seq, 0.5);
    CHECK(half.frames[0].at(0, 0) == 128); // 127.5 rounds up
    CHECK(half.frames[0].at(0, 1) == 51);  // 50.5 rounds up
    CHECK(half.frames[0].at(0, 2) == 0);
    CHECK_THROWS_AS(scale_brightness(seq, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scale_brightness(seq, 1.5), std::invalid_argument);
}

TEST_CASE("synthetic box follows the 2-then-1 px/frame schedule") {
    SynthBoxSpec spec; // defaults: 17x30, 15 frames
    const auto lefts = synth_box_lefts(spec);
    CHECK(lefts == std::vector<int>{0, 2, 4, 6, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18});
    const auto seq = synth_box(spec);
    REQUIRE(seq.frames.size() == 15);
    CHECK(seq.rows() == 17);
    CHECK(seq.cols() == 30);
    // black box on white background
    CHECK(seq.frames[0].at(spec.top, 0) == 0);
    CHECK(seq.frames[0].at(0, 0) == 255);
    // frame 5 (0-indexed) starts the slow phase at column 9
    CHECK(seq.frames[5].at(spec.top, 9) == 0);
    CHECK(seq.frames[5].at(spec.top, 8) == 255);

    SynthBoxSpec white = spec;
    white.white_on_black = true;
    const auto wseq = synth_box(white);
    for (size_t f = 0; f < wseq.frames.size(); ++f)
        for (size_t px = 0; px < wseq.frames[f].data.size(); ++px)
            REQUIRE(wseq.frames[f].data[px] == 255 - seq.frames[f].data[px]);

    SynthBoxSpec toowide = spec;
    toowide.width = 13;
    CHECK_THROWS_AS(synth_box(toowide), std::invalid_argument);
}

TEST_CASE("box outline mask is the box perimeter") {
    SynthBoxSpec spec;
    const auto outline = synth_box_outline(spec, 0);
    long count = 0;
    for (auto v : outline.data) count += v;
    CHECK(count == 2 * (spec.height + spec.width) - 4);
    CHECK(outline.at(spec.top, 0) == 1);
    CHECK(outline.at(spec.top + 1, 1) == 0); // interior
}

TEST_CASE("PGM round trip is bit exact") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "memgrid_pgm_test";
    fs::create_directories(dir);
    const std::string prefix = (dir / "clip").string();
    const auto seq = synth_box(SynthBoxSpec{});
    write_frames(prefix, seq);
    const auto back = load_frames(prefix, seq.frame_rate);
    REQUIRE(back.frames.size() == seq.frames.size());
    for (size_t f = 0; f < seq.frames.size(); ++f) REQUIRE(back.frames[f] == seq.frames[f]);
    fs::remove_all(dir);
}

TEST_CASE("malformed PGM input is rejected") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "memgrid_pgm_bad";
    fs::create_directories(dir);
    const auto p = dir / "bad.pgm";
    {
        std::ofstream out(p, std::ios::binary);
        out << "P5\n3 3\n255\n"; // truncated pixel data
        out << "ab";
    }
    CHECK_THROWS_AS(read_pgm(p), IoError);
    {
        std::ofstream out(p, std::ios::binary);
        out << "P2\n1 1\n255\n0\n";
    }
    CHECK_THROWS_AS(read_pgm(p), IoError);
    CHECK_THROWS_AS(load_frames((dir / "absent").string(), 15.0), IoError);
    fs::remove_all(dir);
}
