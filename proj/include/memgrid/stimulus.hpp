#pragma once

// Frame sequences -> per-pixel piecewise-linear voltage schedules.
// Layer 1 sees the current frame; layer 2 the one-frame-delayed sequence
// (frame 1 held during the initial period).

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "memgrid/image.hpp"

namespace memgrid {

// X * 40/255 millivolts, returned in volts.
inline double quantize_to_voltage(int intensity) {
    if (intensity < 0 || intensity > 255)
        throw std::out_of_range("quantize_to_voltage: intensity outside 0..255");
    return intensity * 40.0 / 255.0 / 1000.0;
}

struct Stimulus {
    int layers = 1;
    int rows = 0;
    int cols = 0;
    double frame_period = 1.0 / 15.0;
    double ramp = 0.0; // seconds of linear ramp at each frame boundary
    double duration = 0.0;
    // volts[layer-1][frame][pixel]
    std::vector<std::vector<std::vector<double>>> volts;

    int frame_count() const { return static_cast<int>(volts.empty() ? 0 : volts[0].size()); }

    // Frame on display at time t (right-continuous; clamped at the ends).
    int frame_index(double t) const {
        if (t <= 0.0) return 0;
        int f = static_cast<int>(std::floor(t / frame_period));
        return std::min(f, frame_count() - 1);
    }

    double value(int layer, int row, int col, double t) const {
        const int f = frame_index(t);
        const size_t px = static_cast<size_t>(row) * cols + col;
        const auto& lv = volts[layer - 1];
        const double v = lv[f][px];
        if (ramp > 0.0 && f >= 1) {
            const double dt = t - f * frame_period;
            if (dt < ramp) {
                const double v0 = lv[f - 1][px];
                return v0 + (v - v0) * (dt / ramp);
            }
        }
        return v;
    }
};

inline Stimulus build_stimulus(const FrameSequence& frames, int layers, double ramp_seconds = 0.0) {
    frames.validate();
    if (layers != 1 && layers != 2)
        throw std::invalid_argument("build_stimulus: layers must be 1 or 2");
    if (ramp_seconds < 0.0 || ramp_seconds >= frames.frame_period())
        throw std::invalid_argument("build_stimulus: ramp must lie in [0, frame period)");
    Stimulus s;
    s.layers = layers;
    s.rows = frames.rows();
    s.cols = frames.cols();
    s.frame_period = frames.frame_period();
    s.ramp = ramp_seconds;
    s.duration = frames.duration();
    s.volts.resize(layers);
    const int n = static_cast<int>(frames.frames.size());
    for (int f = 0; f < n; ++f) {
        std::vector<double> v(frames.frames[f].size());
        for (size_t i = 0; i < v.size(); ++i) v[i] = quantize_to_voltage(frames.frames[f].data[i]);
        s.volts[0].push_back(std::move(v));
    }
    if (layers == 2) {
        s.volts[1].push_back(s.volts[0][0]); // hold frame 1 during the first period
        for (int f = 0; f + 1 < n; ++f) s.volts[1].push_back(s.volts[0][f]);
    }
    return s;
}

inline FrameSequence scale_brightness(const FrameSequence& frames, double factor) {
    if (!(factor > 0.0 && factor <= 1.0))
        throw std::invalid_argument("scale_brightness: factor must lie in (0,1]");
    FrameSequence out = frames;
    for (auto& frame : out.frames)
        for (auto& px : frame.data) {
            // round half up, clamped to 0..255
            const double v = std::floor(px * factor + 0.5);
            px = static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, v)));
        }
    return out;
}

// --- synthetic clips --------------------------------------------------------

// Moving-box clip: defaults reproduce the 17x30, 15 fps, 15-frame scene with
// a box sliding right at 2 px/frame for the first four transitions and
// 1 px/frame afterwards.
struct SynthBoxSpec {
    int rows = 17;
    int cols = 30;
    int frame_count = 15;
    double frame_rate = 15.0;
    int top = 5;
    int left = 0;
    int height = 7;
    int width = 6;
    int fast_px = 2;
    int slow_px = 1;
    int fast_transitions = 4; // number of leading transitions at fast_px
    int move_row = 0;         // extra per-transition downward motion, in pixels
    bool white_on_black = false;
};

// Per-frame left edge of the box.
inline std::vector<int> synth_box_lefts(const SynthBoxSpec& s) {
    std::vector<int> lefts(1, s.left);
    for (int t = 1; t < s.frame_count; ++t)
        lefts.push_back(lefts.back() + (t <= s.fast_transitions ? s.fast_px : s.slow_px));
    return lefts;
}

inline std::vector<int> synth_box_tops(const SynthBoxSpec& s) {
    std::vector<int> tops(1, s.top);
    for (int t = 1; t < s.frame_count; ++t) tops.push_back(tops.back() + s.move_row);
    return tops;
}

inline FrameSequence synth_box(const SynthBoxSpec& s) {
    const auto lefts = synth_box_lefts(s);
    const auto tops = synth_box_tops(s);
    if (s.rows < 2 || s.cols < 2 || s.height < 1 || s.width < 1 || s.frame_count < 1)
        throw std::invalid_argument("synth_box: degenerate geometry");
    if (s.top < 0 || s.left < 0 || tops.back() + s.height > s.rows || lefts.back() + s.width > s.cols)
        throw std::invalid_argument("synth_box: box leaves the frame bounds");
    const std::uint8_t bg = s.white_on_black ? 0 : 255;
    const std::uint8_t fg = s.white_on_black ? 255 : 0;
    FrameSequence seq;
    seq.frame_rate = s.frame_rate;
    for (int f = 0; f < s.frame_count; ++f) {
        ByteImage img(s.rows, s.cols, bg);
        for (int r = tops[f]; r < tops[f] + s.height; ++r)
            for (int c = lefts[f]; c < lefts[f] + s.width; ++c) img.at(r, c) = fg;
        seq.frames.push_back(std::move(img));
    }
    return seq;
}

// Pixels adjacent to an intensity discontinuity in frame f: box pixels on
// the perimeter of the box. Analytic ground truth for edge detection.
inline ByteImage synth_box_outline(const SynthBoxSpec& s, int frame) {
    const auto lefts = synth_box_lefts(s);
    const auto tops = synth_box_tops(s);
    ByteImage m(s.rows, s.cols, 0);
    const int l = lefts[frame], t = tops[frame];
    for (int r = t; r < t + s.height; ++r)
        for (int c = l; c < l + s.width; ++c)
            if (r == t || r == t + s.height - 1 || c == l || c == l + s.width - 1) m.at(r, c) = 1;
    return m;
}

inline void write_stimulus_csv(std::ostream& out, const Stimulus& s, double sample_dt) {
    out << "time,layer,row,col,volts\n";
    for (double t = 0.0; t < s.duration; t += sample_dt)
        for (int layer = 1; layer <= s.layers; ++layer)
            for (int r = 0; r < s.rows; ++r)
                for (int c = 0; c < s.cols; ++c)
                    out << t << "," << layer << "," << r << "," << c << ","
                        << s.value(layer, r, c, t) << "\n";
}

} // namespace memgrid
