#pragma once

// Edge and transient detection on simulation traces: state-variance
// thresholding, memristance-rate thresholding, ON/OFF-center splitting of
// inter-layer transients, map mismatch, and speed from band thickness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "memgrid/image.hpp"
#include "memgrid/solver.hpp"
#include "memgrid/topology.hpp"

namespace memgrid {

struct EdgeMap {
    int rows = 0, cols = 0;
    double t = 0.0;
    std::vector<std::uint8_t> edge; // 1 = edge pixel

    bool at(int r, int c) const { return edge[static_cast<size_t>(r) * cols + c] != 0; }
};

enum class TransientClass : std::uint8_t { None = 0, Appearing = 1, Disappearing = 2 };
enum class Polarity : std::uint8_t { Raw, On, Off };

// For Raw maps, Appearing holds class A (cM1 falling / cM2 rising, i.e.
// current layer 2 -> layer 1) and Disappearing holds class B; the labels
// become literal only after polarity splitting.
struct TransientMap {
    int rows = 0, cols = 0;
    double t = 0.0;
    Polarity polarity = Polarity::Raw;
    std::vector<TransientClass> cls;

    TransientClass at(int r, int c) const { return cls[static_cast<size_t>(r) * cols + c]; }
    bool empty() const {
        return std::all_of(cls.begin(), cls.end(), [](TransientClass c) { return c == TransientClass::None; });
    }
    int count(TransientClass c) const {
        return static_cast<int>(std::count(cls.begin(), cls.end(), c));
    }
};

// multiplier x median(|values|), floored to stay above solver noise on
// degenerate (mostly silent) scenes.
inline double adaptive_threshold(std::vector<double> values, double multiplier = 5.0,
                                 double floor = 1e-6) {
    if (values.empty()) return floor;
    for (double& v : values) v = std::fabs(v);
    const size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    return std::max(multiplier * values[mid], floor);
}

namespace detail {

// Per pixel of a layer, the incident intra-layer fuse indices.
inline std::vector<std::vector<int>> pixel_fuses(const GridTopology& t, int layer) {
    std::vector<std::vector<int>> out(static_cast<size_t>(t.rows) * t.cols);
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < t.cols; ++c) {
            const int node = t.grid_node(layer, r, c);
            for (const auto& inc : t.incident[node])
                if (t.fuses[inc.fuse].dir != Direction::Inter)
                    out[static_cast<size_t>(r) * t.cols + c].push_back(inc.fuse);
        }
    return out;
}

} // namespace detail

// Statistic feeding the adaptive rate threshold: |dM/dt| of every
// intra-layer fuse of the chosen layer at the instant.
inline std::vector<double> fuse_rates_at(const GridTopology& topo, const SimulationTrace& tr,
                                         int sample, int layer = 1) {
    std::vector<double> rates;
    for (size_t f = 0; f < topo.fuses.size(); ++f) {
        const auto& e = topo.fuses[f];
        if (e.dir == Direction::Inter) continue;
        if (topo.nodes[e.node_a].layer != layer) continue;
        rates.push_back(tr.fuse_rate(sample, static_cast<int>(f)));
    }
    return rates;
}

// Pixel is an edge iff at least min_count incident intra-layer fuses have
// |dM/dt| above theta_rate.
inline EdgeMap edge_map_rate_threshold(const GridTopology& topo, const SimulationTrace& tr,
                                       double t, double theta_rate, int min_count = 2,
                                       int layer = 1) {
    if (min_count < 1) throw std::invalid_argument("edge_map_rate_threshold: min_count must be >= 1");
    const int s = tr.sample_index_at(t);
    if (s < 1) throw std::out_of_range("edge_map_rate_threshold: rates undefined at the first sample");
    EdgeMap map;
    map.rows = topo.rows;
    map.cols = topo.cols;
    map.t = tr.times[s];
    map.edge.assign(static_cast<size_t>(topo.rows) * topo.cols, 0);
    const auto pf = detail::pixel_fuses(topo, layer);
    for (size_t px = 0; px < pf.size(); ++px) {
        int n = 0;
        for (int f : pf[px])
            if (std::fabs(tr.fuse_rate(s, f)) > theta_rate) ++n;
        if (n >= min_count) map.edge[px] = 1;
    }
    return map;
}

// Pixel is an edge iff the variance of {M_f(t) - M_f(0)} over its incident
// intra-layer fuses exceeds theta_var. Retains all drift since t=0, which is
// exactly the non-volatility failure mode on moving scenes.
inline EdgeMap edge_map_state_threshold(const GridTopology& topo, const SimulationTrace& tr,
                                        double t, double theta_var, int layer = 1) {
    const int s = tr.sample_index_at(t);
    EdgeMap map;
    map.rows = topo.rows;
    map.cols = topo.cols;
    map.t = tr.times[s];
    map.edge.assign(static_cast<size_t>(topo.rows) * topo.cols, 0);
    const auto pf = detail::pixel_fuses(topo, layer);
    for (size_t px = 0; px < pf.size(); ++px) {
        const auto& fs = pf[px];
        if (fs.empty()) continue;
        double mean = 0.0;
        for (int f : fs) mean += tr.fuse_m[s][f] - tr.fuse_m[0][f];
        mean /= static_cast<double>(fs.size());
        double var = 0.0;
        for (int f : fs) {
            const double d = (tr.fuse_m[s][f] - tr.fuse_m[0][f]) - mean;
            var += d * d;
        }
        var /= static_cast<double>(fs.size());
        if (var > theta_var) map.edge[px] = 1;
    }
    return map;
}

// Per-pixel variance statistic used for the adaptive theta_var.
inline std::vector<double> state_variances_at(const GridTopology& topo, const SimulationTrace& tr,
                                              int sample, int layer = 1) {
    const auto pf = detail::pixel_fuses(topo, layer);
    std::vector<double> vars;
    vars.reserve(pf.size());
    for (const auto& fs : pf) {
        double mean = 0.0;
        for (int f : fs) mean += tr.fuse_m[sample][f] - tr.fuse_m[0][f];
        mean /= static_cast<double>(fs.size());
        double var = 0.0;
        for (int f : fs) {
            const double d = (tr.fuse_m[sample][f] - tr.fuse_m[0][f]) - mean;
            var += d * d;
        }
        vars.push_back(var / static_cast<double>(fs.size()));
    }
    return vars;
}

// Statistic feeding the adaptive transient threshold: per pixel, the larger
// of the two connecting-device rate magnitudes.
inline std::vector<double> inter_rates_at(const SimulationTrace& tr, int sample) {
    std::vector<double> rates;
    const size_t px_count = tr.inter_a_m[sample].size();
    for (size_t p = 0; p < px_count; ++p)
        rates.push_back(std::max(std::fabs(tr.inter_a_rate(sample, static_cast<int>(p))),
                                 std::fabs(tr.inter_b_rate(sample, static_cast<int>(p)))));
    return rates;
}

// Classify each pixel by the signs of (dcM1/dt, dcM2/dt) of its connecting
// fuse: (-,+) -> class A, (+,-) -> class B, quiet or same-signed -> None.
inline TransientMap transient_raw(const GridTopology& topo, const SimulationTrace& tr, double t,
                                  double theta_transient) {
    if (topo.layers != 2 || tr.layers != 2)
        throw std::invalid_argument("transient_raw: requires a double-layer trace");
    const int s = tr.sample_index_at(t);
    if (s < 1) throw std::out_of_range("transient_raw: rates undefined at the first sample");
    TransientMap map;
    map.rows = topo.rows;
    map.cols = topo.cols;
    map.t = tr.times[s];
    map.polarity = Polarity::Raw;
    map.cls.assign(static_cast<size_t>(topo.rows) * topo.cols, TransientClass::None);
    for (int px = 0; px < topo.rows * topo.cols; ++px) {
        const double r1 = tr.inter_a_rate(s, px);
        const double r2 = tr.inter_b_rate(s, px);
        if (std::max(std::fabs(r1), std::fabs(r2)) <= theta_transient) continue;
        if (r1 <= 0.0 && r2 >= 0.0)
            map.cls[px] = TransientClass::Appearing; // class A
        else if (r1 >= 0.0 && r2 <= 0.0)
            map.cls[px] = TransientClass::Disappearing; // class B
        // same strict sign cannot arise from one series current; leave None
    }
    return map;
}

// Splits a raw map by the intensity side of each pixel: below the split the
// pixel feeds the OFF (dark mover) map with class A = Appearing, class B =
// Disappearing; at or above the split it feeds the ON map with the opposite
// assignment.
inline std::pair<TransientMap, TransientMap> split_on_off(const TransientMap& raw,
                                                          const ByteImage& intensity,
                                                          int intensity_split = 128) {
    if (raw.rows != intensity.rows || raw.cols != intensity.cols)
        throw std::invalid_argument("split_on_off: dimension mismatch");
    TransientMap on = raw, off = raw;
    on.polarity = Polarity::On;
    off.polarity = Polarity::Off;
    for (size_t px = 0; px < raw.cls.size(); ++px) {
        const TransientClass c = raw.cls[px];
        const bool dark = intensity.data[px] < intensity_split;
        if (c == TransientClass::None) {
            on.cls[px] = off.cls[px] = TransientClass::None;
        } else if (dark) {
            off.cls[px] = c; // class A -> Appearing, class B -> Disappearing
            on.cls[px] = TransientClass::None;
        } else {
            on.cls[px] = (c == TransientClass::Appearing) ? TransientClass::Disappearing
                                                          : TransientClass::Appearing;
            off.cls[px] = TransientClass::None;
        }
    }
    return {on, off};
}

// Intensity of the moving content: whichever of the two frames deviates more
// from the background estimate at that pixel. Feeding this grid into
// split_on_off classifies both the appearing and the vanished side of a
// mover by the mover's own intensity.
inline ByteImage mover_intensity(const ByteImage& prev, const ByteImage& cur,
                                 const ByteImage& background) {
    if (prev.rows != cur.rows || prev.cols != cur.cols || prev.rows != background.rows ||
        prev.cols != background.cols)
        throw std::invalid_argument("mover_intensity: dimension mismatch");
    ByteImage out(cur.rows, cur.cols);
    for (size_t px = 0; px < out.data.size(); ++px) {
        const int dc = std::abs(static_cast<int>(cur.data[px]) - background.data[px]);
        const int dp = std::abs(static_cast<int>(prev.data[px]) - background.data[px]);
        out.data[px] = dc >= dp ? cur.data[px] : prev.data[px];
    }
    return out;
}

// Per-pixel median over the frames; a background estimate for scenes where
// movers occupy each pixel only briefly.
inline ByteImage temporal_median(const FrameSequence& seq) {
    seq.validate();
    ByteImage out(seq.rows(), seq.cols());
    std::vector<std::uint8_t> v(seq.frames.size());
    for (size_t px = 0; px < out.data.size(); ++px) {
        for (size_t f = 0; f < seq.frames.size(); ++f) v[f] = seq.frames[f].data[px];
        const size_t mid = (v.size() - 1) / 2;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
        out.data[px] = v[mid];
    }
    return out;
}

// --- comparison -------------------------------------------------------------

inline double mismatch_rate(const EdgeMap& a, const EdgeMap& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("mismatch_rate: dimension mismatch");
    size_t diff = 0;
    for (size_t px = 0; px < a.edge.size(); ++px)
        if ((a.edge[px] != 0) != (b.edge[px] != 0)) ++diff;
    return static_cast<double>(diff) / static_cast<double>(a.edge.size());
}

inline double mismatch_rate(const TransientMap& a, const TransientMap& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("mismatch_rate: dimension mismatch");
    size_t diff = 0;
    for (size_t px = 0; px < a.cls.size(); ++px)
        if (a.cls[px] != b.cls[px]) ++diff;
    return static_cast<double>(diff) / static_cast<double>(a.cls.size());
}

struct F1Score {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline F1Score edge_f1(const EdgeMap& detected, const ByteImage& truth) {
    if (detected.rows != truth.rows || detected.cols != truth.cols)
        throw std::invalid_argument("edge_f1: dimension mismatch");
    long tp = 0, fp = 0, fn = 0;
    for (size_t px = 0; px < detected.edge.size(); ++px) {
        const bool d = detected.edge[px] != 0;
        const bool g = truth.data[px] != 0;
        if (d && g) ++tp;
        else if (d) ++fp;
        else if (g) ++fn;
    }
    F1Score s;
    s.precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall > 0.0) ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                          : 0.0;
    return s;
}

enum class Axis { Horizontal, Vertical };

// Median run length of consecutive Appearing pixels along the axis, over all
// rows (or columns) intersecting the band. Pixels per frame.
inline double band_thickness_speed(const TransientMap& map, Axis axis) {
    std::vector<int> runs;
    const int outer = (axis == Axis::Horizontal) ? map.rows : map.cols;
    const int inner = (axis == Axis::Horizontal) ? map.cols : map.rows;
    for (int o = 0; o < outer; ++o) {
        int run = 0;
        for (int i = 0; i <= inner; ++i) {
            const bool app =
                i < inner && ((axis == Axis::Horizontal ? map.at(o, i) : map.at(i, o)) ==
                              TransientClass::Appearing);
            if (app) {
                ++run;
            } else if (run > 0) {
                runs.push_back(run);
                run = 0;
            }
        }
    }
    if (runs.empty()) throw std::invalid_argument("band_thickness_speed: no Appearing band");
    std::sort(runs.begin(), runs.end());
    const size_t n = runs.size();
    return (n % 2 == 1) ? runs[n / 2] : 0.5 * (runs[n / 2 - 1] + runs[n / 2]);
}

// --- export -----------------------------------------------------------------

inline ByteImage to_image(const EdgeMap& map) {
    ByteImage img(map.rows, map.cols, 255);
    for (size_t px = 0; px < map.edge.size(); ++px)
        if (map.edge[px]) img.data[px] = 0;
    return img;
}

inline ByteImage to_image(const TransientMap& map) {
    ByteImage img(map.rows, map.cols, 255);
    for (size_t px = 0; px < map.cls.size(); ++px) {
        if (map.cls[px] == TransientClass::Appearing) img.data[px] = 0;
        else if (map.cls[px] == TransientClass::Disappearing) img.data[px] = 128;
    }
    return img;
}

inline void write_map_csv(std::ostream& out, const TransientMap& map) {
    out << "row,col,class\n";
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c) {
            const TransientClass cl = map.at(r, c);
            if (cl == TransientClass::None) continue;
            out << r << "," << c << ","
                << (cl == TransientClass::Appearing ? "appearing" : "disappearing") << "\n";
        }
}

inline void write_map_csv(std::ostream& out, const EdgeMap& map) {
    out << "row,col,class\n";
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c)
            if (map.at(r, c)) out << r << "," << c << ",edge\n";
}

} // namespace memgrid
