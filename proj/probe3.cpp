// Temporary probe: GT variants, min_count, eval timing. Not part of the build.
#include <cstdio>
#include <vector>

#include "memgrid/detection.hpp"
#include "memgrid/solver.hpp"
#include "memgrid/stimulus.hpp"
#include "memgrid/topology.hpp"

using namespace memgrid;

// Pixels with at least one hex neighbor of different intensity (both sides
// of every discontinuity).
static ByteImage contrast_band(const GridTopology& topo, const ByteImage& frame) {
    ByteImage out(frame.rows, frame.cols, 0);
    for (int r = 0; r < frame.rows; ++r)
        for (int c = 0; c < frame.cols; ++c)
            for (const auto& nb : neighbors(topo, topo.grid_node(1, r, c))) {
                const Node& n = topo.nodes[nb.node];
                if (frame.at(n.row, n.col) != frame.at(r, c)) {
                    out.at(r, c) = 1;
                    break;
                }
            }
    return out;
}

static void show(const EdgeMap& m, const ByteImage& gt) {
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            const bool d = m.at(r, c), g = gt.at(r, c) != 0;
            std::putchar(d && g ? '#' : d ? '+' : g ? 'o' : '.');
        }
        std::putchar('\n');
    }
}

int main(int argc, char** argv) {
    const double r_series = argc > 1 ? std::atof(argv[1]) : 100.0;
    const double frac = argc > 2 ? std::atof(argv[2]) : 0.2;
    const int min_count = argc > 3 ? std::atoi(argv[3]) : 2;
    const int eval_mode = argc > 4 ? std::atoi(argv[4]) : 0; // 0 end-of-frame, else samples after start
    const int window_p = argc > 5 ? std::atoi(argv[5]) : 10;
    std::printf("r_series=%g frac_of_max=%g min_count=%d eval=%d\n", r_series, frac, min_count, eval_mode);

    SynthBoxSpec spec;
    const auto seq = synth_box(spec);
    const auto stim = build_stimulus(seq, 1);
    DeviceParams dev;
    dev.p = window_p;
    const auto topo = build_hex_layer(spec.rows, spec.cols, dev, 200.0, r_series);
    const auto tr = run(topo, stim, SolverOptions{}, r_series);
    const double T = seq.frame_period();

    double worst_in = 1, worst_band = 1;
    for (int f = 1; f <= spec.frame_count; ++f) {
        int s;
        if (eval_mode == 0) s = tr.frame_end_sample(T, f);
        else {
            s = tr.sample_index_at((f - 1) * T) + eval_mode;
            s = std::min(s, tr.frame_end_sample(T, f));
        }
        auto rates = fuse_rates_at(topo, tr, s);
        double mx = 0;
        for (double v : rates) mx = std::max(mx, std::fabs(v));
        const auto map = edge_map_rate_threshold(topo, tr, tr.times[s], frac * mx, min_count);
        const auto inner = synth_box_outline(spec, f - 1);
        const auto band = contrast_band(topo, seq.frames[f - 1]);
        const double f1_in = edge_f1(map, inner).f1;
        const double f1_band = edge_f1(map, band).f1;
        worst_in = std::min(worst_in, f1_in);
        worst_band = std::min(worst_band, f1_band);
        std::printf("frame %2d: F1(inner)=%.3f F1(band)=%.3f detected=%d\n", f, f1_in, f1_band,
                    (int)std::count(map.edge.begin(), map.edge.end(), 1));
        if (f == 3 || f == 9) show(map, band);
    }
    std::printf("worst inner=%.3f band=%.3f\n", worst_in, worst_band);
    return 0;
}
