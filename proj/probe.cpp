// Temporary measurement probe (not part of the build).
#include <cstdio>
#include <map>

#include "memgrid/detection.hpp"
#include "memgrid/flow.hpp"
#include "memgrid/solver.hpp"
#include "memgrid/stimulus.hpp"
#include "memgrid/topology.hpp"

using namespace memgrid;

static void print_map(const EdgeMap& m) {
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) std::putchar(m.at(r, c) ? '#' : '.');
        std::putchar('\n');
    }
}

static void print_tmap(const TransientMap& m) {
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            char ch = '.';
            if (m.at(r, c) == TransientClass::Appearing) ch = 'A';
            if (m.at(r, c) == TransientClass::Disappearing) ch = 'D';
            std::putchar(ch);
        }
        std::putchar('\n');
    }
}

int main(int argc, char** argv) {
    const double r_series = argc > 1 ? std::atof(argv[1]) : 1000.0;
    const double mult = argc > 2 ? std::atof(argv[2]) : 5.0;
    const int min_count = argc > 3 ? std::atoi(argv[3]) : 2;
    std::printf("r_series=%g multiplier=%g min_count=%d\n", r_series, mult, min_count);

    SynthBoxSpec spec;
    const auto seq = synth_box(spec);
    const auto stim = build_stimulus(seq, 1);
    const auto topo = build_hex_layer(spec.rows, spec.cols, DeviceParams{}, 200.0, r_series);
    SolverOptions opt;
    const auto tr = run(topo, stim, opt, r_series);
    const double T = seq.frame_period();

    std::printf("== edge rate maps (frame: f1, median, theta) ==\n");
    for (int f = 1; f <= spec.frame_count; ++f) {
        const int s = tr.frame_end_sample(T, f);
        auto rates = fuse_rates_at(topo, tr, s);
        const double theta = adaptive_threshold(rates, mult);
        auto map = edge_map_rate_threshold(topo, tr, tr.times[s], theta, min_count);
        const auto truth = synth_box_outline(spec, f - 1);
        const auto f1 = edge_f1(map, truth);
        std::vector<double> sorted = rates;
        for (auto& v : sorted) v = std::fabs(v);
        std::sort(sorted.begin(), sorted.end());
        std::printf("frame %2d: F1=%.3f P=%.3f R=%.3f theta=%9.3g med=%9.3g p90=%9.3g max=%9.3g\n",
                    f, f1.f1, f1.precision, f1.recall, theta, sorted[sorted.size() / 2],
                    sorted[static_cast<size_t>(sorted.size() * 0.9)], sorted.back());
        if (f == 3) print_map(map);
    }

    std::printf("== state-threshold maps ==\n");
    for (int f = 1; f <= spec.frame_count; ++f) {
        const int s = tr.frame_end_sample(T, f);
        auto vars = state_variances_at(topo, tr, s);
        const double theta_var = adaptive_threshold(vars, mult);
        auto smap = edge_map_state_threshold(topo, tr, tr.times[s], theta_var);
        auto rates = fuse_rates_at(topo, tr, s);
        auto rmap = edge_map_rate_threshold(topo, tr, tr.times[s],
                                            adaptive_threshold(rates, mult), min_count);
        std::printf("frame %2d: state vs rate mismatch=%.4f state_px=%d\n", f,
                    mismatch_rate(smap, rmap),
                    (int)std::count(smap.edge.begin(), smap.edge.end(), 1));
        if (f == 4) print_map(smap);
    }

    // Transient pass on the double layer.
    std::printf("== transient (double layer) ==\n");
    const auto stim2 = build_stimulus(seq, 2);
    const auto topo2 = build_double_layer(spec.rows, spec.cols, DeviceParams{}, 200.0, r_series);
    const auto tr2 = run(topo2, stim2, opt, r_series);
    const auto background = temporal_median(seq);
    for (int f = 2; f <= spec.frame_count; ++f) {
        const int s = tr2.frame_end_sample(T, f);
        auto irates = inter_rates_at(tr2, s);
        const double theta = adaptive_threshold(irates, mult);
        auto raw = transient_raw(topo2, tr2, tr2.times[s], theta);
        const auto mover = mover_intensity(seq.frames[f - 2], seq.frames[f - 1], background);
        auto [on, off] = split_on_off(raw, mover);
        double thick = -1;
        try {
            thick = band_thickness_speed(off, Axis::Horizontal);
        } catch (...) {}
        std::vector<double> sorted = irates;
        std::sort(sorted.begin(), sorted.end());
        std::printf("frame %2d: on=%d offA=%d offD=%d thick=%.1f theta=%9.3g med=%9.3g max=%9.3g\n",
                    f, on.count(TransientClass::Appearing) + on.count(TransientClass::Disappearing),
                    off.count(TransientClass::Appearing), off.count(TransientClass::Disappearing),
                    thick, theta, sorted[sorted.size() / 2], sorted.back());
        if (f == 3 || f == 8) print_tmap(off);
    }
    return 0;
}
