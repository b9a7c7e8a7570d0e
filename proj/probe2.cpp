// Temporary sweep probe (not part of the build).
#include <cstdio>
#include <vector>

#include "memgrid/detection.hpp"
#include "memgrid/solver.hpp"
#include "memgrid/stimulus.hpp"
#include "memgrid/topology.hpp"

using namespace memgrid;

struct Rule {
    const char* name;
    double (*theta)(std::vector<double>, double);
    double arg;
};

static double by_median(std::vector<double> v, double m) { return adaptive_threshold(std::move(v), m); }
static double by_max(std::vector<double> v, double c) {
    double mx = 0;
    for (double x : v) mx = std::max(mx, std::fabs(x));
    return std::max(c * mx, 1e-6);
}
static double by_quantile90(std::vector<double> v, double m) {
    for (auto& x : v) x = std::fabs(x);
    std::sort(v.begin(), v.end());
    return std::max(m * v[static_cast<size_t>(v.size() * 0.90)], 1e-6);
}

int main() {
    const Rule rules[] = {
        {"med x5", by_median, 5},        {"med x50", by_median, 50},
        {"med x200", by_median, 200},    {"max x0.10", by_max, 0.10},
        {"max x0.20", by_max, 0.20},     {"max x0.30", by_max, 0.30},
        {"p90 x2", by_quantile90, 2.0},  {"p90 x4", by_quantile90, 4.0},
    };
    for (double r_series : {1000.0, 300.0, 100.0, 50.0}) {
        SynthBoxSpec spec;
        const auto seq = synth_box(spec);
        const auto stim1 = build_stimulus(seq, 1);
        const auto topo1 = build_hex_layer(spec.rows, spec.cols, DeviceParams{}, 200.0, r_series);
        const auto tr1 = run(topo1, stim1, SolverOptions{}, r_series);
        const auto stim2 = build_stimulus(seq, 2);
        const auto topo2 = build_double_layer(spec.rows, spec.cols, DeviceParams{}, 200.0, r_series);
        const auto tr2 = run(topo2, stim2, SolverOptions{}, r_series);
        const auto background = temporal_median(seq);
        const double T = seq.frame_period();
        std::printf("=== r_series=%g ===\n", r_series);
        for (const auto& rule : rules) {
            double worst_f1 = 1.0, sum_f1 = 0.0;
            for (int f = 1; f <= spec.frame_count; ++f) {
                const int s = tr1.frame_end_sample(T, f);
                const double theta = rule.theta(fuse_rates_at(topo1, tr1, s), rule.arg);
                const auto map = edge_map_rate_threshold(topo1, tr1, tr1.times[s], theta, 2);
                const auto f1 = edge_f1(map, synth_box_outline(spec, f - 1)).f1;
                worst_f1 = std::min(worst_f1, f1);
                sum_f1 += f1;
            }
            // transient side
            int on_bad = 0;
            double thick25 = -1, thick715 = -1;
            bool thick_const = true;
            for (int f = 2; f <= spec.frame_count; ++f) {
                const int s = tr2.frame_end_sample(T, f);
                const double theta = rule.theta(inter_rates_at(tr2, s), rule.arg);
                const auto raw = transient_raw(topo2, tr2, tr2.times[s], theta);
                const auto mover = mover_intensity(seq.frames[f - 2], seq.frames[f - 1], background);
                auto [on, off] = split_on_off(raw, mover);
                if (!on.empty()) ++on_bad;
                double th = -1;
                try { th = band_thickness_speed(off, Axis::Horizontal); } catch (...) {}
                if (f >= 2 && f <= 5) {
                    if (thick25 < 0) thick25 = th;
                    else if (th != thick25) thick_const = false;
                }
                if (f >= 7) {
                    if (thick715 < 0) thick715 = th;
                    else if (th != thick715) thick_const = false;
                }
            }
            std::printf("  %-10s worstF1=%.3f meanF1=%.3f | on_nonempty=%d thick2-5=%.1f thick7-15=%.1f const=%d\n",
                        rule.name, worst_f1, sum_f1 / spec.frame_count, on_bad, thick25, thick715,
                        thick_const ? 1 : 0);
        }
    }
    return 0;
}
