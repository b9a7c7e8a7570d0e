#pragma once

// Optical-flow estimation: a second memristive-grid pass biased from a
// transient map, and a Horn-Schunck reference oracle.

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "memgrid/detection.hpp"
#include "memgrid/solver.hpp"

namespace memgrid {

struct FlowField {
    int rows = 0, cols = 0;
    std::vector<double> u, v;         // x (east) and y (south) components
    std::vector<std::uint8_t> mask;   // 1 where the vector is defined

    double u_at(int r, int c) const { return u[static_cast<size_t>(r) * cols + c]; }
    double v_at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    bool masked(int r, int c) const { return mask[static_cast<size_t>(r) * cols + c] != 0; }
};

struct GradientField {
    int rows = 0, cols = 0;
    std::vector<double> ix, iy, it;
};

// Disappearing ("darker") pixels become +volts sources behind a series
// resistor, Appearing ("lighter") pixels are tied straight to ground, and
// everything else floats on the fuse lattice.
inline StaticBias transient_to_sources(const TransientMap& map, double source_volts = 0.040,
                                       double r_series = 1000.0) {
    const int n_app = map.count(TransientClass::Appearing);
    const int n_dis = map.count(TransientClass::Disappearing);
    if (n_app == 0 || n_dis == 0)
        throw std::invalid_argument("transient_to_sources: need both Appearing and Disappearing pixels");
    StaticBias bias;
    bias.rows = map.rows;
    bias.cols = map.cols;
    bias.r_series = r_series;
    bias.kind.assign(map.cls.size(), BiasKind::Floating);
    bias.volts.assign(map.cls.size(), 0.0);
    for (size_t px = 0; px < map.cls.size(); ++px) {
        if (map.cls[px] == TransientClass::Disappearing) {
            bias.kind[px] = BiasKind::SourceResistor;
            bias.volts[px] = source_volts;
        } else if (map.cls[px] == TransientClass::Appearing) {
            bias.kind[px] = BiasKind::GroundTie;
        }
    }
    return bias;
}

// At each masked pixel, the vector sum over its (up to six) incident fuses of
// sign(outgoing current) * |dM/dt| * unit direction. Current flows from the
// sources at disappearing edges toward the grounds at appearing edges, so the
// vectors point along the motion. Magnitudes stay in ohm/second.
inline FlowField flow_vectors(const GridTopology& topo, const SimulationTrace& tr, double t,
                              const std::vector<std::uint8_t>& mask) {
    if (topo.layers != 1)
        throw std::invalid_argument("flow_vectors: expects the single-layer flow pass");
    if (mask.size() != static_cast<size_t>(topo.rows) * topo.cols)
        throw std::invalid_argument("flow_vectors: mask dimension mismatch");
    const int s = tr.sample_index_at(t);
    if (s < 1) throw std::out_of_range("flow_vectors: rates undefined at the first sample");
    FlowField field;
    field.rows = topo.rows;
    field.cols = topo.cols;
    field.u.assign(mask.size(), 0.0);
    field.v.assign(mask.size(), 0.0);
    field.mask = mask;
    const auto& volts = tr.grid_volts[s];
    for (int r = 0; r < topo.rows; ++r) {
        for (int c = 0; c < topo.cols; ++c) {
            const size_t px = static_cast<size_t>(r) * topo.cols + c;
            if (!mask[px]) continue;
            const int node = topo.grid_node(1, r, c);
            double u = 0.0, v = 0.0;
            for (const auto& inc : topo.incident[node]) {
                const FuseEdge& e = topo.fuses[inc.fuse];
                const Node& na = topo.nodes[e.node_a];
                const Node& nb = topo.nodes[e.node_b];
                const double va = volts[topo.grid_index(na.layer, na.row, na.col)];
                const double vb = volts[topo.grid_index(nb.layer, nb.row, nb.col)];
                const double outgoing = inc.sign * (va - vb) / tr.fuse_m[s][inc.fuse];
                if (outgoing == 0.0) continue;
                const double w = (outgoing > 0.0 ? 1.0 : -1.0) *
                                 std::fabs(tr.fuse_rate(s, inc.fuse));
                const Direction d = inc.sign > 0 ? e.dir : opposite(e.dir);
                const Vec2 unit = direction_unit(d);
                u += w * unit.x;
                v += w * unit.y;
            }
            field.u[px] = u;
            field.v[px] = v;
        }
    }
    return field;
}

// --- Horn-Schunck oracle ------------------------------------------------------

namespace detail {
inline double clamped(const std::vector<double>& img, int rows, int cols, int r, int c) {
    r = std::clamp(r, 0, rows - 1);
    c = std::clamp(c, 0, cols - 1);
    return img[static_cast<size_t>(r) * cols + c];
}
} // namespace detail

// Central differences of the two-frame average for I_x and I_y (one-sided at
// the borders); I_t is the plain frame difference. Intensities are scaled to
// [0,1].
inline GradientField image_gradients(const ByteImage& a, const ByteImage& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("image_gradients: dimension mismatch");
    const int rows = a.rows, cols = a.cols;
    std::vector<double> avg(a.data.size());
    GradientField g;
    g.rows = rows;
    g.cols = cols;
    g.ix.resize(avg.size());
    g.iy.resize(avg.size());
    g.it.resize(avg.size());
    for (size_t px = 0; px < avg.size(); ++px) {
        avg[px] = 0.5 * (a.data[px] + b.data[px]) / 255.0;
        g.it[px] = (static_cast<double>(b.data[px]) - a.data[px]) / 255.0;
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const size_t px = static_cast<size_t>(r) * cols + c;
            const int cl = std::max(c - 1, 0), cr = std::min(c + 1, cols - 1);
            const int ru = std::max(r - 1, 0), rd = std::min(r + 1, rows - 1);
            g.ix[px] = (detail::clamped(avg, rows, cols, r, cr) -
                        detail::clamped(avg, rows, cols, r, cl)) /
                       static_cast<double>(cr - cl);
            g.iy[px] = (detail::clamped(avg, rows, cols, rd, c) -
                        detail::clamped(avg, rows, cols, ru, c)) /
                       static_cast<double>(rd - ru);
        }
    }
    return g;
}

namespace detail {
// Weighted local average of the original Horn-Schunck discretization.
inline void local_average(const std::vector<double>& f, int rows, int cols,
                          std::vector<double>& out) {
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double edge = clamped(f, rows, cols, r - 1, c) + clamped(f, rows, cols, r + 1, c) +
                                clamped(f, rows, cols, r, c - 1) + clamped(f, rows, cols, r, c + 1);
            const double diag = clamped(f, rows, cols, r - 1, c - 1) +
                                clamped(f, rows, cols, r - 1, c + 1) +
                                clamped(f, rows, cols, r + 1, c - 1) +
                                clamped(f, rows, cols, r + 1, c + 1);
            out[static_cast<size_t>(r) * cols + c] = edge / 6.0 + diag / 12.0;
        }
}
} // namespace detail

// Iterative relaxation of the Euler-Lagrange pair with the local-average
// Laplacian: u <- ubar - I_x (I_x ubar + I_y vbar + I_t) / (lambda + I_x^2 + I_y^2).
inline FlowField horn_schunck(const ByteImage& a, const ByteImage& b, double lambda = 0.1,
                              int iterations = 200) {
    if (!(lambda > 0.0)) throw std::invalid_argument("horn_schunck: lambda must be positive");
    if (iterations < 1) throw std::invalid_argument("horn_schunck: need at least one iteration");
    const GradientField g = image_gradients(a, b);
    const int rows = g.rows, cols = g.cols;
    const size_t n = g.ix.size();
    FlowField f;
    f.rows = rows;
    f.cols = cols;
    f.u.assign(n, 0.0);
    f.v.assign(n, 0.0);
    f.mask.assign(n, 1);
    std::vector<double> ubar(n), vbar(n);
    for (int it = 0; it < iterations; ++it) {
        detail::local_average(f.u, rows, cols, ubar);
        detail::local_average(f.v, rows, cols, vbar);
        for (size_t px = 0; px < n; ++px) {
            const double t = (g.ix[px] * ubar[px] + g.iy[px] * vbar[px] + g.it[px]) /
                             (lambda + g.ix[px] * g.ix[px] + g.iy[px] * g.iy[px]);
            f.u[px] = ubar[px] - g.ix[px] * t;
            f.v[px] = vbar[px] - g.iy[px] * t;
        }
    }
    return f;
}

// Max-norm of the Euler-Lagrange residual pair of the current field.
inline double horn_schunck_residual(const GradientField& g, const FlowField& f, double lambda) {
    std::vector<double> ubar(f.u.size()), vbar(f.v.size());
    detail::local_average(f.u, g.rows, g.cols, ubar);
    detail::local_average(f.v, g.rows, g.cols, vbar);
    double worst = 0.0;
    for (size_t px = 0; px < f.u.size(); ++px) {
        const double data = g.ix[px] * f.u[px] + g.iy[px] * f.v[px] + g.it[px];
        const double ru = g.ix[px] * data - lambda * (ubar[px] - f.u[px]);
        const double rv = g.iy[px] * data - lambda * (vbar[px] - f.v[px]);
        worst = std::max({worst, std::fabs(ru), std::fabs(rv)});
    }
    return worst;
}

// Mean angle in radians between the two fields' directions over pixels where
// both are defined and nonzero.
inline double mean_angular_difference(const FlowField& a, const FlowField& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("mean_angular_difference: dimension mismatch");
    double sum = 0.0;
    long n = 0;
    for (size_t px = 0; px < a.u.size(); ++px) {
        if (!a.mask[px] || !b.mask[px]) continue;
        const double na = std::hypot(a.u[px], a.v[px]);
        const double nb = std::hypot(b.u[px], b.v[px]);
        if (na < 1e-30 || nb < 1e-30) continue;
        double cosang = (a.u[px] * b.u[px] + a.v[px] * b.v[px]) / (na * nb);
        cosang = std::clamp(cosang, -1.0, 1.0);
        sum += std::acos(cosang);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mean_angular_difference: no comparable vectors");
    return sum / static_cast<double>(n);
}

// --- export -----------------------------------------------------------------

inline void write_flow_csv(std::ostream& out, const FlowField& f) {
    out << "row,col,u,v\n";
    for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c)
            if (f.masked(r, c)) out << r << "," << c << "," << f.u_at(r, c) << "," << f.v_at(r, c) << "\n";
}

// Color-wheel rendering: hue from direction, saturation from magnitude
// relative to the field's maximum; unmasked pixels render white.
inline RgbImage flow_to_ppm(const FlowField& f) {
    double max_mag = 0.0;
    for (size_t px = 0; px < f.u.size(); ++px)
        if (f.mask[px]) max_mag = std::max(max_mag, std::hypot(f.u[px], f.v[px]));
    RgbImage img(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c) {
            std::uint8_t* px = img.px(r, c);
            if (!f.masked(r, c) || max_mag == 0.0) {
                px[0] = px[1] = px[2] = 255;
                continue;
            }
            const double mag = std::hypot(f.u_at(r, c), f.v_at(r, c)) / max_mag;
            double hue = std::atan2(f.v_at(r, c), f.u_at(r, c)); // [-pi, pi]
            hue = (hue + std::numbers::pi) / (2.0 * std::numbers::pi) * 6.0;
            const int sect = std::min(5, static_cast<int>(hue));
            const double frac = hue - sect;
            const double p = 1.0 - mag;
            const double q = 1.0 - mag * frac;
            const double t = 1.0 - mag * (1.0 - frac);
            double rgb[3];
            switch (sect) {
                case 0: rgb[0] = 1; rgb[1] = t; rgb[2] = p; break;
                case 1: rgb[0] = q; rgb[1] = 1; rgb[2] = p; break;
                case 2: rgb[0] = p; rgb[1] = 1; rgb[2] = t; break;
                case 3: rgb[0] = p; rgb[1] = q; rgb[2] = 1; break;
                case 4: rgb[0] = t; rgb[1] = p; rgb[2] = 1; break;
                default: rgb[0] = 1; rgb[1] = p; rgb[2] = q; break;
            }
            for (int ch = 0; ch < 3; ++ch)
                px[ch] = static_cast<std::uint8_t>(std::lround(255.0 * rgb[ch]));
        }
    return img;
}

} // namespace memgrid
