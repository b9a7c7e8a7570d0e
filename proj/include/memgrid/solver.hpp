#pragma once

// Per-timestep resistive network solve + memristor state advance.
//
// Unknowns are the grid-node voltages (ground and ground-tied nodes are
// eliminated; source nodes are ideal and enter through the Norton pair of
// their series resistor). Memristances are frozen during each solve, then
// every device takes one explicit Euler step from its branch current.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "memgrid/stimulus.hpp"
#include "memgrid/topology.hpp"

namespace memgrid {

struct SolverError : std::runtime_error {
    double residual = 0.0;
    explicit SolverError(const std::string& msg, double res = 0.0)
        : std::runtime_error(msg), residual(res) {}
};

struct SolverOptions {
    double dt = 1e-4;           // seconds per integration step
    double sample_every = 1e-3; // trace sampling cadence (>= dt)
    double cg_tol_rel = 1e-12;  // on ||G v - i||_inf relative to ||i||_inf
    double cg_tol_abs = 1e-15;  // amperes, used when the injection is zero
    int cg_max_iter_factor = 10;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
};

enum class BiasKind : std::uint8_t { Floating, SourceResistor, GroundTie };

// Static per-pixel biasing of a single-layer grid (used by the flow pass).
struct StaticBias {
    int rows = 0;
    int cols = 0;
    std::vector<BiasKind> kind;  // per pixel, row-major
    std::vector<double> volts;   // per pixel source voltage
    double r_series = 1000.0;
};

// Either every pixel is driven from a stimulus through a uniform series
// resistor, or a static per-pixel bias map applies.
struct Biasing {
    const Stimulus* stimulus = nullptr;
    double r_series = 1000.0;
    const StaticBias* static_bias = nullptr;

    static Biasing from_stimulus(const Stimulus& s, double r_series) {
        Biasing b;
        b.stimulus = &s;
        b.r_series = r_series;
        return b;
    }
    static Biasing from_static(const StaticBias& s) {
        Biasing b;
        b.static_bias = &s;
        b.r_series = s.r_series;
        return b;
    }

    BiasKind kind(int grid_index) const {
        if (stimulus) return BiasKind::SourceResistor;
        return static_bias->kind[grid_index];
    }
    double source_volts(const GridTopology& t, int grid_index, double time) const {
        if (stimulus) {
            const int px = grid_index % (t.rows * t.cols);
            const int layer = grid_index / (t.rows * t.cols) + 1;
            return stimulus->value(layer, px / t.cols, px % t.cols, time);
        }
        return static_bias->volts[grid_index];
    }
};

// --- engine -----------------------------------------------------------------

class CircuitEngine {
  public:
    CircuitEngine(const GridTopology& topo, Biasing bias, SolverOptions opt = {})
        : topo_(&topo), bias_(bias), opt_(opt) {
        fuses_.reserve(topo.fuses.size());
        for (const auto& e : topo.fuses) fuses_.push_back(e.fuse);
        build_pattern();
    }

    int dim() const { return n_; }
    const std::vector<int>& unknown_of_node() const { return unknown_of_node_; }
    const std::vector<Fuse>& fuses() const { return fuses_; }
    double time() const { return time_; }

    double node_voltage(int node_id) const {
        const int u = unknown_of_node_[node_id];
        return u >= 0 ? x_[u] : 0.0;
    }
    double grid_voltage(int grid_index) const { return node_voltage(1 + grid_index); }

    double fuse_resistance_of(int f) const { return fuse_resistance(fuses_[f]); }
    // Signed a -> b.
    double fuse_current(int f) const {
        const FuseEdge& e = topo_->fuses[f];
        return (node_voltage(e.node_a) - node_voltage(e.node_b)) / fuse_resistance(fuses_[f]);
    }

    // Refill the system for the device states and bias at time t, then solve.
    SolveStats solve_at(double t) {
        time_ = t;
        refill(t);
        return pcg();
    }

    // Advance every device one Euler step from the current solution.
    void advance_states(double dt) {
        for (size_t f = 0; f < fuses_.size(); ++f) step_fuse(fuses_[f], fuse_current(static_cast<int>(f)), dt);
    }

    const std::vector<double>& rhs() const { return b_; }

  private:
    const GridTopology* topo_;
    Biasing bias_;
    SolverOptions opt_;
    std::vector<Fuse> fuses_;
    double time_ = 0.0;

    int n_ = 0;
    std::vector<int> unknown_of_node_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_, diag_;
    std::vector<double> b_, x_;
    // Per fuse: value slots (diag a, diag b, offdiag ab, offdiag ba); -1 if absent.
    struct FuseSlots {
        int ua = -1, ub = -1, aa = -1, bb = -1, ab = -1, ba = -1;
    };
    std::vector<FuseSlots> slots_;
    std::vector<double> bias_g_;          // per unknown, series conductance (0 if none)
    std::vector<int> bias_grid_index_;    // per unknown, grid index for voltage lookup
    std::vector<double> r_, p_, q_, z_;   // PCG work vectors

    void build_pattern() {
        const GridTopology& t = *topo_;
        unknown_of_node_.assign(t.nodes.size(), -1);
        for (size_t id = 0; id < t.nodes.size(); ++id) {
            if (t.nodes[id].kind != NodeKind::Grid) continue;
            const int gi = t.grid_index(t.nodes[id].layer, t.nodes[id].row, t.nodes[id].col);
            if (bias_.kind(gi) == BiasKind::GroundTie) continue;
            unknown_of_node_[id] = n_++;
        }
        // Adjacency (unknown -> unknown) from fuses.
        std::vector<std::vector<int>> adj(n_);
        for (const auto& e : t.fuses) {
            const int ua = unknown_of_node_[e.node_a], ub = unknown_of_node_[e.node_b];
            if (ua >= 0 && ub >= 0) {
                adj[ua].push_back(ub);
                adj[ub].push_back(ua);
            }
        }
        row_ptr_.assign(n_ + 1, 0);
        for (int u = 0; u < n_; ++u) row_ptr_[u + 1] = row_ptr_[u] + 1 + static_cast<int>(adj[u].size());
        col_.resize(row_ptr_[n_]);
        for (int u = 0; u < n_; ++u) {
            int pos = row_ptr_[u];
            col_[pos++] = u; // diagonal first
            std::vector<int> nb = adj[u];
            std::sort(nb.begin(), nb.end());
            for (int v : nb) col_[pos++] = v;
        }
        val_.assign(col_.size(), 0.0);
        diag_.assign(n_, 0.0);
        b_.assign(n_, 0.0);
        x_.assign(n_, 0.0);
        r_.assign(n_, 0.0);
        p_.assign(n_, 0.0);
        q_.assign(n_, 0.0);
        z_.assign(n_, 0.0);

        auto slot_of = [&](int u, int v) {
            for (int k = row_ptr_[u]; k < row_ptr_[u + 1]; ++k)
                if (col_[k] == v) return k;
            return -1;
        };
        slots_.resize(t.fuses.size());
        for (size_t f = 0; f < t.fuses.size(); ++f) {
            const auto& e = t.fuses[f];
            FuseSlots s;
            s.ua = unknown_of_node_[e.node_a];
            s.ub = unknown_of_node_[e.node_b];
            if (s.ua >= 0) s.aa = row_ptr_[s.ua]; // diagonal is the first entry
            if (s.ub >= 0) s.bb = row_ptr_[s.ub];
            if (s.ua >= 0 && s.ub >= 0) {
                s.ab = slot_of(s.ua, s.ub);
                s.ba = slot_of(s.ub, s.ua);
            }
            slots_[f] = s;
        }
        bias_g_.assign(n_, 0.0);
        bias_grid_index_.assign(n_, -1);
        for (const auto& res : t.resistors) {
            const int u = unknown_of_node_[res.grid_node];
            if (u < 0) continue;
            const Node& gn = t.nodes[res.grid_node];
            const int gi = t.grid_index(gn.layer, gn.row, gn.col);
            if (bias_.kind(gi) != BiasKind::SourceResistor) continue;
            bias_g_[u] = 1.0 / res.r_series;
            bias_grid_index_[u] = gi;
        }
        // A well-posed row needs at least one conductance.
        refill(0.0);
        for (int u = 0; u < n_; ++u)
            if (diag_[u] <= 0.0)
                throw SolverError("singular assembly: isolated node with no incident conductance");
    }

    void refill(double t) {
        std::fill(val_.begin(), val_.end(), 0.0);
        std::fill(b_.begin(), b_.end(), 0.0);
        for (size_t f = 0; f < slots_.size(); ++f) {
            const double g = 1.0 / fuse_resistance(fuses_[f]);
            const FuseSlots& s = slots_[f];
            if (s.aa >= 0) val_[s.aa] += g;
            if (s.bb >= 0) val_[s.bb] += g;
            if (s.ab >= 0) val_[s.ab] -= g;
            if (s.ba >= 0) val_[s.ba] -= g;
            // An endpoint at ground or a ground tie contributes no rhs term.
        }
        for (int u = 0; u < n_; ++u) {
            if (bias_g_[u] > 0.0) {
                val_[row_ptr_[u]] += bias_g_[u];
                b_[u] += bias_g_[u] * bias_.source_volts(*topo_, bias_grid_index_[u], t);
            }
            diag_[u] = val_[row_ptr_[u]];
        }
    }

    void spmv(const std::vector<double>& v, std::vector<double>& out) const {
        for (int u = 0; u < n_; ++u) {
            double acc = 0.0;
            for (int k = row_ptr_[u]; k < row_ptr_[u + 1]; ++k) acc += val_[k] * v[col_[k]];
            out[u] = acc;
        }
    }

    static double inf_norm(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::fabs(x));
        return m;
    }

    SolveStats pcg() {
        const double bnorm = inf_norm(b_);
        const double tol = std::max(opt_.cg_tol_rel * bnorm, opt_.cg_tol_abs);
        spmv(x_, r_);
        for (int u = 0; u < n_; ++u) r_[u] = b_[u] - r_[u];
        double rnorm = inf_norm(r_);
        SolveStats st;
        st.residual = rnorm;
        if (rnorm <= tol) return st;
        for (int u = 0; u < n_; ++u) z_[u] = r_[u] / diag_[u];
        p_ = z_;
        double rz = 0.0;
        for (int u = 0; u < n_; ++u) rz += r_[u] * z_[u];
        const int max_iter = opt_.cg_max_iter_factor * std::max(n_, 1);
        for (int it = 1; it <= max_iter; ++it) {
            spmv(p_, q_);
            double pq = 0.0;
            for (int u = 0; u < n_; ++u) pq += p_[u] * q_[u];
            if (pq <= 0.0) throw SolverError("pcg: system not positive definite", rnorm);
            const double alpha = rz / pq;
            for (int u = 0; u < n_; ++u) {
                x_[u] += alpha * p_[u];
                r_[u] -= alpha * q_[u];
            }
            rnorm = inf_norm(r_);
            st.iterations = it;
            st.residual = rnorm;
            if (rnorm <= tol) return st;
            double rz_next = 0.0;
            for (int u = 0; u < n_; ++u) {
                z_[u] = r_[u] / diag_[u];
                rz_next += r_[u] * z_[u];
            }
            if (rz_next == 0.0) return st;
            const double beta = rz_next / rz;
            rz = rz_next;
            for (int u = 0; u < n_; ++u) p_[u] = z_[u] + beta * p_[u];
        }
        throw SolverError("pcg: no convergence within " + std::to_string(max_iter) +
                              " iterations, residual " + std::to_string(rnorm),
                          rnorm);
    }
};

// --- trace ------------------------------------------------------------------

struct SimulationTrace {
    int rows = 0, cols = 0, layers = 1;
    int inter_fuse_base = -1; // index of the first Inter fuse (pixel-ordered), -1 for one layer
    std::vector<double> times;
    std::vector<std::vector<double>> fuse_m;     // [sample][fuse] composite memristance
    std::vector<std::vector<double>> inter_a_m;  // [sample][pixel] cM1 memristance
    std::vector<std::vector<double>> inter_b_m;  // [sample][pixel] cM2 memristance
    std::vector<std::vector<double>> grid_volts; // [sample][grid index]

    int sample_count() const { return static_cast<int>(times.size()); }
    int fuse_count() const { return fuse_m.empty() ? 0 : static_cast<int>(fuse_m[0].size()); }

    int sample_index_at(double t) const {
        if (times.empty() || t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw std::out_of_range("trace: time outside recorded range");
        int lo = 0;
        for (int s = 0; s < sample_count(); ++s)
            if (times[s] <= t + 1e-12) lo = s;
        return lo;
    }

    // Last sample strictly inside the 1-based frame period.
    int frame_end_sample(double frame_period, int frame_1based) const {
        const double t_end = frame_1based * frame_period;
        int best = -1;
        for (int s = 0; s < sample_count(); ++s)
            if (times[s] < t_end - 1e-12) best = s;
        if (best < 1) throw std::out_of_range("trace: no rated sample inside requested frame");
        return best;
    }

    double dt_of_sample(int s) const { return times[s] - times[s - 1]; }

    // Backward-difference rates, defined from the second sample onward.
    double fuse_rate(int s, int f) const {
        return (fuse_m[s][f] - fuse_m[s - 1][f]) / dt_of_sample(s);
    }
    double inter_a_rate(int s, int px) const {
        return (inter_a_m[s][px] - inter_a_m[s - 1][px]) / dt_of_sample(s);
    }
    double inter_b_rate(int s, int px) const {
        return (inter_b_m[s][px] - inter_b_m[s - 1][px]) / dt_of_sample(s);
    }
};

namespace detail {

inline void record_sample(SimulationTrace& tr, const CircuitEngine& eng, const GridTopology& topo,
                          double t) {
    tr.times.push_back(t);
    const auto& fuses = eng.fuses();
    std::vector<double> m(fuses.size());
    for (size_t f = 0; f < fuses.size(); ++f) m[f] = fuse_resistance(fuses[f]);
    tr.fuse_m.push_back(std::move(m));
    if (topo.layers == 2) {
        const int px_count = topo.rows * topo.cols;
        std::vector<double> ma(px_count), mb(px_count);
        for (int p = 0; p < px_count; ++p) {
            ma[p] = memristance(fuses[tr.inter_fuse_base + p].a);
            mb[p] = memristance(fuses[tr.inter_fuse_base + p].b);
        }
        tr.inter_a_m.push_back(std::move(ma));
        tr.inter_b_m.push_back(std::move(mb));
    }
    std::vector<double> v(topo.grid_node_count());
    for (int gi = 0; gi < topo.grid_node_count(); ++gi) v[gi] = eng.grid_voltage(gi);
    tr.grid_volts.push_back(std::move(v));
}

inline SimulationTrace run_engine(const GridTopology& topo, Biasing bias, double duration,
                                  const SolverOptions& opt) {
    if (!(opt.dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
    if (opt.sample_every < opt.dt)
        throw std::invalid_argument("run: sample_every must be >= dt");
    SimulationTrace tr;
    tr.rows = topo.rows;
    tr.cols = topo.cols;
    tr.layers = topo.layers;
    if (topo.layers == 2) {
        for (size_t f = 0; f < topo.fuses.size(); ++f)
            if (topo.fuses[f].dir == Direction::Inter) {
                tr.inter_fuse_base = static_cast<int>(f);
                break;
            }
    }
    CircuitEngine eng(topo, bias, opt);
    const long nsteps = static_cast<long>(std::llround(duration / opt.dt));
    const long stride = std::max(1L, static_cast<long>(std::llround(opt.sample_every / opt.dt)));
    eng.solve_at(0.0);
    record_sample(tr, eng, topo, 0.0);
    for (long k = 1; k <= nsteps; ++k) {
        eng.advance_states(opt.dt);
        const double t = k * opt.dt;
        eng.solve_at(t);
        if (k % stride == 0 || k == nsteps) record_sample(tr, eng, topo, t);
    }
    return tr;
}

} // namespace detail

inline SimulationTrace run(const GridTopology& topo, const Stimulus& stim,
                           const SolverOptions& opt = {}, double r_series = 1000.0) {
    if (stim.layers != topo.layers || stim.rows != topo.rows || stim.cols != topo.cols)
        throw std::invalid_argument("run: stimulus does not match the topology");
    return detail::run_engine(topo, Biasing::from_stimulus(stim, r_series), stim.duration, opt);
}

inline SimulationTrace run_static(const GridTopology& topo, const StaticBias& bias, double duration,
                                  const SolverOptions& opt = {}) {
    if (topo.layers != 1 || bias.rows != topo.rows || bias.cols != topo.cols)
        throw std::invalid_argument("run_static: bias map does not match the single-layer topology");
    return detail::run_engine(topo, Biasing::from_static(bias), duration, opt);
}

// --- checks -----------------------------------------------------------------

// Max over grid nodes of |sum of incident branch currents| relative to the
// node's own largest incident current, floored at 1e-3 of the instant's
// global peak so that equipotential regions compare against a meaningful
// scale instead of round-off noise.
inline double kcl_max_relative_residual(const GridTopology& topo, const SimulationTrace& tr,
                                        const Biasing& bias, int sample) {
    const auto& volts = tr.grid_volts[sample];
    const auto& fm = tr.fuse_m[sample];
    const double t = tr.times[sample];
    auto node_v = [&](int node_id) -> double {
        const Node& n = topo.nodes[node_id];
        if (n.kind != NodeKind::Grid) return 0.0;
        const int gi = topo.grid_index(n.layer, n.row, n.col);
        return bias.kind(gi) == BiasKind::GroundTie ? 0.0 : volts[gi];
    };
    std::vector<double> sum(topo.nodes.size(), 0.0), peak(topo.nodes.size(), 0.0);
    double global_peak = 0.0;
    for (size_t f = 0; f < topo.fuses.size(); ++f) {
        const auto& e = topo.fuses[f];
        const double i = (node_v(e.node_a) - node_v(e.node_b)) / fm[f];
        sum[e.node_a] -= i;
        sum[e.node_b] += i;
        peak[e.node_a] = std::max(peak[e.node_a], std::fabs(i));
        peak[e.node_b] = std::max(peak[e.node_b], std::fabs(i));
        global_peak = std::max(global_peak, std::fabs(i));
    }
    for (const auto& res : topo.resistors) {
        const Node& gn = topo.nodes[res.grid_node];
        const int gi = topo.grid_index(gn.layer, gn.row, gn.col);
        if (bias.kind(gi) != BiasKind::SourceResistor) continue;
        const double i = (bias.source_volts(topo, gi, t) - node_v(res.grid_node)) / res.r_series;
        sum[res.grid_node] += i;
        peak[res.grid_node] = std::max(peak[res.grid_node], std::fabs(i));
        global_peak = std::max(global_peak, std::fabs(i));
    }
    double worst = 0.0;
    for (size_t id = 1; id < topo.nodes.size(); ++id) {
        if (topo.nodes[id].kind != NodeKind::Grid) continue;
        const Node& n = topo.nodes[id];
        if (bias.kind(topo.grid_index(n.layer, n.row, n.col)) == BiasKind::GroundTie) continue;
        const double scale = std::max(peak[id], 1e-3 * global_peak);
        if (scale > 0.0) worst = std::max(worst, std::fabs(sum[id]) / scale);
    }
    return worst;
}

// --- trace export -----------------------------------------------------------

inline void write_trace_csv(std::ostream& out, const SimulationTrace& tr, int sample_stride = 1) {
    out << "time,fuse,memristance,rate\n";
    for (int s = 0; s < tr.sample_count(); s += sample_stride)
        for (int f = 0; f < tr.fuse_count(); ++f)
            out << tr.times[s] << "," << f << "," << tr.fuse_m[s][f] << ","
                << (s > 0 ? tr.fuse_rate(s, f) : 0.0) << "\n";
}

// Fixed-layout little-endian records: "MGTB", u32 version, u32 fuse count,
// u32 sample count, then per sample one f64 time followed by fuse-count f64
// composite memristances.
inline void write_trace_binary(const std::filesystem::path& path, const SimulationTrace& tr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_trace_binary: cannot open " + path.string());
    const char magic[4] = {'M', 'G', 'T', 'B'};
    out.write(magic, 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(1u);
    put_u32(static_cast<std::uint32_t>(tr.fuse_count()));
    put_u32(static_cast<std::uint32_t>(tr.sample_count()));
    for (int s = 0; s < tr.sample_count(); ++s) {
        out.write(reinterpret_cast<const char*>(&tr.times[s]), 8);
        out.write(reinterpret_cast<const char*>(tr.fuse_m[s].data()),
                  static_cast<std::streamsize>(tr.fuse_m[s].size() * 8));
    }
    if (!out) throw IoError("write_trace_binary: write failed for " + path.string());
}

struct BinaryTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> fuse_m;
};

inline BinaryTrace read_trace_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_trace_binary: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "MGTB")
        throw IoError("read_trace_binary: bad magic in " + path.string());
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    const std::uint32_t version = get_u32();
    if (version != 1u) throw IoError("read_trace_binary: unsupported version");
    const std::uint32_t fuses = get_u32();
    const std::uint32_t samples = get_u32();
    BinaryTrace tr;
    for (std::uint32_t s = 0; s < samples; ++s) {
        double t = 0.0;
        in.read(reinterpret_cast<char*>(&t), 8);
        std::vector<double> m(fuses);
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(fuses * 8));
        tr.times.push_back(t);
        tr.fuse_m.push_back(std::move(m));
    }
    if (!in) throw IoError("read_trace_binary: truncated file " + path.string());
    return tr;
}

} // namespace memgrid
