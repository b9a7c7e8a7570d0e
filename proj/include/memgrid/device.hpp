#pragma once

// Single-memristor model: linear drift between R_on and R_off with a
// boundary window on the state derivative, plus the anti-series
// memristive fuse composite and the analytic flux-charge laws used
// for verification.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memgrid {

enum class WindowKind { Biolek, Prodromakis };

struct DeviceParams {
    double r_on = 100.0;    // ohm, fully conductive state
    double r_off = 16000.0; // ohm, fully resistive state
    double k = 1e4;         // 1/(A*s), aggregate mu_v*R_on/D^2
    WindowKind window = WindowKind::Prodromakis;
    int p = 10;             // window exponent
    double j = 1.0;         // Prodromakis amplitude, in (0,1]

    void validate() const {
        if (!(0.0 < r_on && r_on < r_off))
            throw std::invalid_argument("DeviceParams: need 0 < r_on < r_off");
        if (!(k > 0.0))
            throw std::invalid_argument("DeviceParams: need k > 0");
        if (p < 1)
            throw std::invalid_argument("DeviceParams: window exponent p must be >= 1");
        if (window == WindowKind::Prodromakis && !(j > 0.0 && j <= 1.0))
            throw std::invalid_argument("DeviceParams: Prodromakis j must lie in (0,1]");
    }
};

// Normalized boundary position x in [0,1]; x=1 is the fully conductive state.
struct DeviceState {
    double x = 0.0;
    DeviceParams params;
};

namespace detail {
// Exact integer power; keeps the window boundary zeros exact.
inline double ipow(double base, int n) {
    double r = 1.0;
    while (n > 0) {
        if (n & 1) r *= base;
        base *= base;
        n >>= 1;
    }
    return r;
}
} // namespace detail

inline double memristance(const DeviceState& s) {
    return s.x * s.params.r_on + (1.0 - s.x) * s.params.r_off;
}

// Invert the memristance law: the x that realizes resistance r.
inline double x_for_resistance(double r, const DeviceParams& p) {
    if (r < p.r_on || r > p.r_off)
        throw std::domain_error("x_for_resistance: resistance outside [r_on, r_off]");
    return (p.r_off - r) / (p.r_off - p.r_on);
}

// j * (1 - [(x-0.5)^2 + 0.75]^p); zero at both boundaries, peak at x=0.5.
inline double window_prodromakis(double x, double j, int p) {
    const double b = (x - 0.5) * (x - 0.5) + 0.75;
    return j * (1.0 - detail::ipow(b, p));
}

// 1 - (x - step(-i))^(2p); zero only at the boundary the state drifts toward.
inline double window_biolek(double x, double i, int p) {
    const double s = (-i >= 0.0) ? 1.0 : 0.0;
    return 1.0 - detail::ipow(x - s, 2 * p);
}

inline double window_value(const DeviceState& st, double i) {
    switch (st.params.window) {
        case WindowKind::Biolek: return window_biolek(st.x, i, st.params.p);
        case WindowKind::Prodromakis: return window_prodromakis(st.x, st.params.j, st.params.p);
    }
    return 0.0;
}

// dx/dt = k * i * f(x)
inline double state_derivative(const DeviceState& st, double i) {
    if (i == 0.0) return 0.0;
    return st.params.k * i * window_value(st, i);
}

// One explicit Euler step with clamping to [0,1].
inline DeviceState step_device(DeviceState st, double i, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_device: dt must be positive");
    st.x = std::clamp(st.x + dt * state_derivative(st, i), 0.0, 1.0);
    return st;
}

// Charge at which the memristance reaches r_on; the model is only valid
// for q in [0, max_valid_charge].
inline double max_valid_charge(const DeviceParams& p) {
    return (1.0 - p.r_on / p.r_off) / p.k;
}

// M(q) = r_off * (1 - k q), valid while the result stays in [r_on, r_off].
inline double memristance_of_charge(double q, const DeviceParams& p) {
    const double m = p.r_off * (1.0 - p.k * q);
    if (m < p.r_on || m > p.r_off)
        throw std::domain_error("memristance_of_charge: charge outside model validity range");
    return m;
}

// Exact antiderivative of memristance_of_charge, so that the flux-charge
// curve and the memristance law stay consistent under differentiation.
inline double flux_of_charge(double q, const DeviceParams& p) {
    const double m = p.r_off * (1.0 - p.k * q);
    if (m < p.r_on || m > p.r_off)
        throw std::domain_error("flux_of_charge: charge outside model validity range");
    return p.r_off * q * (1.0 - 0.5 * p.k * q);
}

// Two memristors in anti-series. Positive fuse current (a -> b) increases
// the memristance of device a and decreases the memristance of device b;
// on inter-layer fuses, a is cM1 (facing layer 1) and b is cM2.
struct Fuse {
    DeviceState a;
    DeviceState b;
};

inline double fuse_resistance(const Fuse& f) {
    return memristance(f.a) + memristance(f.b);
}

// Advance both devices of a fuse carrying series current i (signed a -> b).
inline void step_fuse(Fuse& f, double i, double dt) {
    f.a = step_device(f.a, -i, dt);
    f.b = step_device(f.b, i, dt);
}

inline Fuse make_fuse(const DeviceParams& params, double r_init) {
    DeviceState s{x_for_resistance(r_init, params), params};
    return Fuse{s, s};
}

} // namespace memgrid
