#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "waveflux/geometry.hpp"
#include "waveflux/legendre.hpp"
#include "waveflux/wavefield.hpp"

namespace waveflux {

/// Uniform radial grid spanning the shell [r_cavity, r_omega].
struct RadialGrid {
    std::vector<double> r;
    double h = 0.0;

    static RadialGrid make(double r_inner, double r_outer, int n) {
        if (n < 33) throw std::invalid_argument("RadialGrid: need at least 33 nodes");
        if (!(r_outer > r_inner && r_inner > 0.0))
            throw std::invalid_argument("RadialGrid: bad radii");
        RadialGrid g;
        g.h = (r_outer - r_inner) / (n - 1);
        g.r.resize(n);
        for (int i = 0; i < n; ++i) g.r[i] = r_inner + i * g.h;
        g.r.front() = r_inner;
        g.r.back() = r_outer;
        return g;
    }

    int size() const { return (int)r.size(); }

    /// Finite-volume cell weight in the r^2 dr measure; half cells at the ends.
    double cell_weight(int i) const {
        double w = r[i] * r[i] * h;
        if (i == 0 || i == size() - 1) w *= 0.5;
        return w;
    }
};

/// Graded time grid: uniform fine steps across the flux passage window,
/// geometric growth up to dt_max afterwards, coarse before arrival (where the
/// solution is identically zero).
struct TimeGrid {
    std::vector<double> t;
    double dt_max = 0.0;

    static TimeGrid make(const WaveField& w, const ProbeGeometry& g, double dt_max,
                         int window_points = 200) {
        if (!(dt_max > 0.0)) throw std::invalid_argument("TimeGrid: dt_max <= 0");
        window_points = std::max(window_points, 200);
        const double T = w.T_final;
        const double d_near = g.source.center_z - g.r_omega;
        const double d_far = g.source.center_z + g.r_omega;
        const double t_lo = w.lambda * (d_near - w.eta());
        const double t_hi = w.lambda * (d_far + w.eta());
        const double passage = t_hi - t_lo;
        const double margin = 0.02 * passage;
        const double w_lo = std::max(0.0, t_lo - margin);
        const double w_hi = std::min(T, t_hi + margin);
        const double dt_w = std::min(passage / window_points, dt_max);

        TimeGrid tg;
        tg.dt_max = dt_max;
        std::vector<double>& ts = tg.t;
        ts.push_back(0.0);
        auto advance_uniform = [&](double target, double step) {
            double span = target - ts.back();
            if (span <= 1e-15) return;
            int n = std::max(1, (int)std::ceil(span / step - 1e-12));
            double d = span / n;
            double base = ts.back();
            for (int k = 1; k <= n; ++k) ts.push_back(base + k * d);
            ts.back() = target;
        };
        if (w_lo >= T) {
            advance_uniform(T, dt_max);
            return tg;
        }
        advance_uniform(w_lo, dt_max);      // pre-arrival: solution is zero anyway
        advance_uniform(w_hi, dt_w);        // flux passage: uniform fine steps
        double dt = dt_w;
        while (ts.back() < T - 1e-14) {     // tail: geometric growth
            dt = std::min({dt * 1.2, dt_max, T - ts.back()});
            ts.push_back(ts.back() + dt);
        }
        ts.back() = T;
        return tg;
    }

    int steps() const { return (int)t.size() - 1; }
};

/// Full time history of one Legendre mode of the heat solution on the shell.
struct ModalHeatHistory {
    int l = 0;
    std::vector<std::vector<double>> values;  // values[k][i] = u_l(r_i, t_k)
};

/// Per-mode boundary flux series f_l(t_k): Legendre projection of the wave
/// flux on the conductor surface at every time node. All modes vanish before
/// the first wave arrival.
inline std::vector<std::vector<double>> mode_flux_history(const WaveField& w,
                                                          const ProbeGeometry& g,
                                                          const ModeBasis& basis,
                                                          const TimeGrid& tg) {
    std::vector<std::vector<double>> flux(tg.t.size());
    std::vector<double> samples(basis.node_count());
    const std::vector<double> zero(basis.mode_count(), 0.0);
    for (std::size_t k = 0; k < tg.t.size(); ++k) {
        bool any = false;
        for (std::size_t j = 0; j < basis.node_count(); ++j) {
            samples[j] = flux_on_boundary(w, g, basis.nodes[j], tg.t[k]);
            any = any || samples[j] != 0.0;
        }
        flux[k] = any ? basis.project(samples) : zero;
    }
    return flux;
}

namespace detail {
/// Tridiagonal coefficients of the modal radial heat operator in conservative
/// (finite-volume) form; Neumann data enters through the boundary faces so
/// the discrete heat balance telescopes exactly.
struct ModalOperator {
    std::vector<double> sub, diag, sup;  // A u, row i: sub[i] u_{i-1} + diag[i] u_i + sup[i] u_{i+1}
    double flux_coeff = 0.0;             // source entry at the outer node per unit flux

    ModalOperator(int l, const RadialGrid& g) {
        const int n = g.size();
        const double h = g.h;
        const double cl = double(l) * (l + 1);
        sub.assign(n, 0.0);
        diag.assign(n, 0.0);
        sup.assign(n, 0.0);
        auto face = [&](int i) {  // r_{i+1/2}^2 / h^2
            double rf = 0.5 * (g.r[i] + g.r[i + 1]);
            return rf * rf / (h * h);
        };
        for (int i = 1; i < n - 1; ++i) {
            double lo = face(i - 1) / (g.r[i] * g.r[i]);
            double hi = face(i) / (g.r[i] * g.r[i]);
            sub[i] = lo;
            sup[i] = hi;
            diag[i] = -(lo + hi) - cl / (g.r[i] * g.r[i]);
        }
        {
            double hi = 2.0 * face(0) / (g.r[0] * g.r[0]);
            sup[0] = hi;
            diag[0] = -hi - cl / (g.r[0] * g.r[0]);
        }
        {
            double rb = g.r[n - 1];
            double lo = 2.0 * face(n - 2) / (rb * rb);
            sub[n - 1] = lo;
            diag[n - 1] = -lo - cl / (rb * rb);
            flux_coeff = 2.0 / h;
        }
    }
};

inline void thomas_solve(std::span<const double> a, std::span<double> b,
                         std::span<const double> c, std::span<double> rhs) {
    const int n = (int)b.size();
    for (int i = 1; i < n; ++i) {
        double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= b[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - c[i] * rhs[i + 1]) / b[i];
}
}  // namespace detail

/// One Crank-Nicolson step of the modal radial heat equation. The flux enters
/// as the time average (f_now + f_next)/2; optional volumetric sources
/// support manufactured-solution runs.
inline void step_mode(int l, const RadialGrid& grid, std::vector<double>& u,
                      double f_now, double f_next, double dt,
                      std::span<const double> src_now = {},
                      std::span<const double> src_next = {}) {
    const int n = grid.size();
    if ((int)u.size() != n) throw std::invalid_argument("step_mode: state length mismatch");
    detail::ModalOperator op(l, grid);
    std::vector<double> rhs(n), lower(n), diag(n), upper(n);
    const double half = 0.5 * dt;
    for (int i = 0; i < n; ++i) {
        double au = op.diag[i] * u[i];
        if (i > 0) au += op.sub[i] * u[i - 1];
        if (i < n - 1) au += op.sup[i] * u[i + 1];
        rhs[i] = u[i] + half * au;
        lower[i] = -half * op.sub[i];
        diag[i] = 1.0 - half * op.diag[i];
        upper[i] = -half * op.sup[i];
        if (!src_now.empty()) rhs[i] += half * (src_now[i] + src_next[i]);
    }
    rhs[n - 1] += dt * op.flux_coeff * 0.5 * (f_now + f_next);
    detail::thomas_solve(lower, diag, upper, rhs);
    u = rhs;
}

/// Full time history of one mode driven by its flux series.
inline ModalHeatHistory solve_mode_history(int l, const RadialGrid& grid,
                                           const TimeGrid& tg,
                                           std::span<const std::vector<double>> flux,
                                           double flux_scale = 1.0) {
    const int n = grid.size();
    ModalHeatHistory hist;
    hist.l = l;
    hist.values.reserve(tg.t.size());
    hist.values.emplace_back(n, 0.0);
    std::vector<double> u(n, 0.0);
    detail::ModalOperator op(l, grid);
    std::vector<double> rhs(n), lower(n), diag(n), upper(n);
    for (int k = 0; k + 1 < (int)tg.t.size(); ++k) {
        const double dt = tg.t[k + 1] - tg.t[k];
        const double half = 0.5 * dt;
        const double f_avg = 0.5 * flux_scale * (flux[k][l] + flux[k + 1][l]);
        for (int i = 0; i < n; ++i) {
            double au = op.diag[i] * u[i];
            if (i > 0) au += op.sub[i] * u[i - 1];
            if (i < n - 1) au += op.sup[i] * u[i + 1];
            rhs[i] = u[i] + half * au;
            lower[i] = -half * op.sub[i];
            diag[i] = 1.0 - half * op.diag[i];
            upper[i] = -half * op.sup[i];
        }
        rhs[n - 1] += dt * op.flux_coeff * f_avg;
        detail::thomas_solve(lower, diag, upper, rhs);
        u = rhs;
        hist.values.push_back(u);
    }
    return hist;
}

/// Independent modal solves for l = 0..L, run on `jobs` threads and reduced
/// through `consume(l, history)` into caller-owned per-mode slots; the
/// histories themselves are transient, which keeps production sweeps within
/// memory.
template <class Consume>
void for_each_mode(const ProbeGeometry& g, const ModeBasis& basis,
                   const RadialGrid& grid, const TimeGrid& tg,
                   std::span<const std::vector<double>> flux, int jobs,
                   Consume&& consume, double flux_scale = 1.0) {
    const int modes = basis.mode_count();
    jobs = std::clamp(jobs, 1, modes);
    (void)g;
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            int l = next.fetch_add(1);
            if (l >= modes) return;
            try {
                ModalHeatHistory hist = solve_mode_history(l, grid, tg, flux, flux_scale);
                consume(l, hist);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Convenience collector (test scale; production paths stream instead).
inline std::vector<ModalHeatHistory> solve_all_modes(const WaveField& w,
                                                     const ProbeGeometry& g,
                                                     const ModeBasis& basis,
                                                     const RadialGrid& grid,
                                                     const TimeGrid& tg,
                                                     double flux_scale = 1.0,
                                                     int jobs = 1) {
    auto flux = mode_flux_history(w, g, basis, tg);
    std::vector<ModalHeatHistory> out(basis.mode_count());
    for_each_mode(g, basis, grid, tg, flux, jobs,
                  [&](int l, const ModalHeatHistory& h) { out[l] = h; }, flux_scale);
    return out;
}

/// Discrete heat content 4 pi sum_i w_i u_i of a mode-0 radial profile.
inline double shell_heat_content(const RadialGrid& grid, std::span<const double> u) {
    double sum = 0.0;
    for (int i = 0; i < grid.size(); ++i) sum += grid.cell_weight(i) * u[i];
    return 4.0 * M_PI * sum;
}

/// Smallest truncation degree whose flux coefficient stays below
/// 1e-14 of the overall maximum at its time of largest magnitude; capped.
inline int select_max_degree(const WaveField& w, const ProbeGeometry& g,
                             const TimeGrid& tg, int cap = 120) {
    ModeBasis probe = ModeBasis::make(cap);
    auto flux = mode_flux_history(w, g, probe, tg);
    std::vector<double> peak(probe.mode_count(), 0.0);
    double global = 0.0;
    for (const auto& fk : flux)
        for (int l = 0; l < probe.mode_count(); ++l) {
            peak[l] = std::max(peak[l], std::abs(fk[l]));
            global = std::max(global, peak[l]);
        }
    int L = 0;
    for (int l = 0; l < probe.mode_count(); ++l)
        if (peak[l] > 1e-14 * global) L = l;
    return std::min(L, cap);
}

}  // namespace waveflux
