#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveflux/indicator.hpp"

namespace waveflux {

/// Dependence of the wave slowness on the Laplace parameter: fixed lambda,
/// the penetrating schedule lambda = 1/sqrt(tau), or the scaled family
/// lambda = sqrt(c/tau) with its jump discontinuity at c = 1.
struct LambdaSchedule {
    enum class Kind { Fixed, InvSqrtTau, ScaledInvSqrtTau };
    Kind kind = Kind::Fixed;
    double lambda = 1.0;  // Fixed
    double c = 1.0;       // ScaledInvSqrtTau

    static LambdaSchedule fixed(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("LambdaSchedule: lambda <= 0");
        return {Kind::Fixed, lambda, 1.0};
    }
    static LambdaSchedule inv_sqrt_tau() { return {Kind::InvSqrtTau, 1.0, 1.0}; }
    static LambdaSchedule scaled_inv_sqrt_tau(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("LambdaSchedule: c <= 0");
        return {Kind::ScaledInvSqrtTau, 1.0, c};
    }

    double lambda_at(double tau) const {
        switch (kind) {
            case Kind::Fixed: return lambda;
            case Kind::InvSqrtTau: return 1.0 / std::sqrt(tau);
            case Kind::ScaledInvSqrtTau: return std::sqrt(c / tau);
        }
        return lambda;
    }

    /// The c of the scaled family (1 for the penetrating schedule).
    double scale_c() const {
        if (kind == Kind::Fixed)
            throw std::invalid_argument("scale_c: fixed schedule has no c");
        return kind == Kind::InvSqrtTau ? 1.0 : c;
    }
};

/// Solver resolution knobs shared by all sweep-driven experiments.
struct Numerics {
    int radial_points = 257;
    double dt_max = 0.02;
    int max_degree = 100;    // cap for the adaptive mode truncation
    int window_points = 400; // time steps across the flux passage window
    double quad_tol = 1e-10;
    double flux_scale = 1.0;
    int jobs = 1;
    /// Subtracts the indicator of a matched-resolution solve with the cavity
    /// shrunk to half radius. The shared incident-field discretization error
    /// cancels, which extends the usable tau range by several decades; the
    /// price is a spurious reflection off the shrunken cavity, smaller than
    /// the signal by e^{-2 tau lambda (dist(D/2,B) - dist(D,B))}.
    bool reference_subtraction = false;
};

struct SweepSeries {
    LambdaSchedule schedule;
    std::vector<IndicatorSample> samples;  // ascending tau
    ProbeGeometry geometry;
    double T_final = 0.0;
};

/// One heat solve + indicator evaluation per tau (one shared solve when the
/// schedule keeps lambda constant, since the flux does not depend on tau).
inline SweepSeries run_sweep(const ProbeGeometry& g, double T_final,
                             const LambdaSchedule& schedule,
                             std::span<const double> tau_grid, const Numerics& num) {
    if (tau_grid.empty()) throw std::invalid_argument("run_sweep: empty tau grid");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] > tau_grid[i - 1]))
            throw std::invalid_argument("run_sweep: tau grid must be ascending");

    SweepSeries series{schedule, {}, g, T_final};
    series.samples.resize(tau_grid.size());
    std::size_t failures = 0;

    std::size_t begin = 0;
    while (begin < tau_grid.size()) {
        double lam = schedule.lambda_at(tau_grid[begin]);
        std::size_t end = begin + 1;
        while (end < tau_grid.size() && schedule.lambda_at(tau_grid[end]) == lam) ++end;
        std::vector<double> taus(tau_grid.begin() + begin, tau_grid.begin() + end);
        try {
            WaveField wf = WaveField::make(g.source, lam, T_final);
            TimeGrid tg = TimeGrid::make(wf, g, num.dt_max, num.window_points);
            int L = select_max_degree(wf, g, tg, num.max_degree);
            ModeBasis basis = ModeBasis::make(L);
            RadialGrid grid = RadialGrid::make(g.r_cavity, g.r_omega, num.radial_points);
            auto flux = mode_flux_history(wf, g, basis, tg);

            std::vector<std::vector<double>> weights(taus.size());
            for (std::size_t ti = 0; ti < taus.size(); ++ti)
                weights[ti] = laplace_weights(tg, taus[ti]);

            std::vector<std::vector<std::vector<double>>> w(
                taus.size(), std::vector<std::vector<double>>(
                                 basis.mode_count(),
                                 std::vector<double>(grid.size(), 0.0)));
            std::vector<std::vector<double>> u_final(
                basis.mode_count(), std::vector<double>(grid.size(), 0.0));

            for_each_mode(
                g, basis, grid, tg, flux, num.jobs,
                [&](int l, const ModalHeatHistory& hist) {
                    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                        auto& out = w[ti][l];
                        const auto& q = weights[ti];
                        for (std::size_t k = 0; k < q.size(); ++k) {
                            if (q[k] == 0.0) continue;
                            const auto& uk = hist.values[k];
                            for (int i = 0; i < grid.size(); ++i) out[i] += q[k] * uk[i];
                        }
                    }
                    u_final[l] = hist.values.back();
                },
                num.flux_scale);

            // Optional matched reference solve on the half-radius cavity; the
            // indicator of the reference run is pure numerical error plus a
            // subdominant spurious reflection, so subtracting it sharpens the
            // cavity signal. Same spacing, time grid and flux by construction.
            std::vector<std::vector<double>> w_ref_store;
            RadialGrid grid_ref = grid;
            ProbeGeometry g_ref = g;
            if (num.reference_subtraction) {
                g_ref = ProbeGeometry::make(g.r_omega, 0.5 * g.r_cavity, g.source);
                double h = (g.r_omega - g.r_cavity) / (num.radial_points - 1);
                int n_ref =
                    (int)std::lround((g.r_omega - g_ref.r_cavity) / h) + 1;
                grid_ref = RadialGrid::make(g_ref.r_cavity, g.r_omega, n_ref);
                // only the outer trace is needed, but the full transform is
                // accumulated mode by mode like the primary run
                w_ref_store.assign(taus.size() * basis.mode_count(), {});
                for_each_mode(
                    g_ref, basis, grid_ref, tg, flux, num.jobs,
                    [&](int l, const ModalHeatHistory& hist) {
                        for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                            std::vector<double> out(grid_ref.size(), 0.0);
                            const auto& q = weights[ti];
                            for (std::size_t k = 0; k < q.size(); ++k) {
                                if (q[k] == 0.0) continue;
                                const auto& uk = hist.values[k];
                                for (int i = 0; i < grid_ref.size(); ++i)
                                    out[i] += q[k] * uk[i];
                            }
                            w_ref_store[ti * basis.mode_count() + l] =
                                std::move(out);
                        }
                    },
                    num.flux_scale);
            }

            for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                try {
                    IndicatorAssembler assembler(wf, g, basis, grid, taus[ti],
                                                 num.quad_tol);
                    series.samples[begin + ti] =
                        assembler.decomposition_terms(w[ti], u_final, num.flux_scale);
                    if (num.reference_subtraction) {
                        IndicatorAssembler ref(wf, g_ref, basis, grid_ref,
                                               taus[ti], num.quad_tol);
                        std::span<const std::vector<double>> w_ref(
                            w_ref_store.data() + ti * basis.mode_count(),
                            basis.mode_count());
                        LaplaceBoundaryData d = ref.boundary_data(w_ref);
                        // same symmetric flux-scale form as the primary run,
                        // so the corrected indicator stays exactly linear in k
                        series.samples[begin + ti].indicator -=
                            boundary_integral(g_ref, d.w_coeffs, d.dw0_coeffs) -
                            num.flux_scale *
                                boundary_integral(g_ref, d.w0_coeffs,
                                                  d.dw0_coeffs);
                    }
                } catch (const std::exception&) {
                    series.samples[begin + ti].tau = taus[ti];
                    series.samples[begin + ti].lambda = lam;
                    series.samples[begin + ti].failed = true;
                    ++failures;
                }
            }
        } catch (const std::exception&) {
            for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                series.samples[begin + ti].tau = taus[ti];
                series.samples[begin + ti].lambda = lam;
                series.samples[begin + ti].failed = true;
                ++failures;
            }
        }
        begin = end;
    }
    if (2 * failures > tau_grid.size())
        throw std::runtime_error("run_sweep: more than half of the samples failed");
    return series;
}

enum class RateAxis { Tau, SqrtTau };

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double log_correction_coeff = 0.0;
    RateAxis x_axis = RateAxis::Tau;
    double window_lo = 0.0, window_hi = 0.0;
    double residual_rms = 0.0;
};

namespace detail {
struct LogFit {
    double slope, log_coeff, intercept, rms;
};
/// Regressors x, log tau, 1 and 1/x: the log term absorbs power-law
/// prefactors and the 1/x term the next-order finite-tau correction, which
/// otherwise biases the exponential rate by ~10% at desk-scale tau.
inline LogFit fit_with_log_correction(std::span<const double> x,
                                      std::span<const double> log_tau,
                                      std::span<const double> y) {
    const int n = (int)x.size();
    Eigen::MatrixXd A(n, 4);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        A(i, 0) = x[i];
        A(i, 1) = log_tau[i];
        A(i, 2) = 1.0;
        A(i, 3) = 1.0 / x[i];
        b(i) = y[i];
    }
    Eigen::Vector4d coef = A.colPivHouseholderQr().solve(b);
    double ss = (A * coef - b).squaredNorm();
    return {coef(0), coef(1), coef(2), std::sqrt(ss / n)};
}
}  // namespace detail

/// Least-squares fit of log|I| = slope x + g log(tau) + b over the upper
/// window of the tau range; the log tau regressor absorbs polynomial
/// prefactors so the exponential rate converges at finite tau.
inline RateFit fit_rate(const SweepSeries& series, RateAxis axis,
                        double window_fraction) {
    if (series.samples.empty()) throw std::invalid_argument("fit_rate: empty series");
    double tau_lo = series.samples.front().tau, tau_hi = series.samples.back().tau;
    // geometric cut: keeps the stated fraction of a geometric tau grid
    double cut = tau_hi * std::pow(tau_lo / tau_hi, window_fraction);
    std::vector<double> xs, lts, ys;
    double sign = 0.0;
    for (const auto& s : series.samples) {
        if (s.failed || s.floor_flag || s.tau < cut) continue;
        if (s.indicator == 0.0)
            throw std::runtime_error("fit_rate: zero indicator at tau = " +
                                     std::to_string(s.tau));
        double sgn = s.indicator > 0.0 ? 1.0 : -1.0;
        if (sign == 0.0) sign = sgn;
        if (sgn != sign)
            throw std::runtime_error("fit_rate: indicator changes sign at tau = " +
                                     std::to_string(s.tau));
        xs.push_back(axis == RateAxis::Tau ? s.tau : std::sqrt(s.tau));
        lts.push_back(std::log(s.tau));
        ys.push_back(std::log(std::abs(s.indicator)));
    }
    if (xs.size() < 5)
        throw std::runtime_error("fit_rate: fewer than 5 usable samples in window");
    auto f = detail::fit_with_log_correction(xs, lts, ys);
    RateFit fit;
    fit.slope = f.slope;
    fit.intercept = f.intercept;
    fit.log_correction_coeff = f.log_coeff;
    fit.x_axis = axis;
    fit.window_lo = cut;
    fit.window_hi = tau_hi;
    fit.residual_rms = f.rms;
    return fit;
}

/// Distance recovered from the fitted exponential rate.
inline double estimate_distance(const RateFit& fit, const LambdaSchedule& schedule) {
    if (fit.slope >= 0.0)
        throw std::runtime_error("estimate_distance: no exponential decay detected");
    switch (schedule.kind) {
        case LambdaSchedule::Kind::Fixed: return -fit.slope / (2.0 * schedule.lambda);
        case LambdaSchedule::Kind::InvSqrtTau: return -fit.slope / 2.0;
        case LambdaSchedule::Kind::ScaledInvSqrtTau:
            return -fit.slope / (2.0 * std::sqrt(schedule.c));
    }
    return 0.0;
}

enum class ThresholdVerdict { Diverges, Vanishes, Borderline };

/// Examines e^{x(tau) T} |I| over the fit window: a total fitted log-change
/// beyond 2 in either direction is unambiguous.
inline ThresholdVerdict threshold_classify(const SweepSeries& series, RateAxis axis,
                                           double window_fraction = 0.6) {
    double tau_lo = series.samples.front().tau, tau_hi = series.samples.back().tau;
    double cut = tau_hi * std::pow(tau_lo / tau_hi, window_fraction);
    std::vector<double> xs, ys;
    for (const auto& s : series.samples) {
        if (s.failed || s.floor_flag || s.tau < cut || s.indicator == 0.0) continue;
        double x = axis == RateAxis::Tau ? s.tau : std::sqrt(s.tau);
        xs.push_back(x);
        ys.push_back(x * series.T_final + std::log(std::abs(s.indicator)));
    }
    if (xs.size() < 5)
        throw std::runtime_error("threshold_classify: fewer than 5 usable samples");
    // plain linear fit; change over the window decides
    double n = (double)xs.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double change = slope * (xs.back() - xs.front());
    if (change > 2.0) return ThresholdVerdict::Diverges;
    if (change < -2.0) return ThresholdVerdict::Vanishes;
    return ThresholdVerdict::Borderline;
}

struct RatioBounds {
    double ratio = 0.0;
    double lower = 0.0;   // c - 1
    double upper = 0.0;   // (c - 1) c
    double margin = 0.0;
    bool pass = false;
    double tau = 0.0;  // tau at which the ratio was taken
};

/// Checks I / (tau int_Omega |w0|^2) against the [c-1, (c-1)c] band at the
/// largest usable tau, with a finite-tau margin.
inline RatioBounds ratio_bounds_check(const SweepSeries& series) {
    double c = series.schedule.scale_c();
    RatioBounds out;
    out.lower = c - 1.0;
    out.upper = (c - 1.0) * c;
    out.margin = 0.25 * std::max(std::abs(c - 1.0), 0.05);
    const IndicatorSample* pick = nullptr;
    for (const auto& s : series.samples)
        if (!s.failed && !s.floor_flag && s.w0_l2_omega > 0.0) pick = &s;
    if (!pick) throw std::runtime_error("ratio_bounds_check: no usable sample");
    out.tau = pick->tau;
    out.ratio = pick->indicator / (pick->tau * pick->w0_l2_omega);
    double lo = std::min(out.lower, out.upper) - out.margin;
    double hi = std::max(out.lower, out.upper) + out.margin;
    out.pass = out.ratio >= lo && out.ratio <= hi;
    return out;
}

enum class Region { D, Omega };

/// Fitted decay slope of log ||w0||_{L2(U)} against tau at fixed lambda;
/// the propagation estimates predict -lambda dist(U, B).
inline double propagation_rate_check(const WaveField& wf, const ProbeGeometry& g,
                                     Region region, std::span<const double> tau_grid,
                                     double quad_tol = 1e-10) {
    double R0 = region == Region::D ? g.r_cavity : g.r_omega;
    const double d = g.source.center_z;
    std::vector<double> xs, lts, ys;
    for (double tau : tau_grid) {
        std::vector<double> breaks = {wf.T_final / wf.lambda - wf.eta(),
                                      wf.T_final / wf.lambda,
                                      wf.T_final / wf.lambda + wf.eta()};
        auto proxy = PiecewiseChebyshev::fit(
            [&](double s) { return w0_eval(wf, s, tau).value; }, d - R0, d + R0,
            breaks, 48);
        auto integrand = [&](double s) {
            double gap = d - s;
            double v = proxy(s);
            return v * v * M_PI * s / d * (R0 * R0 - gap * gap);
        };
        AdaptiveResult r = integrate_adaptive(integrand, d - R0, d + R0, quad_tol);
        if (!r.converged || !(r.value > 0.0)) continue;  // underflow floor
        xs.push_back(tau);
        lts.push_back(std::log(tau));
        ys.push_back(0.5 * std::log(r.value));
    }
    if (xs.size() < 5)
        throw std::runtime_error("propagation_rate_check: fewer than 5 usable samples");
    return detail::fit_with_log_correction(xs, lts, ys).slope;
}

/// Geometric grid helper for tau sweeps.
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    if (!(hi > lo && lo > 0.0) || n < 1)
        throw std::invalid_argument("geometric_grid: bad range");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1));
    return g;
}

}  // namespace waveflux
