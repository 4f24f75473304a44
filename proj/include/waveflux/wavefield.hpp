#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "waveflux/geometry.hpp"
#include "waveflux/quadrature.hpp"

namespace waveflux {

/// Cone-profile initial velocity of the probe: (eta - s) inside the source
/// ball, zero outside.
inline double psi_profile(const Ball& source, double s) {
    if (s < 0.0) throw std::domain_error("psi_profile: s < 0");
    return s < source.radius ? source.radius - s : 0.0;
}

/// int_{R^3} psi^2 dx = 4 pi int_0^eta r^2 (eta-r)^2 dr = 2 pi eta^5 / 15.
inline double psi_norm_sq(double eta) {
    if (eta < 0.0) throw std::domain_error("psi_norm_sq: eta < 0");
    return 2.0 * M_PI * std::pow(eta, 5) / 15.0;
}

struct RadialWaveValue {
    double v = 0.0;
    double dv_ds = 0.0;  // derivative with respect to s = |x - p|
};

/// Probe wave: solution of the scaled wave equation launched by the cone
/// initial velocity, evaluated in closed form through spherical means.
/// The slowness lambda sets the propagation speed 1/lambda; T_final is the
/// observation horizon of the Laplace transforms.
struct WaveField {
    Ball source;
    double lambda = 1.0;
    double T_final = 1.0;

    static WaveField make(Ball source, double lambda, double T_final) {
        if (!(source.radius > 0.0)) throw std::invalid_argument("WaveField: radius <= 0");
        if (!(lambda > 0.0)) throw std::invalid_argument("WaveField: lambda <= 0");
        if (!(T_final > 0.0)) throw std::invalid_argument("WaveField: T_final <= 0");
        return WaveField{source, lambda, T_final};
    }

    double eta() const { return source.radius; }
};

namespace detail {
/// A'(r) where A(r) = int r psi(r) dr = eta r^2/2 - r^3/3 on [0, eta].
inline double cone_moment_d(double eta, double r) { return r * (eta - r); }
}  // namespace detail

/// Wave value and radial derivative at distance s >= eta from the source
/// center, time t. The spherical-means formula collapses to
/// v = lambda (A(eta) - A(a)) / (2 s) with a = clamp(|s - t/lambda|, 0, eta),
/// zero outside the causal window lambda(s-eta) < t < lambda(s+eta).
inline RadialWaveValue wave_eval(const WaveField& w, double s, double t) {
    const double eta = w.eta();
    if (s < eta) throw std::domain_error("wave_eval: s < eta (inside source ball)");
    if (t < 0.0) throw std::domain_error("wave_eval: t < 0");
    if (t == 0.0) return {};
    const double rho = t / w.lambda;
    const double gap = s - rho;
    const double a = std::abs(gap);
    if (a >= eta) return {};  // strong Huygens: before arrival or after passage
    // A(eta) - A(a) = (eta-a)^2 (eta+2a) / 6, the cancellation-free form
    const double diff = (eta - a) * (eta - a) * (eta + 2.0 * a) / 6.0;
    RadialWaveValue out;
    out.v = w.lambda * diff / (2.0 * s);
    const double sgn = gap >= 0.0 ? 1.0 : -1.0;
    out.dv_ds = -w.lambda * detail::cone_moment_d(eta, a) * sgn / (2.0 * s) - out.v / s;
    return out;
}

/// Time derivative of the wave at (s, t); companion of wave_eval.
inline double wave_eval_dt(const WaveField& w, double s, double t) {
    const double eta = w.eta();
    if (s < eta) throw std::domain_error("wave_eval_dt: s < eta");
    if (t < 0.0) throw std::domain_error("wave_eval_dt: t < 0");
    if (t == 0.0) {
        // initial velocity psi, which vanishes for s >= eta
        return 0.0;
    }
    const double rho = t / w.lambda;
    const double gap = s - rho;
    const double a = std::abs(gap);
    if (a >= eta) return 0.0;
    const double sgn = gap >= 0.0 ? 1.0 : -1.0;
    return detail::cone_moment_d(eta, a) * sgn / (2.0 * s);
}

/// Neumann flux of the wave on the conductor surface at polar cosine mu.
inline double flux_on_boundary(const WaveField& w, const ProbeGeometry& g, double mu,
                               double t) {
    if (std::abs(mu) > 1.0) throw std::domain_error("flux_on_boundary: |mu| > 1");
    double s = source_distance(g, g.r_omega, mu);
    RadialWaveValue rv = wave_eval(w, s, t);
    return rv.dv_ds * radial_projection(g, g.r_omega, mu);
}

/// Screened-Poisson field sourced by the cone profile, in closed form:
/// v0 = e^{-kappa s} / (tau^4 lambda^2 s) * (-2 cosh z + z sinh z + 2),
/// z = kappa eta, kappa = tau lambda. Evaluated as
/// e^{-kappa(s-eta)} * g(z) with g(z) = bracket * e^{-z}, which stays scaled
/// for large z; a series takes over below z = 1 where the bracket cancels.
struct LaplaceValue {
    double value = 0.0;
    double d_ds = 0.0;
};

namespace detail {
inline double cone_bracket_scaled(double z) {
    if (z < 1.0) {
        // bracket = sum_{k>=2} (2k-2)/(2k)! z^{2k}
        double sum = 0.0, term;
        double z2 = z * z;
        double pow_z = z2 * z2;  // z^4
        double fact = 24.0;      // 4!
        for (int k = 2; k <= 12; ++k) {
            term = (2.0 * k - 2.0) / fact * pow_z;
            sum += term;
            pow_z *= z2;
            fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
        }
        return sum * std::exp(-z);
    }
    double e1 = std::exp(-z), e2 = e1 * e1;
    return 0.5 * z - 1.0 + 2.0 * e1 - e2 * (1.0 + 0.5 * z);
}
}  // namespace detail

inline LaplaceValue v0_closed(const WaveField& w, double s, double tau) {
    const double eta = w.eta();
    if (s < eta) throw std::domain_error("v0_closed: s < eta");
    const double kappa = tau * w.lambda;
    const double z = kappa * eta;
    if (z >= 700.0) throw std::overflow_error("v0_closed: tau*lambda*eta too large");
    const double g = detail::cone_bracket_scaled(z);
    const double amp = std::exp(-kappa * (s - eta)) /
                       (tau * tau * tau * tau * w.lambda * w.lambda * s);
    LaplaceValue out;
    out.value = amp * g;
    out.d_ds = out.value * (-kappa - 1.0 / s);
    return out;
}

/// Finite-horizon Laplace transform of the wave and of its radial derivative,
/// integrated only over the causal passage window and never across the kink
/// at t = lambda s, so each panel sees a smooth integrand.
inline LaplaceValue w0_eval(const WaveField& w, double s, double tau,
                            double rel_tol = 1e-12) {
    const double eta = w.eta();
    if (s < eta) throw std::domain_error("w0_eval: s < eta");
    if (tau < 0.0) throw std::domain_error("w0_eval: tau < 0");
    const double t0 = std::max(0.0, w.lambda * (s - eta));
    const double t1 = std::min(w.T_final, w.lambda * (s + eta));
    if (t0 >= t1) return {};
    if (tau * t0 >= 700.0) return {};  // whole integrand below the double floor
    const double tk = w.lambda * s;  // branch change of |s - t/lambda|

    auto accumulate = [&](auto&& pick) {
        auto f = [&](double t) { return std::exp(-tau * t) * pick(wave_eval(w, s, t)); };
        double total = 0.0, scale = 0.0, worst_bad = 0.0;
        auto piece = [&](double lo, double hi) {
            if (hi <= lo) return;
            AdaptiveResult r = integrate_adaptive(f, lo, hi, rel_tol);
            total += r.value;
            scale = std::max(scale, std::abs(r.value));
            if (!r.converged) worst_bad = std::max(worst_bad, std::abs(r.value));
        };
        if (tk > t0 && tk < t1) {
            piece(t0, tk);
            piece(tk, t1);
        } else {
            piece(t0, t1);
        }
        // A stalled piece is harmless when it is dwarfed by the other piece:
        // deep cancellation inside a tiny tail can defeat its own relative
        // tolerance while contributing nothing to the combined integral.
        if (worst_bad > 1e-6 * scale)
            throw std::runtime_error("w0_eval: quadrature did not converge");
        return total;
    };

    LaplaceValue out;
    out.value = accumulate([](const RadialWaveValue& rv) { return rv.v; });
    out.d_ds = accumulate([](const RadialWaveValue& rv) { return rv.dv_ds; });
    return out;
}

/// F0 = dv/dt(s, T) + tau v(s, T); vanishes when T lies outside the passage
/// window at s.
inline double F0_eval(const WaveField& w, double s, double tau) {
    if (s < w.eta()) throw std::domain_error("F0_eval: s < eta");
    RadialWaveValue rv = wave_eval(w, s, w.T_final);
    return wave_eval_dt(w, s, w.T_final) + tau * rv.v;
}

}  // namespace waveflux
