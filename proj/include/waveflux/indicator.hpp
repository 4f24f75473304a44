#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "waveflux/chebyshev.hpp"
#include "waveflux/geometry.hpp"
#include "waveflux/heat.hpp"
#include "waveflux/legendre.hpp"
#include "waveflux/quadrature.hpp"
#include "waveflux/wavefield.hpp"

namespace waveflux {

// ---------------------------------------------------------------------------
// Laplace transform of stored time histories
// ---------------------------------------------------------------------------

namespace detail {
/// Moments mu_j = int_0^d x^j e^{-tau x} dx, j = 0..2, stable across tau*d.
inline void exp_moments(double tau, double d, double mu[3]) {
    double z = tau * d;
    if (z < 0.05) {
        for (int j = 0; j < 3; ++j) {
            double sum = 0.0, pw = 1.0;
            double fact = 1.0;
            for (int m = 0; m <= 10; ++m) {
                sum += pw / (fact * (j + m + 1));
                pw *= -z;
                fact *= (m + 1);
            }
            mu[j] = sum * std::pow(d, j + 1);
        }
        return;
    }
    double e = std::exp(-z);
    mu[0] = (1.0 - e) / tau;
    mu[1] = (1.0 - e * (1.0 + z)) / (tau * tau);
    mu[2] = (2.0 - e * (z * z + 2.0 * z + 2.0)) / (tau * tau * tau);
}
}  // namespace detail

/// Quadrature weights q_k with int_0^T e^{-tau t} u(t) dt ~= sum_k q_k u(t_k),
/// from piecewise-quadratic interpolation of u on the graded grid with the
/// exponential weight integrated exactly per interval.
inline std::vector<double> laplace_weights(const TimeGrid& tg, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("laplace_weights: tau < 0");
    const auto& t = tg.t;
    const int n = (int)t.size();
    std::vector<double> q(n, 0.0);
    if (n < 3) throw std::invalid_argument("laplace_weights: need >= 3 time nodes");
    for (int k = 0; k + 1 < n; ++k) {
        int s0 = (k == 0) ? 0 : k - 1;  // stencil s0, s0+1, s0+2
        const double a = t[k], d = t[k + 1] - t[k];
        double mu[3];
        detail::exp_moments(tau, d, mu);
        const double scale = std::exp(-tau * a);
        const double u0 = t[s0] - a, u1 = t[s0 + 1] - a, u2 = t[s0 + 2] - a;
        const double us[3] = {u0, u1, u2};
        for (int j = 0; j < 3; ++j) {
            double ui = us[(j + 1) % 3], uj = us[(j + 2) % 3];
            double denom = (us[j] - ui) * (us[j] - uj);
            q[s0 + j] += scale * (ui * uj * mu[0] - (ui + uj) * mu[1] + mu[2]) / denom;
        }
    }
    return q;
}

/// Per-node Laplace transform of one modal history.
inline std::vector<double> laplace_transform_history(const ModalHeatHistory& hist,
                                                     const TimeGrid& tg, double tau) {
    std::vector<double> q = laplace_weights(tg, tau);
    if (q.size() != hist.values.size())
        throw std::invalid_argument("laplace_transform_history: grid mismatch");
    const int nr = (int)hist.values.front().size();
    std::vector<double> out(nr, 0.0);
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double qk = q[k];
        if (qk == 0.0) continue;
        const auto& uk = hist.values[k];
        for (int i = 0; i < nr; ++i) out[i] += qk * uk[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boundary data and indicator value
// ---------------------------------------------------------------------------

struct LaplaceBoundaryData {
    double tau = 0.0;
    std::vector<double> w_coeffs;    // trace of the heat transform
    std::vector<double> w0_coeffs;   // trace of the wave transform
    std::vector<double> dw0_coeffs;  // normal derivative of the wave transform
};

/// I = int_{boundary} (w - w0) dnu w0 dS in mode space.
inline double indicator_value(const LaplaceBoundaryData& d, const ProbeGeometry& g) {
    if (d.w_coeffs.size() != d.w0_coeffs.size() ||
        d.w_coeffs.size() != d.dw0_coeffs.size())
        throw std::invalid_argument("indicator_value: coefficient length mismatch");
    std::vector<double> diff(d.w_coeffs.size());
    for (std::size_t l = 0; l < diff.size(); ++l)
        diff[l] = d.w_coeffs[l] - d.w0_coeffs[l];
    return boundary_integral(g, diff, d.dw0_coeffs);
}

/// One tau-point of a sweep: indicator, decomposition terms, diagnostics.
struct IndicatorSample {
    double tau = 0.0;
    double lambda = 0.0;
    double indicator = 0.0;
    double bulk_term = 0.0;  // (lambda^2 tau^2 - tau) int_Omega |w0|^2
    double j_h = 0.0;        // int_D |grad w0|^2 + tau |w0|^2
    double e_h = 0.0;        // int_shell |grad R|^2 + tau |R|^2
    double r_cal = 0.0;      // e^{-tau T} remainder
    double decomp_residual = 0.0;
    double w0_l2_omega = 0.0;
    double w0_l2_d = 0.0;
    bool floor_flag = false;
    bool failed = false;
};

// ---------------------------------------------------------------------------
// Assembler: shares the radial proxy of w0 between indicator, decomposition
// and first-representation checks for one (tau, lambda)
// ---------------------------------------------------------------------------

class IndicatorAssembler {
public:
    IndicatorAssembler(const WaveField& wf, const ProbeGeometry& g,
                       const ModeBasis& basis, const RadialGrid& grid, double tau,
                       double quad_tol = 1e-10)
        : wf_(wf), g_(g), basis_(basis), grid_(grid), tau_(tau), quad_tol_(quad_tol) {
        const double d = g.source.center_z;
        s_lo_ = d - g.r_omega;
        s_hi_ = d + g.r_omega;
        // w0(s) is piecewise analytic in s with breaks where the passage
        // window endpoints cross the horizon T.
        std::vector<double> breaks = {wf.T_final / wf.lambda - wf.eta(),
                                      wf.T_final / wf.lambda,
                                      wf.T_final / wf.lambda + wf.eta()};
        // w0 decays like e^{-tau lambda s}; Chebyshev error is relative to
        // the piece maximum, so pieces much wider than 1/(tau lambda) drown
        // the tail in interpolation noise. Subdividing to ~6 decay lengths
        // keeps the proxy accurate relative to the local scale.
        const double kappa = tau * wf.lambda;
        if (kappa > 0.0) {
            double width = std::max(6.0 / kappa, (s_hi_ - s_lo_) / 256.0);
            for (double x = s_lo_ + width; x < s_hi_; x += width)
                breaks.push_back(x);
        }
        auto val = [&](double s) { return w0_eval(wf_, s, tau_).value; };
        auto der = [&](double s) { return w0_eval(wf_, s, tau_).d_ds; };
        w0_val_ = PiecewiseChebyshev::fit(val, s_lo_, s_hi_, breaks, 48);
        w0_der_ = PiecewiseChebyshev::fit(der, s_lo_, s_hi_, breaks, 48);

        w0_grid_ = project_on_grid([&](double s) { return w0_val_(s); });
        w0_trace_ = w0_grid_.back_column();
        dw0_trace_ = project_normal_derivative(g.r_omega);
        dw0_cavity_ = project_normal_derivative(g.r_cavity);
    }

    double tau() const { return tau_; }

    /// Mode coefficients of w0 and of its normal derivative on the conductor
    /// surface, packaged with a boundary trace of w.
    LaplaceBoundaryData boundary_data(std::span<const std::vector<double>> w_modes) const {
        LaplaceBoundaryData d;
        d.tau = tau_;
        d.w_coeffs = trace(w_modes, grid_.size() - 1);
        d.w0_coeffs = w0_trace_;
        d.dw0_coeffs = dw0_trace_;
        return d;
    }

    /// Full decomposition of the indicator for the heat field `w_modes`
    /// ([l][i]) with final slice `u_final` ([l][i]).
    IndicatorSample decomposition_terms(std::span<const std::vector<double>> w_modes,
                                        std::span<const std::vector<double>> u_final,
                                        double flux_scale = 1.0) const {
        IndicatorSample s;
        s.tau = tau_;
        s.lambda = wf_.lambda;

        // Boundary: symmetric form so that a flux scale k gives exactly k I.
        std::vector<double> wb = trace(w_modes, grid_.size() - 1);
        s.indicator = boundary_integral(g_, wb, dw0_trace_) -
                      flux_scale * boundary_integral(g_, w0_trace_, dw0_trace_);
        double abs_scale = 0.0;
        for (std::size_t l = 0; l < wb.size(); ++l)
            abs_scale += 2.0 / (2.0 * l + 1.0) *
                         (std::abs(wb[l]) + flux_scale * std::abs(w0_trace_[l])) *
                         std::abs(dw0_trace_[l]);
        abs_scale *= 2.0 * M_PI * g_.r_omega * g_.r_omega;
        s.floor_flag = std::abs(s.indicator) < 100.0 * DBL_EPSILON * abs_scale;

        // Volume quantities of the analytic field via 1D reduction: the level
        // sets of |x - p| intersect a ball centered at the origin in spherical
        // caps of known area, so every integral of a function of s is 1D.
        const double lam = wf_.lambda;
        s.w0_l2_omega = lens_integral(g_.r_omega, [&](double s_) {
            double v = w0_val_(s_);
            return v * v;
        });
        s.w0_l2_d = lens_integral(g_.r_cavity, [&](double s_) {
            double v = w0_val_(s_);
            return v * v;
        });
        s.bulk_term = (lam * lam * tau_ * tau_ - tau_) * s.w0_l2_omega;
        s.j_h = lens_integral(g_.r_cavity, [&](double s_) {
            double v = w0_val_(s_), dv = w0_der_(s_);
            return dv * dv + tau_ * v * v;
        });

        // E_h from modal radial integrals of R = w - w0 on the grid.
        ModeMatrix R = residual_field(w_modes);
        s.e_h = gradient_energy(R);

        // Remainder: every e^{tau T} factor is fused before evaluation.
        const double decay = std::exp(-tau_ * wf_.T_final);
        if (decay > 0.0) {
            double f0w0_d = lens_integral(g_.r_cavity, [&](double s_) {
                return lam * lam * F0_eval(wf_, s_, tau_) * w0_val_(s_);
            });
            double f0w0_omega = lens_integral(g_.r_omega, [&](double s_) {
                return lam * lam * F0_eval(wf_, s_, tau_) * w0_val_(s_);
            });
            double uT_R = modal_volume(u_final, R.rows);
            double uT_w0 = modal_volume(u_final, w0_grid_.rows);
            s.r_cal = decay * (f0w0_d + uT_R + (f0w0_omega - f0w0_d) - uT_w0);
        }
        s.decomp_residual = s.indicator - (s.bulk_term + s.j_h + s.e_h + s.r_cal);
        return s;
    }

    struct FirstRepresentation {
        double residual = 0.0;
        double scale = 0.0;  // sum of term magnitudes, for relative comparison
    };

    /// Residual of the boundary-plus-volume representation of the indicator;
    /// e^{-tau T} F is evaluated in the fused overflow-free form
    /// e^{-tau T} u(.,T) + (tau - lambda^2 tau^2) w.
    FirstRepresentation first_representation(
        std::span<const std::vector<double>> w_modes,
        std::span<const std::vector<double>> u_final) const {
        std::vector<double> wb = trace(w_modes, grid_.size() - 1);
        double indicator = boundary_integral(g_, wb, dw0_trace_) -
                           boundary_integral(g_, w0_trace_, dw0_trace_);

        std::vector<double> w_cav = trace(w_modes, 0);
        double cavity_term = sphere_integral(g_.r_cavity, w_cav, dw0_cavity_);

        const double lam = wf_.lambda;
        const double decay = std::exp(-tau_ * wf_.T_final);
        // F0 has corners in s, so its Legendre projection converges slowly;
        // the kernel quadrature splits the angular integral at the corners
        double f0_w = decay * lam * lam *
                      volume_radial_kernel(
                          [&](double s_) { return F0_eval(wf_, s_, tau_); },
                          w_modes);
        double uT_w0 = decay * modal_volume(u_final, w0_grid_.rows);
        double w_w0 = (tau_ - lam * lam * tau_ * tau_) *
                      modal_volume(w_modes, w0_grid_.rows);

        FirstRepresentation out;
        out.residual = indicator - (cavity_term + f0_w - uT_w0 - w_w0);
        out.scale = std::abs(indicator) + std::abs(cavity_term) + std::abs(f0_w) +
                    std::abs(uT_w0) + std::abs(w_w0);
        return out;
    }

    /// L2 norm squared of w0 over the cavity or the conductor ball.
    double w0_norm_sq(double region_radius) const {
        return lens_integral(region_radius, [&](double s_) {
            double v = w0_val_(s_);
            return v * v;
        });
    }

private:
    struct ModeMatrix {
        std::vector<std::vector<double>> rows;  // [l][i]
        std::vector<double> back_column() const {
            std::vector<double> out(rows.size());
            for (std::size_t l = 0; l < rows.size(); ++l) out[l] = rows[l].back();
            return out;
        }
    };

    std::vector<double> trace(std::span<const std::vector<double>> modes, int i) const {
        std::vector<double> out(modes.size());
        for (std::size_t l = 0; l < modes.size(); ++l) out[l] = modes[l][i];
        return out;
    }

    /// Sample a radial-about-the-source function on the (r_i, mu_j) grid and
    /// project to Legendre modes at every radius.
    template <class F>
    ModeMatrix project_on_grid(F&& f) const {
        ModeMatrix m;
        m.rows.assign(basis_.mode_count(), std::vector<double>(grid_.size(), 0.0));
        std::vector<double> samples(basis_.node_count());
        for (int i = 0; i < grid_.size(); ++i) {
            for (std::size_t j = 0; j < basis_.node_count(); ++j)
                samples[j] = f(source_distance(g_, grid_.r[i], basis_.nodes[j]));
            std::vector<double> coeffs = basis_.project(samples);
            for (int l = 0; l < basis_.mode_count(); ++l) m.rows[l][i] = coeffs[l];
        }
        return m;
    }

    std::vector<double> project_normal_derivative(double radius) const {
        std::vector<double> samples(basis_.node_count());
        for (std::size_t j = 0; j < basis_.node_count(); ++j) {
            double mu = basis_.nodes[j];
            double s = source_distance(g_, radius, mu);
            samples[j] = w0_der_(s) * radial_projection(g_, radius, mu);
        }
        return basis_.project(samples);
    }

    ModeMatrix residual_field(std::span<const std::vector<double>> w_modes) const {
        ModeMatrix R;
        R.rows.assign(w_modes.size(), std::vector<double>(grid_.size(), 0.0));
        for (std::size_t l = 0; l < w_modes.size(); ++l)
            for (int i = 0; i < grid_.size(); ++i)
                R.rows[l][i] = w_modes[l][i] - w0_grid_.rows[l][i];
        return R;
    }

    /// 2 pi sum_l (2/(2l+1)) [face-flux energy + mass terms]; the face-based
    /// gradient matches the finite-volume operator's quadratic form.
    double gradient_energy(const ModeMatrix& R) const {
        const double h = grid_.h;
        double total = 0.0;
        for (std::size_t l = 0; l < R.rows.size(); ++l) {
            const auto& rl = R.rows[l];
            const double cl = double(l) * (l + 1.0);
            double acc = 0.0;
            for (int i = 0; i + 1 < grid_.size(); ++i) {
                double rf = 0.5 * (grid_.r[i] + grid_.r[i + 1]);
                double slope = (rl[i + 1] - rl[i]) / h;
                acc += rf * rf * slope * slope * h;
            }
            for (int i = 0; i < grid_.size(); ++i)
                acc += grid_.cell_weight(i) *
                       (cl / (grid_.r[i] * grid_.r[i]) + tau_) * rl[i] * rl[i];
            total += 2.0 / (2.0 * l + 1.0) * acc;
        }
        return 2.0 * M_PI * total;
    }

    /// int over the shell of f(|x - p|) w(x) dx, with the angular integral at
    /// every radius split at the kink radii of the horizon-clipped fields so
    /// each Gauss panel sees a smooth integrand.
    template <class F>
    double volume_radial_kernel(F&& f,
                                std::span<const std::vector<double>> w_modes) const {
        static const GaussRule rule = GaussRule::make(48);
        const double d = g_.source.center_z;
        const double s_kinks[3] = {wf_.T_final / wf_.lambda - wf_.eta(),
                                   wf_.T_final / wf_.lambda,
                                   wf_.T_final / wf_.lambda + wf_.eta()};
        const std::size_t modes = w_modes.size();
        double total = 0.0;
        std::vector<double> cuts;
        for (int i = 0; i < grid_.size(); ++i) {
            const double r = grid_.r[i];
            cuts.assign({-1.0, 1.0});
            for (double sk : s_kinks) {
                if (sk <= 0.0) continue;
                double mu = (r * r + d * d - sk * sk) / (2.0 * r * d);
                if (mu > -1.0 && mu < 1.0) cuts.push_back(mu);
            }
            std::sort(cuts.begin(), cuts.end());
            auto integrand = [&](double mu) {
                double fv = f(source_distance(g_, r, mu));
                if (fv == 0.0) return 0.0;
                double p0 = 1.0, p1 = mu, acc = w_modes[0][i];
                if (modes > 1) acc += w_modes[1][i] * mu;
                for (std::size_t l = 2; l < modes; ++l) {
                    double p2 = ((2.0 * l - 1.0) * mu * p1 - (l - 1.0) * p0) / l;
                    p0 = p1;
                    p1 = p2;
                    acc += w_modes[l][i] * p2;
                }
                return fv * acc;
            };
            double ang = 0.0;
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
                ang += integrate_gauss(integrand, cuts[c], cuts[c + 1], rule);
            total += grid_.cell_weight(i) * ang;
        }
        return 2.0 * M_PI * total;
    }

    double modal_volume(std::span<const std::vector<double>> a,
                        std::span<const std::vector<double>> b) const {
        double total = 0.0;
        std::size_t modes = std::min(a.size(), b.size());
        for (std::size_t l = 0; l < modes; ++l) {
            double acc = 0.0;
            for (int i = 0; i < grid_.size(); ++i)
                acc += grid_.cell_weight(i) * a[l][i] * b[l][i];
            total += 2.0 / (2.0 * l + 1.0) * acc;
        }
        return 2.0 * M_PI * total;
    }

    /// int over the ball of radius R0 (origin-centered) of f(|x - p|) dx,
    /// reduced to 1D with the spherical-cap area weight.
    template <class F>
    double lens_integral(double R0, F&& f) const {
        const double d = g_.source.center_z;
        auto integrand = [&](double s) {
            double gap = d - s;
            return f(s) * M_PI * s / d * (R0 * R0 - gap * gap);
        };
        AdaptiveResult r = integrate_adaptive(integrand, d - R0, d + R0, quad_tol_);
        if (!r.converged)
            throw std::runtime_error("lens_integral: quadrature did not converge");
        return r.value;
    }

    const WaveField wf_;
    const ProbeGeometry g_;
    const ModeBasis& basis_;
    const RadialGrid& grid_;
    double tau_;
    double quad_tol_;
    double s_lo_ = 0.0, s_hi_ = 0.0;
    PiecewiseChebyshev w0_val_, w0_der_;
    ModeMatrix w0_grid_;
    std::vector<double> w0_trace_, dw0_trace_, dw0_cavity_;
};

}  // namespace waveflux
