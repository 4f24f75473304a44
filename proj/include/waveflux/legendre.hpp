#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "waveflux/geometry.hpp"
#include "waveflux/quadrature.hpp"

namespace waveflux {

/// P_l(mu) by the stable three-term recurrence.
inline double legendre_eval(int l, double mu) {
    if (l < 0) throw std::domain_error("legendre_eval: l must be >= 0");
    if (std::abs(mu) > 1.0) throw std::domain_error("legendre_eval: |mu| > 1");
    if (l == 0) return 1.0;
    double p0 = 1.0, p1 = mu;
    for (int k = 2; k <= l; ++k) {
        double p2 = ((2 * k - 1) * mu * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

/// Legendre-mode basis on the sphere: a(mu) = sum_l a_l P_l(mu) with
/// a_l = ((2l+1)/2) int_{-1}^{1} a P_l dmu. Quadrature nodes carry an
/// 8-node safety margin over the truncation degree.
struct ModeBasis {
    int max_degree = 0;
    std::vector<double> nodes;    // Gauss-Legendre mu_j in (-1,1)
    std::vector<double> weights;  // sum = 2
    std::vector<std::vector<double>> pl;  // pl[l][j] = P_l(mu_j)

    static ModeBasis make(int max_degree, int extra_nodes = 8) {
        if (max_degree < 0) throw std::invalid_argument("ModeBasis: max_degree < 0");
        ModeBasis b;
        b.max_degree = max_degree;
        GaussRule rule = GaussRule::make(max_degree + extra_nodes);
        b.nodes = rule.nodes;
        b.weights = rule.weights;
        b.pl.assign(max_degree + 1, std::vector<double>(b.nodes.size()));
        for (std::size_t j = 0; j < b.nodes.size(); ++j) {
            double mu = b.nodes[j];
            double p0 = 1.0, p1 = mu;
            b.pl[0][j] = 1.0;
            if (max_degree >= 1) b.pl[1][j] = mu;
            for (int l = 2; l <= max_degree; ++l) {
                double p2 = ((2 * l - 1) * mu * p1 - (l - 1) * p0) / l;
                p0 = p1;
                p1 = p2;
                b.pl[l][j] = p2;
            }
        }
        return b;
    }

    std::size_t node_count() const { return nodes.size(); }
    int mode_count() const { return max_degree + 1; }

    /// a_l = ((2l+1)/2) sum_j w_j samples_j P_l(mu_j).
    std::vector<double> project(std::span<const double> samples) const {
        if (samples.size() != nodes.size())
            throw std::invalid_argument("project: sample count does not match node count");
        std::vector<double> coeffs(max_degree + 1, 0.0);
        for (int l = 0; l <= max_degree; ++l) {
            double acc = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j)
                acc += weights[j] * samples[j] * pl[l][j];
            coeffs[l] = 0.5 * (2 * l + 1) * acc;
        }
        return coeffs;
    }

    /// Values of sum_l coeffs_l P_l at the quadrature nodes.
    std::vector<double> reconstruct(std::span<const double> coeffs) const {
        if (coeffs.size() > pl.size())
            throw std::invalid_argument("reconstruct: too many coefficients");
        std::vector<double> vals(nodes.size(), 0.0);
        for (std::size_t l = 0; l < coeffs.size(); ++l)
            for (std::size_t j = 0; j < nodes.size(); ++j)
                vals[j] += coeffs[l] * pl[l][j];
        return vals;
    }
};

/// Surface integral over the sphere of radius r_omega of two functions given
/// by their mode coefficients: 2 pi r^2 sum_l (2/(2l+1)) a_l b_l.
inline double boundary_integral(const ProbeGeometry& g, std::span<const double> a,
                                std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("boundary_integral: coefficient length mismatch");
    double sum = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l)
        sum += 2.0 / (2.0 * l + 1.0) * a[l] * b[l];
    return 2.0 * M_PI * g.r_omega * g.r_omega * sum;
}

/// Same mode-space pairing on a sphere of arbitrary radius (used on the
/// cavity surface).
inline double sphere_integral(double radius, std::span<const double> a,
                              std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("sphere_integral: coefficient length mismatch");
    double sum = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l)
        sum += 2.0 / (2.0 * l + 1.0) * a[l] * b[l];
    return 2.0 * M_PI * radius * radius * sum;
}

}  // namespace waveflux
