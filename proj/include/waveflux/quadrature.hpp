#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace waveflux {

/// Gauss-Legendre rule on [-1,1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// Nodes by Newton iteration on P_n; exact for polynomials up to degree 2n-1.
    static GaussRule make(int n) {
        if (n < 1) throw std::invalid_argument("GaussRule: n must be >= 1");
        GaussRule rule;
        rule.nodes.resize(n);
        rule.weights.resize(n);
        const int m = (n + 1) / 2;
        for (int i = 0; i < m; ++i) {
            // Tricomi initial guess for the i-th root.
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                // Evaluate P_n(x) and P_n'(x) by recurrence.
                double p0 = 1.0, p1 = x;
                for (int l = 2; l <= n; ++l) {
                    double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
                    p0 = p1;
                    p1 = p2;
                }
                pp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            rule.nodes[i] = -x;
            rule.nodes[n - 1 - i] = x;
            double w = 2.0 / ((1.0 - x * x) * pp * pp);
            rule.weights[i] = w;
            rule.weights[n - 1 - i] = w;
        }
        return rule;
    }
};

/// Fixed-order Gauss integration of f over [a,b].
template <class F>
double integrate_gauss(F&& f, double a, double b, const GaussRule& rule) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
        sum += rule.weights[j] * f(c + hw * rule.nodes[j]);
    return hw * sum;
}

struct AdaptiveResult {
    double value = 0.0;
    bool converged = true;
};

namespace detail {
inline const GaussRule& gauss7() {
    static const GaussRule r = GaussRule::make(7);
    return r;
}
inline const GaussRule& gauss15() {
    static const GaussRule r = GaussRule::make(15);
    return r;
}
}  // namespace detail

/// Globally adaptive Gauss quadrature: bisects the segment with the largest
/// G15-G7 discrepancy until the summed error estimate drops below
/// rel_tol * |integral|. Handles integrands concentrated near an endpoint
/// (exponential boundary layers) by construction.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double rel_tol,
                                  int max_segments = 4096, double abs_tol = 0.0) {
    struct Seg {
        double a, b, val, err;
    };
    if (!(b > a)) return {0.0, true};

    auto eval = [&](double lo, double hi) {
        double v15 = integrate_gauss(f, lo, hi, detail::gauss15());
        double v7 = integrate_gauss(f, lo, hi, detail::gauss7());
        return Seg{lo, hi, v15, std::abs(v15 - v7)};
    };

    std::vector<Seg> segs;
    segs.push_back(eval(a, b));
    for (;;) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].val;
            err += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        double floor = rel_tol * std::abs(total) + abs_tol + 1e-300;
        if (err <= floor || segs[worst].err == 0.0) return {total, true};
        if ((int)segs.size() >= max_segments)
            return {total, false};
        Seg s = segs[worst];
        double mid = 0.5 * (s.a + s.b);
        if (mid <= s.a || mid >= s.b) return {total, true};  // interval exhausted
        segs[worst] = eval(s.a, mid);
        segs.push_back(eval(mid, s.b));
    }
}

}  // namespace waveflux
