#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace waveflux {

/// Chebyshev interpolant on [a,b] built from Chebyshev-Gauss samples.
struct Chebyshev {
    double a = 0.0, b = 1.0;
    std::vector<double> coeffs;

    static Chebyshev fit(const std::function<double(double)>& f, double a, double b,
                         int n) {
        if (n < 2) throw std::invalid_argument("Chebyshev: need at least 2 points");
        Chebyshev c;
        c.a = a;
        c.b = b;
        std::vector<double> fv(n);
        for (int j = 0; j < n; ++j) {
            double x = std::cos(M_PI * (j + 0.5) / n);
            fv[j] = f(0.5 * (a + b) + 0.5 * (b - a) * x);
        }
        c.coeffs.resize(n);
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                acc += fv[j] * std::cos(M_PI * k * (j + 0.5) / n);
            c.coeffs[k] = 2.0 / n * acc;
        }
        c.coeffs[0] *= 0.5;
        return c;
    }

    double operator()(double x) const {
        double t = (2.0 * x - a - b) / (b - a);
        // Clenshaw recurrence
        double b1 = 0.0, b2 = 0.0;
        for (int k = (int)coeffs.size() - 1; k >= 1; --k) {
            double tmp = 2.0 * t * b1 - b2 + coeffs[k];
            b2 = b1;
            b1 = tmp;
        }
        return t * b1 - b2 + coeffs[0];
    }
};

/// Piecewise Chebyshev interpolant with prescribed interior breakpoints.
struct PiecewiseChebyshev {
    std::vector<double> edges;
    std::vector<Chebyshev> pieces;

    static PiecewiseChebyshev fit(const std::function<double(double)>& f, double a,
                                  double b, std::vector<double> breakpoints,
                                  int points_per_piece) {
        PiecewiseChebyshev p;
        p.edges.push_back(a);
        std::sort(breakpoints.begin(), breakpoints.end());
        for (double x : breakpoints)
            if (x > a + 1e-12 && x < b - 1e-12) p.edges.push_back(x);
        p.edges.push_back(b);
        for (std::size_t i = 0; i + 1 < p.edges.size(); ++i)
            p.pieces.push_back(
                Chebyshev::fit(f, p.edges[i], p.edges[i + 1], points_per_piece));
        return p;
    }

    double operator()(double x) const {
        std::size_t lo = 0;
        while (lo + 2 < p_size() && x > edges[lo + 1]) ++lo;
        return pieces[lo](x);
    }

private:
    std::size_t p_size() const { return edges.size(); }
};

}  // namespace waveflux
