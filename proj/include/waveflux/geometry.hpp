#pragma once

#include <cmath>
#include <stdexcept>

namespace waveflux {

/// Ball with center on the symmetry (z) axis.
struct Ball {
    double center_z = 0.0;
    double radius = 0.0;
};

/// Concentric shell domain: conductor of radius r_omega, cavity of radius
/// r_cavity, both centered at the origin, probed by an exterior source ball
/// on the positive z axis. Owns all the distances the asymptotics recover.
struct ProbeGeometry {
    double r_omega = 0.0;
    double r_cavity = 0.0;
    Ball source;

    static ProbeGeometry make(double r_omega, double r_cavity, Ball source) {
        if (!(source.radius > 0.0))
            throw std::invalid_argument("ProbeGeometry: source radius must be positive");
        if (!(r_cavity > 0.0 && r_cavity < r_omega))
            throw std::invalid_argument("ProbeGeometry: need 0 < r_cavity < r_omega");
        if (!(source.center_z - source.radius > r_omega))
            throw std::invalid_argument("ProbeGeometry: source ball intersects the conductor");
        return ProbeGeometry{r_omega, r_cavity, source};
    }
};

enum class DistancePair { OmegaToB, DToB };

/// Distance between the source ball and the conductor surface or the cavity.
inline double ball_distance(const ProbeGeometry& g, DistancePair which) {
    double gap = g.source.center_z - g.source.radius;
    return which == DistancePair::OmegaToB ? gap - g.r_omega : gap - g.r_cavity;
}

/// Distance from the point (r sin(theta), 0, r cos(theta)), mu = cos(theta),
/// to the source center.
inline double source_distance(const ProbeGeometry& g, double r, double mu) {
    double z = g.source.center_z;
    return std::sqrt(std::max(r * r + z * z - 2.0 * r * z * mu, 0.0));
}

/// Cosine factor between the radial direction at (r, mu) and the unit vector
/// pointing away from the source center, times nothing: ((x-p).x_hat)/s.
/// Converts a derivative along (x-p) into a radial (normal) derivative.
inline double radial_projection(const ProbeGeometry& g, double r, double mu) {
    double s = source_distance(g, r, mu);
    return (r - g.source.center_z * mu) / s;
}

}  // namespace waveflux
