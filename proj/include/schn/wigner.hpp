#pragma once

#include "schn/grid.hpp"
#include "schn/sht.hpp"

#include <array>
#include <vector>

namespace schn {

class Rng;

/// Z-Y-Z Euler angles of the active rotation Rz(alpha) Ry(beta) Rz(gamma).
struct RotationZYZ {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    static RotationZYZ identity() { return {}; }
    /// Throws ConfigError when beta is outside [0, pi].
    void validate() const;
    /// Euler angles of the inverse rotation, beta kept in [0, pi].
    RotationZYZ inverse() const;
    bool is_identity() const { return alpha == 0.0 && beta == 0.0 && gamma == 0.0; }
};

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(const RotationZYZ& r);
Vec3 apply(const Mat3& m, const Vec3& v);

/// Z-Y-Z angles of a rotation matrix; beta in [0, pi]. At the gimbal-lock
/// poles gamma is set to 0.
RotationZYZ from_matrix(const Mat3& m);
/// Rotation with matrix(a) * matrix(b): b is applied first.
RotationZYZ compose(const RotationZYZ& a, const RotationZYZ& b);

/// Haar-uniform draw: alpha, gamma uniform on [0, 2 pi), cos(beta) uniform on [-1, 1].
RotationZYZ sample_haar(Rng& rng);

/// Real (2l+1)x(2l+1) matrix d^l_{m m'}(beta), row m, column m', both offset by l.
struct WignerDBlock {
    int l = 0;
    std::vector<double> entries;

    double operator()(int m, int mp) const
    {
        return entries[static_cast<std::size_t>(m + l) * (2 * l + 1) + static_cast<std::size_t>(mp + l)];
    }
    double& operator()(int m, int mp)
    {
        return entries[static_cast<std::size_t>(m + l) * (2 * l + 1) + static_cast<std::size_t>(mp + l)];
    }
};

WignerDBlock wigner_d(int l, double beta);

/// d^l(beta) for every l < L, computed by a single three-term recurrence in l.
std::vector<WignerDBlock> wigner_d_all(int L, double beta);

/// f'^l_m = sum_{m'} e^{-i m alpha} d^l_{m m'}(beta) e^{-i m' gamma} f^l_{m'}.
/// These are the coefficients of x -> f(R^{-1} x).
SpectralCoeffs rotate_coeffs(const SpectralCoeffs& c, const RotationZYZ& r);

/// sht_inverse(rotate_coeffs(sht_forward(s), r)) on the same grid.
SphericalSignal rotate_signal(const SphericalSignal& s, const RotationZYZ& r);

/// Rotates every channel of a feature map.
FeatureMap rotate_feature_map(const FeatureMap& f, const RotationZYZ& r);

/// For every node p, the index of the grid node nearest to R^{-1} x_p; the
/// permutation-style rotation x -> f(R^{-1} x) for data without a spectrum.
std::vector<std::size_t> nearest_node_map(const SphericalGrid& grid, const RotationZYZ& r);

/// Labels rotated by nearest-node lookup.
LabelMap rotate_labels(const LabelMap& labels, const RotationZYZ& r);

} // namespace schn
