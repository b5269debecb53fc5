#pragma once

#include "schn/grid.hpp"
#include "schn/sht.hpp"

#include <vector>

namespace schn {

/// K learnable spectral values placed uniformly in degree:
/// anchor i sits at degree i (B-1)/(K-1).
struct AnchorFilter {
    int B = 1;
    std::vector<double> anchors;

    int K() const noexcept { return static_cast<int>(anchors.size()); }
    /// Throws ConfigError unless 2 <= K <= B.
    void validate() const;
};

/// Per-degree real gains k_l, l = 0..B-1.
struct DegreeGains {
    std::vector<double> gains;

    int B() const noexcept { return static_cast<int>(gains.size()); }
};

/// Linear interpolation weights from K anchors onto B integer degrees. Degree
/// l reads anchors[lower[l]] and anchors[lower[l] + 1] with weights
/// (1 - frac[l], frac[l]). The map is linear, so its transpose is the adjoint.
struct AnchorInterpolation {
    int K = 0;
    int B = 0;
    std::vector<int> lower;
    std::vector<double> frac;

    AnchorInterpolation(int K, int B);

    void apply(const double* anchors, double* gains) const;
    /// anchor_grad += J^T gain_grad
    void accumulate_adjoint(const double* gain_grad, double* anchor_grad) const;
};

DegreeGains interpolate_gains(const AnchorFilter& f);

/// out^l_m = k_l f^l_m. Throws ShapeError on bandlimit mismatch.
SpectralCoeffs spectral_conv(const SpectralCoeffs& c, const DegreeGains& g);

/// Drops degrees >= B_new.
SpectralCoeffs truncate(const SpectralCoeffs& c, int B_new);
/// Appends zero degrees up to B_new.
SpectralCoeffs zeropad(const SpectralCoeffs& c, int B_new);

/// h(theta) = sum_l k_l (2l+1)/(4 pi) P_l(cos theta): the zonal kernel whose
/// spectral action is g.
SphericalSignal render_zonal(const DegreeGains& g, std::shared_ptr<const SphericalGrid> grid);

} // namespace schn
