#include "schn/filters.hpp"

#include "schn/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace schn {

void AnchorFilter::validate() const
{
    if (K() < 2) {
        throw ConfigError("anchor filter needs K >= 2, got " + std::to_string(K()));
    }
    if (K() > B) {
        throw ConfigError("anchor count " + std::to_string(K()) + " exceeds bandlimit " + std::to_string(B));
    }
}

AnchorInterpolation::AnchorInterpolation(int K_, int B_) : K(K_), B(B_)
{
    if (K < 2) {
        throw ConfigError("anchor interpolation needs K >= 2");
    }
    if (K > B) {
        throw ConfigError("anchor count exceeds bandlimit");
    }
    lower.resize(static_cast<std::size_t>(B));
    frac.resize(static_cast<std::size_t>(B));
    for (int l = 0; l < B; ++l) {
        // position of degree l in anchor units; exact rational for anchor hits
        const long num = static_cast<long>(l) * (K - 1);
        const long den = std::max(B - 1, 1);
        int i = static_cast<int>(num / den);
        long rem = num % den;
        if (i >= K - 1) {
            i = K - 2;
            rem = den;
        }
        lower[static_cast<std::size_t>(l)] = i;
        frac[static_cast<std::size_t>(l)] = static_cast<double>(rem) / static_cast<double>(den);
    }
}

void AnchorInterpolation::apply(const double* anchors, double* gains) const
{
    for (int l = 0; l < B; ++l) {
        const int i = lower[static_cast<std::size_t>(l)];
        const double t = frac[static_cast<std::size_t>(l)];
        gains[l] = t == 0.0 ? anchors[i] : (t == 1.0 ? anchors[i + 1] : (1.0 - t) * anchors[i] + t * anchors[i + 1]);
    }
}

void AnchorInterpolation::accumulate_adjoint(const double* gain_grad, double* anchor_grad) const
{
    for (int l = 0; l < B; ++l) {
        const int i = lower[static_cast<std::size_t>(l)];
        const double t = frac[static_cast<std::size_t>(l)];
        anchor_grad[i] += (1.0 - t) * gain_grad[l];
        anchor_grad[i + 1] += t * gain_grad[l];
    }
}

DegreeGains interpolate_gains(const AnchorFilter& f)
{
    f.validate();
    AnchorInterpolation interp(f.K(), f.B);
    DegreeGains g;
    g.gains.resize(static_cast<std::size_t>(f.B));
    interp.apply(f.anchors.data(), g.gains.data());
    return g;
}

SpectralCoeffs spectral_conv(const SpectralCoeffs& c, const DegreeGains& g)
{
    if (c.B() != g.B()) {
        throw ShapeError("spectral_conv: coefficients have B=" + std::to_string(c.B()) + " but gains have B=" +
                         std::to_string(g.B()));
    }
    SpectralCoeffs out(c.bandlimit);
    for (int l = 0; l < c.B(); ++l) {
        for (int m = -l; m <= l; ++m) {
            out.at(l, m) = g.gains[static_cast<std::size_t>(l)] * c.at(l, m);
        }
    }
    return out;
}

SpectralCoeffs truncate(const SpectralCoeffs& c, int B_new)
{
    Bandlimit b(B_new);
    SpectralCoeffs out(b);
    const int keep = std::min(B_new, c.B());
    std::copy_n(c.coeffs.begin(), static_cast<std::size_t>(keep) * keep, out.coeffs.begin());
    return out;
}

SpectralCoeffs zeropad(const SpectralCoeffs& c, int B_new)
{
    return truncate(c, B_new);
}

SphericalSignal render_zonal(const DegreeGains& g, std::shared_ptr<const SphericalGrid> grid)
{
    if (g.B() != grid->B()) {
        throw ShapeError("render_zonal: gains and grid bandlimits differ");
    }
    SphericalSignal out(grid);
    const int n = grid->resolution();
    for (int j = 0; j < n; ++j) {
        const double x = std::cos(grid->thetas[static_cast<std::size_t>(j)]);
        double p_prev = 1.0;
        double p = x;
        double h = 0.0;
        for (int l = 0; l < g.B(); ++l) {
            double pl;
            if (l == 0) {
                pl = 1.0;
            } else if (l == 1) {
                pl = x;
            } else {
                pl = ((2.0 * l - 1.0) * x * p - (l - 1.0) * p_prev) / l;
                p_prev = p;
                p = pl;
            }
            h += g.gains[static_cast<std::size_t>(l)] * (2.0 * l + 1.0) / (4.0 * std::numbers::pi) * pl;
        }
        for (int k = 0; k < n; ++k) {
            out.at(j, k) = h;
        }
    }
    return out;
}

} // namespace schn
