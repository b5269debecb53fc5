#pragma once

#include "schn/grid.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace schn {

using complex = std::complex<double>;

/// Triangular table of spherical-harmonic coefficients f^l_m, 0 <= l < B,
/// -l <= m <= l, stored degree-major: index l*l + l + m.
struct SpectralCoeffs {
    Bandlimit bandlimit{1};
    std::vector<complex> coeffs;

    explicit SpectralCoeffs(Bandlimit b) : bandlimit(b), coeffs(b.coeff_count()) {}

    int B() const noexcept { return bandlimit.value(); }
    static std::size_t index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }
    complex& at(int l, int m) { return coeffs[index(l, m)]; }
    const complex& at(int l, int m) const { return coeffs[index(l, m)]; }

    /// Largest |f^l_{-m} - (-1)^m conj(f^l_m)| over the table.
    double conjugate_symmetry_defect() const;
};

/// Fully normalized associated Legendre values N_l^m P_l^m(x) (Condon-Shortley
/// phase included) for l < B, 0 <= m <= l, stored at l(l+1)/2 + m.
/// Throws ConfigError when |x| > 1.
std::vector<double> legendre_normalized(int B, double x);

inline std::size_t legendre_index(int l, int m)
{
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 + static_cast<std::size_t>(m);
}

/// Precomputed separable transform for one bandlimit. Coefficients of real
/// signals are handled in "half" form: only m >= 0, order-major
/// (index half_index(l, m)), B(B+1)/2 entries. Obtain through sht_plan().
class ShtPlan {
public:
    explicit ShtPlan(int B);

    int B() const noexcept { return B_; }
    const SphericalGrid& grid() const noexcept { return *grid_; }
    std::shared_ptr<const SphericalGrid> grid_ptr() const noexcept { return grid_; }
    std::size_t half_size() const noexcept { return half_size_; }
    std::size_t half_index(int l, int m) const
    {
        return m_offset_[static_cast<std::size_t>(m)] + static_cast<std::size_t>(l - m);
    }

    /// Degree l of every half-layout slot.
    const std::vector<int>& half_degrees() const noexcept { return half_degree_; }
    /// Orders m of every half-layout slot.
    const std::vector<int>& half_orders() const noexcept { return half_order_; }

    /// f^l_m = (2 pi / 2B) sum_j w_j sum_k x_jk e^{-i m phi_k} Y-bar_l^m(theta_j).
    void analyze(std::span<const double> signal, std::span<complex> half, bool parallel = false) const;

    /// Unweighted analysis: sum_jk x_jk conj(Y_l^m(theta_j, phi_k)). This is
    /// the adjoint of synthesize() with respect to the real inner products
    /// used by the autodiff layers.
    void analyze_unweighted(std::span<const double> signal, std::span<complex> half, bool parallel = false) const;

    /// s(theta_j, phi_k) = sum_l sum_{|m|<=l} f^l_m Y_l^m, taking f^l_{-m} from
    /// conjugate symmetry. The imaginary part of f^l_0 is ignored.
    void synthesize(std::span<const complex> half, std::span<double> signal, bool parallel = false) const;

private:
    void analyze_impl(std::span<const double> signal, std::span<complex> half, bool weighted, bool parallel) const;

    int B_;
    int N_;
    std::shared_ptr<const SphericalGrid> grid_;
    std::size_t half_size_;
    std::vector<std::size_t> m_offset_;
    std::vector<int> half_degree_;
    std::vector<int> half_order_;
    // Legendre values for the northern rings j < B, order-major like the half layout.
    std::vector<double> legendre_;
    std::vector<double> ring_quadrature_;
    // Real-to-complex ring transforms of length 2B (FFTW plans).
    struct RingFft;
    std::shared_ptr<const RingFft> fft_;
};

/// Process-wide plan cache, initialized at most once per bandlimit; safe
/// under concurrent use.
const ShtPlan& sht_plan(int B);

SpectralCoeffs half_to_full(const ShtPlan& plan, std::span<const complex> half);
/// Projects onto the conjugate-symmetric part: h^l_m = (f^l_m + (-1)^m conj(f^l_{-m})) / 2.
std::vector<complex> full_to_half(const ShtPlan& plan, const SpectralCoeffs& c);

SpectralCoeffs sht_forward(const SphericalSignal& s);
/// Throws ShapeError when c.B differs from the grid bandlimit.
SphericalSignal sht_inverse(const SpectralCoeffs& c, std::shared_ptr<const SphericalGrid> grid);

/// Evaluates sum f^l_m Y_l^m at an arbitrary direction (real part).
double evaluate_series(const SpectralCoeffs& c, double theta, double phi);

} // namespace schn
