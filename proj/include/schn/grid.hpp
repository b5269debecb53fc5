#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace schn {

/// Maximum spherical-harmonic degree plus one. A grid at bandlimit B has
/// 2B colatitude rings of 2B azimuthal samples each.
class Bandlimit {
public:
    /// Throws ConfigError when b == 0.
    explicit Bandlimit(int b);

    int value() const noexcept { return b_; }
    int resolution() const noexcept { return 2 * b_; }
    std::size_t node_count() const noexcept
    {
        return static_cast<std::size_t>(resolution()) * static_cast<std::size_t>(resolution());
    }
    /// Number of complex coefficients in a full triangular table, B².
    std::size_t coeff_count() const noexcept
    {
        return static_cast<std::size_t>(b_) * static_cast<std::size_t>(b_);
    }

    friend bool operator==(Bandlimit, Bandlimit) = default;

private:
    int b_;
};

/// Offset equiangular grid: theta_j = pi(2j+1)/(4B), phi_k = 2 pi k/(2B).
/// The colatitude weights integrate every Legendre polynomial of degree
/// < 2B exactly, so products of two bandlimit-B signals integrate exactly.
struct SphericalGrid {
    Bandlimit bandlimit{1};
    std::vector<double> thetas;
    std::vector<double> phis;
    std::vector<double> weights;

    int B() const noexcept { return bandlimit.value(); }
    int resolution() const noexcept { return bandlimit.resolution(); }
    std::size_t node_count() const noexcept { return bandlimit.node_count(); }

    /// Quadrature area of a node on ring j: (2 pi / 2B) w_j. Sums to 4 pi.
    double cell_area(int ring) const;
    /// Per-ring areas normalized so the whole sphere sums to one.
    std::vector<double> normalized_ring_areas() const;
};

SphericalGrid make_grid(Bandlimit b);

/// Process-wide cache of grids; returned pointers stay valid for the
/// lifetime of the program. Safe to call concurrently.
std::shared_ptr<const SphericalGrid> shared_grid(int B);

/// Solves sum_j w_j P_l(cos theta_j) = 2 delta_{l0}, l = 0..n-1 for n nodes.
/// Throws InternalError for a singular system and ConfigError if any weight
/// comes out non-positive.
std::vector<double> solve_quadrature(std::span<const double> thetas);

/// Closed-form weights for the offset equiangular nodes (Fejer's first
/// rule). Agrees with solve_quadrature to rounding.
std::vector<double> closed_form_weights(int B);

/// One real scalar field sampled on a grid, colatitude-major.
struct SphericalSignal {
    std::shared_ptr<const SphericalGrid> grid;
    std::vector<double> values;

    explicit SphericalSignal(std::shared_ptr<const SphericalGrid> g);
    SphericalSignal(std::shared_ptr<const SphericalGrid> g, std::vector<double> v);

    int B() const noexcept { return grid->B(); }
    double& at(int ring, int col) { return values[static_cast<std::size_t>(ring) * grid->resolution() + col]; }
    double at(int ring, int col) const { return values[static_cast<std::size_t>(ring) * grid->resolution() + col]; }
};

/// C channels on a shared grid, channel-major then colatitude-major.
struct FeatureMap {
    std::shared_ptr<const SphericalGrid> grid;
    int channels = 0;
    std::vector<double> values;

    FeatureMap(std::shared_ptr<const SphericalGrid> g, int c);
    FeatureMap(std::shared_ptr<const SphericalGrid> g, int c, std::vector<double> v);

    int B() const noexcept { return grid->B(); }
    std::span<double> channel(int c);
    std::span<const double> channel(int c) const;
    SphericalSignal channel_signal(int c) const;
    void set_channel(int c, const SphericalSignal& s);
};

/// Dense class labels on a grid, row-major over (ring, column).
struct LabelMap {
    std::shared_ptr<const SphericalGrid> grid;
    int num_classes = 0;
    std::vector<std::uint16_t> labels;

    LabelMap(std::shared_ptr<const SphericalGrid> g, int classes);
    LabelMap(std::shared_ptr<const SphericalGrid> g, int classes, std::vector<std::uint16_t> l);

    int B() const noexcept { return grid->B(); }
    /// Throws ConfigError naming the first offending node.
    void validate() const;
};

/// (2 pi / 2B) sum_j sum_k w_j s(theta_j, phi_k). Exact below bandlimit 2B.
double integrate(const SphericalSignal& s);
double integrate(const SphericalGrid& grid, std::span<const double> values);

/// Unit direction vector of node (ring, col).
struct Vec3 {
    double x = 0, y = 0, z = 0;
};
Vec3 node_direction(const SphericalGrid& grid, int ring, int col);

} // namespace schn
