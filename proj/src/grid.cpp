#include "schn/grid.hpp"

#include "schn/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace schn {

Bandlimit::Bandlimit(int b) : b_(b)
{
    if (b < 1) {
        throw ConfigError("bandlimit must be >= 1, got " + std::to_string(b));
    }
}

double SphericalGrid::cell_area(int ring) const
{
    return 2.0 * std::numbers::pi / resolution() * weights[ring];
}

std::vector<double> SphericalGrid::normalized_ring_areas() const
{
    std::vector<double> a(weights.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] = cell_area(static_cast<int>(j)) / (4.0 * std::numbers::pi);
    }
    return a;
}

std::vector<double> solve_quadrature(std::span<const double> thetas)
{
    const auto n = static_cast<Eigen::Index>(thetas.size());
    if (n == 0) {
        throw ConfigError("quadrature needs at least one node");
    }
    // Row l holds P_l(cos theta_j) for every node.
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = std::cos(thetas[j]);
        if (!(thetas[j] > 0.0 && thetas[j] < std::numbers::pi)) {
            throw ConfigError("quadrature node outside (0, pi)");
        }
        double p_prev = 1.0;
        double p = x;
        A(0, j) = 1.0;
        if (n > 1) {
            A(1, j) = x;
        }
        for (Eigen::Index l = 2; l < n; ++l) {
            const double ld = static_cast<double>(l);
            const double p_next = ((2.0 * ld - 1.0) * x * p - (ld - 1.0) * p_prev) / ld;
            p_prev = p;
            p = p_next;
            A(l, j) = p;
        }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 2.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-14)) {
        throw InternalError("singular Legendre-Vandermonde system");
    }
    Eigen::VectorXd w = lu.solve(rhs);
    // one step of iterative refinement
    const Eigen::VectorXd r = rhs - A * w;
    w += lu.solve(r);

    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(w(j) > 0.0)) {
            throw ConfigError("quadrature produced a non-positive weight at node " + std::to_string(j));
        }
        out[static_cast<std::size_t>(j)] = w(j);
    }
    return out;
}

std::vector<double> closed_form_weights(int B)
{
    const int n = 2 * Bandlimit(B).value();
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double theta = std::numbers::pi * (2 * j + 1) / (2.0 * n);
        double s = 0.0;
        for (int k = 1; k <= n / 2; ++k) {
            s += std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
        }
        w[static_cast<std::size_t>(j)] = 2.0 / n * (1.0 - 2.0 * s);
    }
    return w;
}

SphericalGrid make_grid(Bandlimit b)
{
    SphericalGrid g;
    g.bandlimit = b;
    const int n = b.resolution();
    g.thetas.resize(static_cast<std::size_t>(n));
    g.phis.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        g.thetas[static_cast<std::size_t>(j)] = std::numbers::pi * (2 * j + 1) / (4.0 * b.value());
        g.phis[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * j / n;
    }
    g.weights = solve_quadrature(g.thetas);
    return g;
}

std::shared_ptr<const SphericalGrid> shared_grid(int B)
{
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const SphericalGrid>> cache;
    Bandlimit b(B);
    std::lock_guard lock(mutex);
    auto& slot = cache[B];
    if (!slot) {
        slot = std::make_shared<const SphericalGrid>(make_grid(b));
    }
    return slot;
}

SphericalSignal::SphericalSignal(std::shared_ptr<const SphericalGrid> g)
    : grid(std::move(g)), values(grid->node_count(), 0.0)
{
}

SphericalSignal::SphericalSignal(std::shared_ptr<const SphericalGrid> g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v))
{
    if (values.size() != grid->node_count()) {
        throw ShapeError("signal has " + std::to_string(values.size()) + " values, grid needs " +
                         std::to_string(grid->node_count()));
    }
}

FeatureMap::FeatureMap(std::shared_ptr<const SphericalGrid> g, int c)
    : grid(std::move(g)), channels(c), values(grid->node_count() * static_cast<std::size_t>(c), 0.0)
{
    if (c < 1) {
        throw ConfigError("feature map needs at least one channel");
    }
}

FeatureMap::FeatureMap(std::shared_ptr<const SphericalGrid> g, int c, std::vector<double> v)
    : grid(std::move(g)), channels(c), values(std::move(v))
{
    if (c < 1) {
        throw ConfigError("feature map needs at least one channel");
    }
    if (values.size() != grid->node_count() * static_cast<std::size_t>(c)) {
        throw ShapeError("feature map value count does not match channels x grid");
    }
}

std::span<double> FeatureMap::channel(int c)
{
    const std::size_t n = grid->node_count();
    return {values.data() + n * static_cast<std::size_t>(c), n};
}

std::span<const double> FeatureMap::channel(int c) const
{
    const std::size_t n = grid->node_count();
    return {values.data() + n * static_cast<std::size_t>(c), n};
}

SphericalSignal FeatureMap::channel_signal(int c) const
{
    auto ch = channel(c);
    return SphericalSignal(grid, std::vector<double>(ch.begin(), ch.end()));
}

void FeatureMap::set_channel(int c, const SphericalSignal& s)
{
    if (s.grid->B() != grid->B()) {
        throw ShapeError("channel bandlimit mismatch");
    }
    std::copy(s.values.begin(), s.values.end(), channel(c).begin());
}

LabelMap::LabelMap(std::shared_ptr<const SphericalGrid> g, int classes)
    : grid(std::move(g)), num_classes(classes), labels(grid->node_count(), 0)
{
    if (classes < 1) {
        throw ConfigError("label map needs at least one class");
    }
}

LabelMap::LabelMap(std::shared_ptr<const SphericalGrid> g, int classes, std::vector<std::uint16_t> l)
    : grid(std::move(g)), num_classes(classes), labels(std::move(l))
{
    if (classes < 1) {
        throw ConfigError("label map needs at least one class");
    }
    if (labels.size() != grid->node_count()) {
        throw ShapeError("label count does not match grid");
    }
}

void LabelMap::validate() const
{
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw ConfigError("label " + std::to_string(labels[i]) + " at node " + std::to_string(i) +
                              " is >= num_classes " + std::to_string(num_classes));
        }
    }
}

double integrate(const SphericalGrid& grid, std::span<const double> values)
{
    const int n = grid.resolution();
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        double ring = 0.0;
        for (int k = 0; k < n; ++k) {
            ring += values[static_cast<std::size_t>(j) * n + k];
        }
        total += grid.weights[static_cast<std::size_t>(j)] * ring;
    }
    return 2.0 * std::numbers::pi / n * total;
}

double integrate(const SphericalSignal& s)
{
    return integrate(*s.grid, s.values);
}

Vec3 node_direction(const SphericalGrid& grid, int ring, int col)
{
    const double t = grid.thetas[static_cast<std::size_t>(ring)];
    const double p = grid.phis[static_cast<std::size_t>(col)];
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

} // namespace schn
