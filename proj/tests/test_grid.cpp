#include "schn/error.hpp"
#include "schn/grid.hpp"

#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace schn;

namespace {

double legendre_p(int l, double x)
{
    double p0 = 1.0, p1 = x;
    if (l == 0) {
        return p0;
    }
    for (int k = 2; k <= l; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

} // namespace

TEST_CASE("bandlimit rejects zero")
{
    CHECK_THROWS_AS(Bandlimit(0), ConfigError);
    CHECK_THROWS_AS(make_grid(Bandlimit(0)), ConfigError);
    CHECK(Bandlimit(128).resolution() == 256);
}

TEST_CASE("node formulas")
{
    const auto g1 = make_grid(Bandlimit(1));
    REQUIRE(g1.thetas.size() == 2);
    CHECK(g1.thetas[0] == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
    CHECK(g1.thetas[1] == doctest::Approx(3 * std::numbers::pi / 4).epsilon(1e-15));
    CHECK(g1.phis[0] == 0.0);
    CHECK(g1.phis[1] == doctest::Approx(std::numbers::pi).epsilon(1e-15));
    // hand solution of w0 + w1 = 2, (w0 - w1) sqrt(2)/2 = 0
    CHECK(std::abs(g1.weights[0] - 1.0) < 1e-14);
    CHECK(std::abs(g1.weights[1] - 1.0) < 1e-14);

    const auto g2 = make_grid(Bandlimit(2));
    for (int j = 0; j < 4; ++j) {
        CHECK(g2.thetas[j] == doctest::Approx((2 * j + 1) * std::numbers::pi / 8).epsilon(1e-15));
    }

    const auto g128 = make_grid(Bandlimit(128));
    CHECK(g128.thetas.size() == 256);
    CHECK(g128.phis.size() == 256);
}

TEST_CASE("weights are positive, sum to two and are exact for every bandlimit up to 256")
{
    for (int B = 1; B <= 256; ++B) {
        const auto g = make_grid(Bandlimit(B));
        double sum = 0.0;
        for (double w : g.weights) {
            REQUIRE(w > 0.0);
            sum += w;
        }
        REQUIRE(std::abs(sum - 2.0) < 1e-12);
        for (std::size_t j = 1; j < g.thetas.size(); ++j) {
            REQUIRE(g.thetas[j] > g.thetas[j - 1]);
        }
        if (B <= 64 || B % 32 == 0) {
            for (int l = 1; l < 2 * B; ++l) {
                double s = 0.0;
                for (int j = 0; j < 2 * B; ++j) {
                    s += g.weights[j] * legendre_p(l, std::cos(g.thetas[j]));
                }
                REQUIRE(std::abs(s) < 1e-10);
            }
        }
    }
}

TEST_CASE("B=4 exactness at l=3")
{
    const auto g = make_grid(Bandlimit(4));
    double s = 0.0;
    for (int j = 0; j < 8; ++j) {
        s += g.weights[j] * legendre_p(3, std::cos(g.thetas[j]));
    }
    CHECK(std::abs(s) < 1e-10);
}

TEST_CASE("closed-form weights agree with the linear solve")
{
    for (int B : {1, 2, 3, 7, 16, 33, 64, 128}) {
        const auto g = make_grid(Bandlimit(B));
        const auto w = closed_form_weights(B);
        for (std::size_t j = 0; j < w.size(); ++j) {
            REQUIRE(std::abs(w[j] - g.weights[j]) < 1e-12);
        }
    }
}

TEST_CASE("quadrature rejects bad nodes")
{
    std::vector<double> nodes{0.5, 0.5};
    CHECK_THROWS(solve_quadrature(nodes));
    std::vector<double> outside{0.0, 1.0};
    CHECK_THROWS_AS(solve_quadrature(outside), ConfigError);
}

TEST_CASE("integrate basic functions")
{
    const auto g = shared_grid(8);
    SphericalSignal one(g);
    SphericalSignal cosine(g);
    SphericalSignal y00sq(g);
    for (int j = 0; j < 16; ++j) {
        for (int k = 0; k < 16; ++k) {
            one.at(j, k) = 1.0;
            cosine.at(j, k) = std::cos(g->thetas[j]);
            y00sq.at(j, k) = 1.0 / (4.0 * std::numbers::pi);
        }
    }
    CHECK(integrate(one) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-13));
    CHECK(std::abs(integrate(cosine)) < 1e-13);
    CHECK(integrate(y00sq) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("quadrature reproduces harmonic orthonormality for B <= 8")
{
    for (int B : {1, 2, 4, 8}) {
        const auto g = shared_grid(B);
        const int n = 2 * B;
        // tabulate every Y_l^m on the grid once (boost is the oracle here)
        std::vector<std::vector<std::complex<double>>> Y;
        std::vector<std::pair<int, int>> lm;
        for (int l = 0; l < B; ++l) {
            for (int m = -l; m <= l; ++m) {
                std::vector<std::complex<double>> v(static_cast<std::size_t>(n) * n);
                for (int j = 0; j < n; ++j) {
                    for (int k = 0; k < n; ++k) {
                        v[static_cast<std::size_t>(j) * n + k] =
                            boost::math::spherical_harmonic(l, m, g->thetas[j], g->phis[k]);
                    }
                }
                Y.push_back(std::move(v));
                lm.emplace_back(l, m);
            }
        }
        double worst = 0.0;
        std::vector<double> re(static_cast<std::size_t>(n) * n), im(re.size());
        for (std::size_t a = 0; a < Y.size(); ++a) {
            for (std::size_t b = 0; b < Y.size(); ++b) {
                for (std::size_t i = 0; i < re.size(); ++i) {
                    const auto p = Y[a][i] * std::conj(Y[b][i]);
                    re[i] = p.real();
                    im[i] = p.imag();
                }
                const double expect = (a == b) ? 1.0 : 0.0;
                worst = std::max(worst, std::abs(integrate(*g, re) - expect));
                worst = std::max(worst, std::abs(integrate(*g, im)));
            }
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("label validation")
{
    LabelMap m(shared_grid(2), 3);
    m.validate();
    m.labels[5] = 3;
    CHECK_THROWS_AS(m.validate(), ConfigError);
}
