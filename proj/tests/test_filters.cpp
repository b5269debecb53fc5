#include "schn/error.hpp"
#include "schn/filters.hpp"
#include "schn/random.hpp"
#include "schn/wigner.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace schn;

namespace {

SpectralCoeffs random_real_coeffs(int B, Rng& rng)
{
    SpectralCoeffs c(Bandlimit{B});
    for (int l = 0; l < B; ++l) {
        c.at(l, 0) = rng.normal();
        for (int m = 1; m <= l; ++m) {
            const complex v(rng.normal(), rng.normal());
            c.at(l, m) = v;
            c.at(l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(v);
        }
    }
    return c;
}

double max_abs_diff(const SpectralCoeffs& a, const SpectralCoeffs& b)
{
    REQUIRE(a.B() == b.B());
    double w = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        w = std::max(w, std::abs(a.coeffs[i] - b.coeffs[i]));
    }
    return w;
}

DegreeGains random_gains(int B, Rng& rng)
{
    AnchorFilter f{B, std::vector<double>(static_cast<std::size_t>(std::min(B, 16)))};
    for (auto& a : f.anchors) {
        a = rng.normal();
    }
    return interpolate_gains(f);
}

} // namespace

TEST_CASE("interpolation examples")
{
    const auto ones = interpolate_gains({32, std::vector<double>(16, 1.0)});
    for (double g : ones.gains) {
        CHECK(g == 1.0);
    }

    const double a = 0.5, b = -2.0;
    const auto ramp = interpolate_gains({5, {a, b}});
    const std::vector<double> expect{a, a + (b - a) / 4, a + (b - a) / 2, a + 3 * (b - a) / 4, b};
    for (int l = 0; l < 5; ++l) {
        CHECK(ramp.gains[l] == doctest::Approx(expect[l]).epsilon(1e-15));
    }

    // K = B: every degree is an anchor
    Rng rng(1);
    AnchorFilter global{12, std::vector<double>(12)};
    for (auto& v : global.anchors) {
        v = rng.normal();
    }
    CHECK(interpolate_gains(global).gains == global.anchors);

    // anchors are reproduced exactly where they land on integer degrees
    AnchorFilter f{31, std::vector<double>(16)};
    for (auto& v : f.anchors) {
        v = rng.normal();
    }
    const auto g = interpolate_gains(f);
    for (int i = 0; i < 16; ++i) {
        CHECK(g.gains[2 * i] == f.anchors[i]);
    }

    CHECK_THROWS_AS(interpolate_gains({8, {1.0}}), ConfigError);
    CHECK_THROWS_AS(interpolate_gains({4, std::vector<double>(5, 1.0)}), ConfigError);
}

TEST_CASE("interpolation is linear and its adjoint is the transpose")
{
    Rng rng(4);
    AnchorInterpolation interp(16, 32);
    std::vector<double> a(16), b(16), ga(32), gb(32), gab(32), v(32);
    for (int i = 0; i < 16; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
    }
    for (auto& x : v) {
        x = rng.normal();
    }
    std::vector<double> ab(16);
    for (int i = 0; i < 16; ++i) {
        ab[i] = 2.0 * a[i] - 3.0 * b[i];
    }
    interp.apply(a.data(), ga.data());
    interp.apply(b.data(), gb.data());
    interp.apply(ab.data(), gab.data());
    for (int l = 0; l < 32; ++l) {
        CHECK(std::abs(gab[l] - (2.0 * ga[l] - 3.0 * gb[l])) < 1e-13);
    }
    std::vector<double> adj(16, 0.0);
    interp.accumulate_adjoint(v.data(), adj.data());
    double lhs = 0.0, rhs = 0.0;
    for (int l = 0; l < 32; ++l) {
        lhs += v[l] * ga[l];
    }
    for (int i = 0; i < 16; ++i) {
        rhs += adj[i] * a[i];
    }
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("spectral_conv examples")
{
    Rng rng(2);
    const auto c = random_real_coeffs(8, rng);
    CHECK(max_abs_diff(spectral_conv(c, {std::vector<double>(8, 1.0)}), c) == 0.0);

    DegreeGains dc{std::vector<double>(8, 0.0)};
    dc.gains[0] = 1.0;
    const auto p = spectral_conv(c, dc);
    CHECK(p.at(0, 0) == c.at(0, 0));
    for (std::size_t i = 1; i < p.coeffs.size(); ++i) {
        REQUIRE(p.coeffs[i] == complex(0.0));
    }
    CHECK_THROWS_AS(spectral_conv(c, {std::vector<double>(7, 1.0)}), ShapeError);

    // composition multiplies gains
    const auto g1 = random_gains(8, rng), g2 = random_gains(8, rng);
    DegreeGains prod{std::vector<double>(8)};
    for (int l = 0; l < 8; ++l) {
        prod.gains[l] = g1.gains[l] * g2.gains[l];
    }
    CHECK(max_abs_diff(spectral_conv(spectral_conv(c, g1), g2), spectral_conv(c, prod)) < 1e-12);
}

TEST_CASE("spectral_conv, truncate and zeropad commute with rotation")
{
    Rng rng(10);
    double worst = 0.0;
    int trials = 0;
    for (int B : {4, 8, 16}) {
        for (int t = 0; t < 40; ++t, ++trials) {
            const auto c = random_real_coeffs(B, rng);
            const auto g = random_gains(B, rng);
            const RotationZYZ R = sample_haar(rng);
            worst = std::max(worst, max_abs_diff(rotate_coeffs(spectral_conv(c, g), R),
                                                 spectral_conv(rotate_coeffs(c, R), g)));
            worst = std::max(worst, max_abs_diff(rotate_coeffs(truncate(c, B / 2), R),
                                                 truncate(rotate_coeffs(c, R), B / 2)));
            worst = std::max(worst, max_abs_diff(rotate_coeffs(zeropad(c, 2 * B), R),
                                                 zeropad(rotate_coeffs(c, R), 2 * B)));
        }
    }
    CHECK(trials >= 100);
    CHECK(worst < 1e-10);
}

TEST_CASE("truncate and zeropad")
{
    Rng rng(3);
    SpectralCoeffs constant(Bandlimit{6});
    constant.at(0, 0) = 1.7;
    const auto t = truncate(constant, 1);
    CHECK(t.B() == 1);
    CHECK(t.at(0, 0) == complex(1.7));

    const auto c = random_real_coeffs(7, rng);
    const auto padded = zeropad(c, 14);
    CHECK(padded.B() == 14);
    for (int l = 7; l < 14; ++l) {
        for (int m = -l; m <= l; ++m) {
            REQUIRE(padded.at(l, m) == complex(0.0));
        }
    }
    CHECK(truncate(padded, 7).coeffs == c.coeffs);
}

TEST_CASE("zonal kernel rendering")
{
    const int B = 32;
    const auto g = shared_grid(B);

    DegreeGains dc{std::vector<double>(B, 0.0)};
    dc.gains[0] = 1.0;
    for (double v : render_zonal(dc, g).values) {
        REQUIRE(std::abs(v - 1.0 / (4.0 * std::numbers::pi)) < 1e-15);
    }

    const auto delta = render_zonal({std::vector<double>(B, 1.0)}, g);
    CHECK(delta.at(0, 0) > 10.0 * std::abs(delta.at(B, 0)));

    std::vector<double> anchors(16);
    for (int i = 0; i < 16; ++i) {
        anchors[i] = (1.0 - i / 15.0) * (1.0 - i / 15.0);
    }
    const auto ramp = render_zonal(interpolate_gains({B, anchors}), g);
    // first quarter of the 2B colatitude rings
    for (int j = 1; j < B / 2; ++j) {
        REQUIRE(ramp.at(j, 0) < ramp.at(j - 1, 0));
    }

    // spectral action: analyzing the kernel gives sqrt((2l+1)/(4 pi)) k_l on m = 0
    const auto coeffs = sht_forward(ramp);
    const auto gains = interpolate_gains({B, anchors});
    for (int l = 0; l < B; ++l) {
        REQUIRE(std::abs(coeffs.at(l, 0).real() - std::sqrt((2.0 * l + 1) / (4 * std::numbers::pi)) * gains.gains[l]) <
                1e-10);
    }
    CHECK_THROWS_AS(render_zonal(dc, shared_grid(8)), ShapeError);
}
