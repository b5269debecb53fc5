#include "schn/error.hpp"
#include "schn/random.hpp"
#include "schn/sht.hpp"

#include <boost/math/special_functions/spherical_harmonic.hpp>
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
    double w = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        w = std::max(w, std::abs(a.coeffs[i] - b.coeffs[i]));
    }
    return w;
}

// Extended-precision sectoral value N_l^l P_l^l(x).
long double sectoral_reference(int l, long double x)
{
    const long double log_mag = 0.5L * std::log((2.0L * l + 1.0L) / (4.0L * std::numbers::pi_v<long double>)) +
                                0.5L * std::lgamma(2.0L * l + 1.0L) - l * std::log(2.0L) -
                                std::lgamma(l + 1.0L) + 0.5L * l * std::log(1.0L - x * x);
    return (l % 2 ? -1.0L : 1.0L) * std::exp(log_mag);
}

} // namespace

TEST_CASE("normalized Legendre closed forms")
{
    const auto t = legendre_normalized(2, 1.0);
    CHECK(t[legendre_index(0, 0)] == doctest::Approx(0.2820948).epsilon(1e-7));
    CHECK(t[legendre_index(1, 0)] == doctest::Approx(0.4886025).epsilon(1e-7));
    CHECK(std::abs(t[legendre_index(0, 0)] - 0.5 / std::sqrt(std::numbers::pi)) < 1e-16);
    CHECK(std::abs(t[legendre_index(1, 0)] - std::sqrt(3.0 / (4.0 * std::numbers::pi))) < 1e-15);
    CHECK_THROWS_AS(legendre_normalized(4, 1.5), ConfigError);
}

TEST_CASE("l = m = 40 at x = 0.3 matches extended precision")
{
    const auto t = legendre_normalized(41, 0.3);
    const long double ref = sectoral_reference(40, 0.3L);
    CHECK(std::abs((t[legendre_index(40, 40)] - ref) / ref) < 1e-12L);
}

TEST_CASE("normalized Legendre agrees with an independent implementation")
{
    Rng rng(11);
    const int B = 64;
    for (int trial = 0; trial < 20; ++trial) {
        const double x = rng.uniform(-1.0, 1.0);
        const auto t = legendre_normalized(B, x);
        const double theta = std::acos(x);
        for (int l = 0; l < B; l += 3) {
            for (int m = 0; m <= l; m += 2) {
                const double ref = boost::math::spherical_harmonic_r(l, m, theta, 0.0);
                REQUIRE(std::abs(t[legendre_index(l, m)] - ref) < 1e-11 * std::max(1.0, std::abs(ref)));
            }
        }
    }
}

TEST_CASE("values stay finite up to B = 256")
{
    const auto& g = *shared_grid(256);
    for (double theta : {g.thetas.front(), g.thetas[100], g.thetas.back()}) {
        for (double v : legendre_normalized(256, std::cos(theta))) {
            REQUIRE(std::isfinite(v));
        }
    }
}

TEST_CASE("forward transform of simple signals")
{
    const int B = 8;
    const auto g = shared_grid(B);
    SphericalSignal one(g), cosine(g);
    for (int j = 0; j < 2 * B; ++j) {
        for (int k = 0; k < 2 * B; ++k) {
            one.at(j, k) = 1.0;
            cosine.at(j, k) = std::cos(g->thetas[j]);
        }
    }
    const auto f1 = sht_forward(one);
    const auto fc = sht_forward(cosine);
    CHECK(std::abs(f1.at(0, 0) - complex(2.0 * std::sqrt(std::numbers::pi))) < 1e-12);
    CHECK(f1.at(0, 0).real() == doctest::Approx(3.5449077).epsilon(1e-7));
    CHECK(std::abs(fc.at(1, 0) - complex(std::sqrt(4.0 * std::numbers::pi / 3.0))) < 1e-12);
    CHECK(fc.at(1, 0).real() == doctest::Approx(2.0466534).epsilon(1e-7));
    for (int l = 0; l < B; ++l) {
        for (int m = -l; m <= l; ++m) {
            if (l != 0) {
                REQUIRE(std::abs(f1.at(l, m)) < 1e-12);
            }
            if (!(l == 1 && m == 0)) {
                REQUIRE(std::abs(fc.at(l, m)) < 1e-12);
            }
        }
    }
}

TEST_CASE("inverse transform of simple coefficient sets")
{
    const auto g = shared_grid(4);
    SpectralCoeffs c(Bandlimit{4});
    c.at(0, 0) = 1.0;
    const auto s = sht_inverse(c, g);
    for (double v : s.values) {
        REQUIRE(std::abs(v - 0.5 / std::sqrt(std::numbers::pi)) < 1e-15);
    }
    const auto z = sht_inverse(SpectralCoeffs(Bandlimit{4}), g);
    for (double v : z.values) {
        REQUIRE(v == 0.0);
    }
    CHECK_THROWS_AS(sht_inverse(c, shared_grid(5)), ShapeError);
}

TEST_CASE("round trips are exact for bandlimited data")
{
    Rng rng(21);
    for (int B : {1, 2, 5, 16, 33}) {
        const auto g = shared_grid(B);
        const auto c = random_real_coeffs(B, rng);
        const auto s = sht_inverse(c, g);
        const auto back = sht_forward(s);
        CHECK(max_abs_diff(back, c) < 1e-10);
        CHECK(back.conjugate_symmetry_defect() < 1e-10);
        const auto s2 = sht_inverse(back, g);
        double w = 0.0;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            w = std::max(w, std::abs(s.values[i] - s2.values[i]));
        }
        CHECK(w < 1e-10);
    }
}

TEST_CASE("synthesis matches direct evaluation of harmonics")
{
    Rng rng(4);
    const int B = 6;
    const auto g = shared_grid(B);
    const auto c = random_real_coeffs(B, rng);
    const auto s = sht_inverse(c, g);
    for (int j = 0; j < 2 * B; j += 3) {
        for (int k = 0; k < 2 * B; k += 5) {
            std::complex<double> ref = 0.0;
            for (int l = 0; l < B; ++l) {
                for (int m = -l; m <= l; ++m) {
                    ref += c.at(l, m) * boost::math::spherical_harmonic(l, m, g->thetas[j], g->phis[k]);
                }
            }
            REQUIRE(std::abs(ref.imag()) < 1e-12);
            REQUIRE(std::abs(ref.real() - s.at(j, k)) < 1e-12);
            REQUIRE(std::abs(evaluate_series(c, g->thetas[j], g->phis[k]) - s.at(j, k)) < 1e-12);
        }
    }
}

TEST_CASE("Parseval and linearity")
{
    Rng rng(8);
    for (int B : {4, 8, 16, 32, 64}) {
        const auto g = shared_grid(B);
        const auto s = sht_inverse(random_real_coeffs(B, rng), g);
        const auto t = sht_inverse(random_real_coeffs(B, rng), g);
        SphericalSignal sq(g);
        for (std::size_t i = 0; i < sq.values.size(); ++i) {
            sq.values[i] = s.values[i] * s.values[i];
        }
        const auto f = sht_forward(s);
        double energy = 0.0;
        for (const auto& v : f.coeffs) {
            energy += std::norm(v);
        }
        const double lhs = integrate(sq);
        CHECK(std::abs(lhs - energy) / energy < 1e-9);

        const double a = 0.7, b = -1.3;
        SphericalSignal mix(g);
        for (std::size_t i = 0; i < mix.values.size(); ++i) {
            mix.values[i] = a * s.values[i] + b * t.values[i];
        }
        const auto fm = sht_forward(mix);
        const auto ft = sht_forward(t);
        double w = 0.0;
        for (std::size_t i = 0; i < fm.coeffs.size(); ++i) {
            w = std::max(w, std::abs(fm.coeffs[i] - (a * f.coeffs[i] + b * ft.coeffs[i])));
        }
        CHECK(w < 1e-12);
    }
}

TEST_CASE("unweighted analysis is the adjoint of synthesis")
{
    Rng rng(2);
    const int B = 7;
    const auto& plan = sht_plan(B);
    std::vector<double> x(plan.grid().node_count());
    for (auto& v : x) {
        v = rng.normal();
    }
    const auto c = random_real_coeffs(B, rng);
    const auto half = full_to_half(plan, c);
    std::vector<double> s(x.size());
    plan.synthesize(half, s);
    std::vector<complex> a(plan.half_size());
    plan.analyze_unweighted(x, a);
    // <x, S c> = sum_{l,m} Re(c^l_m conj(A x)^l_m) over all m (m < 0 by symmetry)
    double lhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lhs += x[i] * s[i];
    }
    double rhs = 0.0;
    for (int l = 0; l < B; ++l) {
        for (int m = 0; m <= l; ++m) {
            const double term = (half[plan.half_index(l, m)] * std::conj(a[plan.half_index(l, m)])).real();
            rhs += (m == 0 ? 1.0 : 2.0) * term;
        }
    }
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
}

TEST_CASE("parallel and serial transforms agree exactly")
{
    Rng rng(1);
    const auto& plan = sht_plan(32);
    std::vector<double> x(plan.grid().node_count());
    for (auto& v : x) {
        v = rng.normal();
    }
    std::vector<complex> a(plan.half_size()), b(plan.half_size());
    plan.analyze(x, a, false);
    plan.analyze(x, b, true);
    CHECK(a == b);
    std::vector<double> s1(x.size()), s2(x.size());
    plan.synthesize(a, s1, false);
    plan.synthesize(a, s2, true);
    CHECK(s1 == s2);
}
