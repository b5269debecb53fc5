#include "schn/wigner.hpp"

#include "schn/error.hpp"
#include "schn/random.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

namespace schn {

void RotationZYZ::validate() const
{
    if (!(beta >= 0.0 && beta <= std::numbers::pi) || !std::isfinite(alpha) || !std::isfinite(gamma)) {
        throw ConfigError("rotation needs finite angles with beta in [0, pi]");
    }
}

RotationZYZ RotationZYZ::inverse() const
{
    if (is_identity()) {
        return {};
    }
    // Ry(-b) = Rz(pi) Ry(b) Rz(-pi)
    return {std::numbers::pi - gamma, beta, -std::numbers::pi - alpha};
}

namespace {

Mat3 rz(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

Mat3 ry(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}};
}

Mat3 mul(const Mat3& a, const Mat3& b)
{
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    return r;
}

// d^J_{row col} at J = max(|row|, |col|), where the explicit sum has a single term.
double wigner_seed(int J, int row, int col, double beta)
{
    const double c = std::cos(beta / 2.0);
    const double s = std::sin(beta / 2.0);
    const int k_lo = std::max(0, col - row);
    const int k_hi = std::min(J + col, J - row);
    double total = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const int pc = 2 * J + col - row - 2 * k;
        const int ps = row - col + 2 * k;
        if ((pc > 0 && c == 0.0) || (ps > 0 && s == 0.0)) {
            continue;
        }
        double log_mag = 0.5 * (std::lgamma(J + row + 1.0) + std::lgamma(J - row + 1.0) + std::lgamma(J + col + 1.0) +
                                std::lgamma(J - col + 1.0)) -
                         std::lgamma(J + col - k + 1.0) - std::lgamma(k + 1.0) - std::lgamma(row - col + k + 1.0) -
                         std::lgamma(J - row - k + 1.0);
        if (pc > 0) {
            log_mag += pc * std::log(std::abs(c));
        }
        if (ps > 0) {
            log_mag += ps * std::log(std::abs(s));
        }
        double term = std::exp(log_mag);
        if ((row - col + k) % 2 != 0) {
            term = -term;
        }
        if (pc % 2 != 0 && c < 0.0) {
            term = -term;
        }
        if (ps % 2 != 0 && s < 0.0) {
            term = -term;
        }
        total += term;
    }
    return total;
}

} // namespace

Mat3 rotation_matrix(const RotationZYZ& r)
{
    return mul(mul(rz(r.alpha), ry(r.beta)), rz(r.gamma));
}

Vec3 apply(const Mat3& m, const Vec3& v)
{
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

RotationZYZ from_matrix(const Mat3& m)
{
    RotationZYZ r;
    const double c = std::clamp(m[2][2], -1.0, 1.0);
    const double s = std::hypot(m[0][2], m[1][2]);
    r.beta = std::atan2(s, c);
    if (s > 1e-12) {
        r.alpha = std::atan2(m[1][2], m[0][2]);
        r.gamma = std::atan2(m[2][1], -m[2][0]);
    } else if (c > 0.0) {
        r.beta = 0.0;
        r.alpha = std::atan2(m[1][0], m[0][0]);
    } else {
        r.beta = std::numbers::pi;
        r.alpha = std::atan2(-m[1][0], -m[0][0]);
    }
    return r;
}

RotationZYZ compose(const RotationZYZ& a, const RotationZYZ& b)
{
    if (a.is_identity()) {
        return b;
    }
    if (b.is_identity()) {
        return a;
    }
    return from_matrix(mul(rotation_matrix(a), rotation_matrix(b)));
}

RotationZYZ sample_haar(Rng& rng)
{
    RotationZYZ r;
    r.alpha = rng.uniform(0.0, 2.0 * std::numbers::pi);
    r.beta = std::acos(std::clamp(rng.uniform(-1.0, 1.0), -1.0, 1.0));
    r.gamma = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return r;
}

std::vector<WignerDBlock> wigner_d_all(int L, double beta)
{
    std::vector<WignerDBlock> d(static_cast<std::size_t>(std::max(L, 0)));
    for (int l = 0; l < L; ++l) {
        d[static_cast<std::size_t>(l)].l = l;
        d[static_cast<std::size_t>(l)].entries.assign(static_cast<std::size_t>(2 * l + 1) * (2 * l + 1), 0.0);
    }
    if (L <= 0) {
        return d;
    }
    if (beta == 0.0) {
        for (auto& block : d) {
            for (int m = -block.l; m <= block.l; ++m) {
                block(m, m) = 1.0;
            }
        }
        return d;
    }
    const double cb = std::cos(beta);
    for (int m = -(L - 1); m <= L - 1; ++m) {
        for (int mp = -(L - 1); mp <= L - 1; ++mp) {
            const int J = std::max(std::abs(m), std::abs(mp));
            double prev = 0.0;
            double cur = wigner_seed(J, m, mp, beta);
            d[static_cast<std::size_t>(J)](m, mp) = cur;
            const double mm = static_cast<double>(m) * m;
            const double pp = static_cast<double>(mp) * mp;
            for (int l = J; l + 1 < L; ++l) {
                const double lf = l;
                const double l1 = lf + 1.0;
                const double lead = l1 * (2.0 * lf + 1.0) / std::sqrt((l1 * l1 - mm) * (l1 * l1 - pp));
                const double mix = (l == 0) ? 0.0 : static_cast<double>(m) * mp / (lf * l1);
                double next = (cb - mix) * cur;
                if (l > J) {
                    next -= std::sqrt((lf * lf - mm) * (lf * lf - pp)) / (lf * (2.0 * lf + 1.0)) * prev;
                }
                next *= lead;
                prev = cur;
                cur = next;
                d[static_cast<std::size_t>(l + 1)](m, mp) = cur;
            }
        }
    }
    return d;
}

WignerDBlock wigner_d(int l, double beta)
{
    if (l < 0) {
        throw ConfigError("Wigner degree must be non-negative");
    }
    if (!(beta >= 0.0 && beta <= std::numbers::pi)) {
        throw ConfigError("Wigner angle beta must lie in [0, pi]");
    }
    auto all = wigner_d_all(l + 1, beta);
    return std::move(all.back());
}

namespace {

SpectralCoeffs rotate_with_blocks(const SpectralCoeffs& c, const RotationZYZ& r,
                                  const std::vector<WignerDBlock>& d)
{
    SpectralCoeffs out(c.bandlimit);
    const int B = c.B();
    std::vector<complex> shifted(static_cast<std::size_t>(2 * B - 1));
    for (int l = 0; l < B; ++l) {
        const WignerDBlock& block = d[static_cast<std::size_t>(l)];
        for (int mp = -l; mp <= l; ++mp) {
            shifted[static_cast<std::size_t>(mp + l)] = std::polar(1.0, -mp * r.gamma) * c.at(l, mp);
        }
        for (int m = -l; m <= l; ++m) {
            complex acc = 0.0;
            for (int mp = -l; mp <= l; ++mp) {
                acc += block(m, mp) * shifted[static_cast<std::size_t>(mp + l)];
            }
            out.at(l, m) = std::polar(1.0, -m * r.alpha) * acc;
        }
    }
    return out;
}

} // namespace

SpectralCoeffs rotate_coeffs(const SpectralCoeffs& c, const RotationZYZ& r)
{
    r.validate();
    return rotate_with_blocks(c, r, wigner_d_all(c.B(), r.beta));
}

SphericalSignal rotate_signal(const SphericalSignal& s, const RotationZYZ& r)
{
    return sht_inverse(rotate_coeffs(sht_forward(s), r), s.grid);
}

FeatureMap rotate_feature_map(const FeatureMap& f, const RotationZYZ& r)
{
    r.validate();
    const ShtPlan& plan = sht_plan(f.B());
    const auto d = wigner_d_all(f.B(), r.beta);
    FeatureMap out(f.grid, f.channels);
    std::vector<complex> half(plan.half_size());
    for (int c = 0; c < f.channels; ++c) {
        plan.analyze(f.channel(c), half);
        const SpectralCoeffs rotated = rotate_with_blocks(half_to_full(plan, half), r, d);
        plan.synthesize(full_to_half(plan, rotated), out.channel(c));
    }
    return out;
}

std::vector<std::size_t> nearest_node_map(const SphericalGrid& grid, const RotationZYZ& r)
{
    const Mat3 m = rotation_matrix(r);
    // R^{-1} = R^T
    const Mat3 inv{{{m[0][0], m[1][0], m[2][0]}, {m[0][1], m[1][1], m[2][1]}, {m[0][2], m[1][2], m[2][2]}}};
    const int B = grid.B();
    const int side = 2 * B;
    std::vector<std::size_t> src(grid.node_count());
    for (int j = 0; j < side; ++j) {
        for (int k = 0; k < side; ++k) {
            const Vec3 v = schn::apply(inv, node_direction(grid, j, k));
            const double theta = std::acos(std::clamp(v.z, -1.0, 1.0));
            double phi = std::atan2(v.y, v.x);
            if (phi < 0.0) {
                phi += 2.0 * std::numbers::pi;
            }
            // theta_j = pi (2j + 1) / (4B), phi_k = 2 pi k / (2B)
            const int jj = std::clamp(static_cast<int>(std::floor(theta * 2.0 * B / std::numbers::pi)), 0, side - 1);
            const int kk = static_cast<int>(std::lround(phi * side / (2.0 * std::numbers::pi))) % side;
            src[static_cast<std::size_t>(j) * side + k] = static_cast<std::size_t>(jj) * side + kk;
        }
    }
    return src;
}

LabelMap rotate_labels(const LabelMap& labels, const RotationZYZ& r)
{
    if (r.is_identity()) {
        return labels;
    }
    const auto src = nearest_node_map(*labels.grid, r);
    LabelMap out(labels.grid, labels.num_classes);
    for (std::size_t p = 0; p < src.size(); ++p) {
        out.labels[p] = labels.labels[src[p]];
    }
    return out;
}

} // namespace schn
