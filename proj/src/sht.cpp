#include "schn/sht.hpp"

#include "schn/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace schn {

namespace {

// FFTW planning is not thread-safe; plan execution is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

// Degree-major normalized Legendre recurrence: diagonal seed, then upward in l.
void legendre_into(int B, double x, std::span<double> out)
{
    const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double pmm = 0.5 / std::sqrt(std::numbers::pi);
    for (int m = 0; m < B; ++m) {
        if (m > 0) {
            pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
        }
        out[legendre_index(m, m)] = pmm;
        if (m + 1 < B) {
            out[legendre_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
        }
        for (int l = m + 2; l < B; ++l) {
            const double ll = static_cast<double>(l) * l;
            const double mm = static_cast<double>(m) * m;
            const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
            const double lm1 = static_cast<double>(l - 1) * (l - 1);
            const double b = std::sqrt((lm1 - mm) / (4.0 * lm1 - 1.0));
            out[legendre_index(l, m)] = a * (x * out[legendre_index(l - 1, m)] - b * out[legendre_index(l - 2, m)]);
        }
    }
}

} // namespace

double SpectralCoeffs::conjugate_symmetry_defect() const
{
    double worst = 0.0;
    for (int l = 0; l < B(); ++l) {
        for (int m = 0; m <= l; ++m) {
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(at(l, -m) - sign * std::conj(at(l, m))));
        }
    }
    return worst;
}

std::vector<double> legendre_normalized(int B, double x)
{
    Bandlimit b(B);
    if (!(std::abs(x) <= 1.0)) {
        throw ConfigError("Legendre argument must satisfy |x| <= 1");
    }
    std::vector<double> out(legendre_index(b.value(), 0));
    legendre_into(B, x, out);
    return out;
}

struct ShtPlan::RingFft {
    int n;
    fftw_plan forward;
    fftw_plan backward;

    explicit RingFft(int n_) : n(n_)
    {
        // plans are created on scratch buffers and executed on caller arrays
        std::vector<double> real(static_cast<std::size_t>(n));
        std::vector<fftw_complex> spec(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard lock(fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward = fftw_plan_dft_r2c_1d(n, real.data(), spec.data(), flags);
        backward = fftw_plan_dft_c2r_1d(n, spec.data(), real.data(), flags | FFTW_DESTROY_INPUT);
        if (!forward || !backward) {
            throw InternalError("FFTW planning failed for length " + std::to_string(n));
        }
    }
    RingFft(const RingFft&) = delete;
    RingFft& operator=(const RingFft&) = delete;
    ~RingFft()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
};

ShtPlan::ShtPlan(int B) : B_(Bandlimit(B).value()), N_(2 * B), grid_(shared_grid(B))
{
    m_offset_.resize(static_cast<std::size_t>(B_) + 1);
    std::size_t off = 0;
    for (int m = 0; m <= B_; ++m) {
        m_offset_[static_cast<std::size_t>(m)] = off;
        off += static_cast<std::size_t>(B_ - m);
    }
    half_size_ = m_offset_[static_cast<std::size_t>(B_)];
    half_degree_.resize(half_size_);
    half_order_.resize(half_size_);
    for (int m = 0; m < B_; ++m) {
        for (int l = m; l < B_; ++l) {
            half_degree_[half_index(l, m)] = l;
            half_order_[half_index(l, m)] = m;
        }
    }

    legendre_.resize(half_size_ * static_cast<std::size_t>(B_));
    std::vector<double> tmp(legendre_index(B_, 0));
    for (int p = 0; p < B_; ++p) {
        legendre_into(B_, std::cos(grid_->thetas[static_cast<std::size_t>(p)]), tmp);
        double* row = legendre_.data() + static_cast<std::size_t>(p) * half_size_;
        for (int m = 0; m < B_; ++m) {
            for (int l = m; l < B_; ++l) {
                row[half_index(l, m)] = tmp[legendre_index(l, m)];
            }
        }
    }

    fft_ = std::make_shared<const RingFft>(N_);
    ring_quadrature_.resize(static_cast<std::size_t>(N_));
    for (int j = 0; j < N_; ++j) {
        ring_quadrature_[static_cast<std::size_t>(j)] = grid_->cell_area(j);
    }
}

void ShtPlan::analyze(std::span<const double> signal, std::span<complex> half, bool parallel) const
{
    analyze_impl(signal, half, true, parallel);
}

void ShtPlan::analyze_unweighted(std::span<const double> signal, std::span<complex> half, bool parallel) const
{
    analyze_impl(signal, half, false, parallel);
}

void ShtPlan::analyze_impl(std::span<const double> signal, std::span<complex> half, bool weighted,
                           bool parallel) const
{
    const int N = N_;
    const int B = B_;
    // Ring Fourier sums F[j][m] = q_j sum_k x_jk e^{-i m phi_k}.
    std::vector<double> fr(static_cast<std::size_t>(N) * B);
    std::vector<double> fi(static_cast<std::size_t>(N) * B);
    const std::size_t width = static_cast<std::size_t>(N / 2 + 1);
    std::vector<fftw_complex> buffer(static_cast<std::size_t>(N) * width);
#pragma omp parallel for schedule(static) if (parallel)
    for (int j = 0; j < N; ++j) {
        fftw_complex* spec = buffer.data() + static_cast<std::size_t>(j) * width;
        // r2c does not modify its input
        fftw_execute_dft_r2c(fft_->forward, const_cast<double*>(signal.data() + static_cast<std::size_t>(j) * N),
                             spec);
        const double q = weighted ? ring_quadrature_[static_cast<std::size_t>(j)] : 1.0;
        for (int m = 0; m < B; ++m) {
            fr[static_cast<std::size_t>(j) * B + m] = q * spec[static_cast<std::size_t>(m)][0];
            fi[static_cast<std::size_t>(j) * B + m] = q * spec[static_cast<std::size_t>(m)][1];
        }
    }

    // Legendre contraction, pairing mirror rings: P(-x) = (-1)^{l+m} P(x).
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int m = 0; m < B; ++m) {
        const std::size_t off = m_offset_[static_cast<std::size_t>(m)];
        const int len = B - m;
        std::vector<double> acc_r(static_cast<std::size_t>(len), 0.0);
        std::vector<double> acc_i(static_cast<std::size_t>(len), 0.0);
        for (int p = 0; p < B; ++p) {
            const std::size_t a = static_cast<std::size_t>(p) * B + m;
            const std::size_t b = static_cast<std::size_t>(N - 1 - p) * B + m;
            const double er = fr[a] + fr[b];
            const double ei = fi[a] + fi[b];
            const double orr = fr[a] - fr[b];
            const double oi = fi[a] - fi[b];
            const double* P = legendre_.data() + static_cast<std::size_t>(p) * half_size_ + off;
            for (int t = 0; t < len; t += 2) {
                acc_r[static_cast<std::size_t>(t)] += er * P[t];
                acc_i[static_cast<std::size_t>(t)] += ei * P[t];
            }
            for (int t = 1; t < len; t += 2) {
                acc_r[static_cast<std::size_t>(t)] += orr * P[t];
                acc_i[static_cast<std::size_t>(t)] += oi * P[t];
            }
        }
        for (int t = 0; t < len; ++t) {
            half[off + static_cast<std::size_t>(t)] = complex(acc_r[static_cast<std::size_t>(t)],
                                                              acc_i[static_cast<std::size_t>(t)]);
        }
    }
}

void ShtPlan::synthesize(std::span<const complex> half, std::span<double> signal, bool parallel) const
{
    const int N = N_;
    const int B = B_;
    std::vector<double> gr(static_cast<std::size_t>(N) * B);
    std::vector<double> gi(static_cast<std::size_t>(N) * B);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int m = 0; m < B; ++m) {
        const std::size_t off = m_offset_[static_cast<std::size_t>(m)];
        const int len = B - m;
        for (int p = 0; p < B; ++p) {
            const double* P = legendre_.data() + static_cast<std::size_t>(p) * half_size_ + off;
            double er = 0.0, ei = 0.0, orr = 0.0, oi = 0.0;
            for (int t = 0; t < len; t += 2) {
                er += half[off + static_cast<std::size_t>(t)].real() * P[t];
                ei += half[off + static_cast<std::size_t>(t)].imag() * P[t];
            }
            for (int t = 1; t < len; t += 2) {
                orr += half[off + static_cast<std::size_t>(t)].real() * P[t];
                oi += half[off + static_cast<std::size_t>(t)].imag() * P[t];
            }
            const std::size_t a = static_cast<std::size_t>(p) * B + m;
            const std::size_t b = static_cast<std::size_t>(N - 1 - p) * B + m;
            gr[a] = er + orr;
            gi[a] = ei + oi;
            gr[b] = er - orr;
            gi[b] = ei - oi;
        }
    }

    const std::size_t width = static_cast<std::size_t>(N / 2 + 1);
    std::vector<fftw_complex> buffer(static_cast<std::size_t>(N) * width);
    std::memset(buffer.data(), 0, buffer.size() * sizeof(fftw_complex));
#pragma omp parallel for schedule(static) if (parallel)
    for (int j = 0; j < N; ++j) {
        fftw_complex* spec = buffer.data() + static_cast<std::size_t>(j) * width;
        const double* g_r = gr.data() + static_cast<std::size_t>(j) * B;
        const double* g_i = gi.data() + static_cast<std::size_t>(j) * B;
        spec[0][0] = g_r[0];
        for (int m = 1; m < B; ++m) {
            spec[static_cast<std::size_t>(m)][0] = g_r[m];
            spec[static_cast<std::size_t>(m)][1] = g_i[m];
        }
        fftw_execute_dft_c2r(fft_->backward, spec, signal.data() + static_cast<std::size_t>(j) * N);
    }
}

const ShtPlan& sht_plan(int B)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<ShtPlan>> cache;
    Bandlimit b(B);
    std::lock_guard lock(mutex);
    auto& slot = cache[b.value()];
    if (!slot) {
        slot = std::make_unique<ShtPlan>(b.value());
    }
    return *slot;
}

SpectralCoeffs half_to_full(const ShtPlan& plan, std::span<const complex> half)
{
    SpectralCoeffs c(Bandlimit(plan.B()));
    for (int l = 0; l < plan.B(); ++l) {
        c.at(l, 0) = half[plan.half_index(l, 0)];
        for (int m = 1; m <= l; ++m) {
            const complex v = half[plan.half_index(l, m)];
            c.at(l, m) = v;
            c.at(l, -m) = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(v);
        }
    }
    return c;
}

std::vector<complex> full_to_half(const ShtPlan& plan, const SpectralCoeffs& c)
{
    if (c.B() != plan.B()) {
        throw ShapeError("coefficient bandlimit " + std::to_string(c.B()) + " does not match plan bandlimit " +
                         std::to_string(plan.B()));
    }
    std::vector<complex> half(plan.half_size());
    for (int l = 0; l < plan.B(); ++l) {
        for (int m = 0; m <= l; ++m) {
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            half[plan.half_index(l, m)] = 0.5 * (c.at(l, m) + sign * std::conj(c.at(l, -m)));
        }
    }
    return half;
}

SpectralCoeffs sht_forward(const SphericalSignal& s)
{
    const ShtPlan& plan = sht_plan(s.B());
    std::vector<complex> half(plan.half_size());
    plan.analyze(s.values, half);
    return half_to_full(plan, half);
}

SphericalSignal sht_inverse(const SpectralCoeffs& c, std::shared_ptr<const SphericalGrid> grid)
{
    if (c.B() != grid->B()) {
        throw ShapeError("coefficient bandlimit " + std::to_string(c.B()) + " does not match grid bandlimit " +
                         std::to_string(grid->B()));
    }
    const ShtPlan& plan = sht_plan(c.B());
    SphericalSignal out(std::move(grid));
    plan.synthesize(full_to_half(plan, c), out.values);
    return out;
}

double evaluate_series(const SpectralCoeffs& c, double theta, double phi)
{
    const auto P = legendre_normalized(c.B(), std::cos(theta));
    double total = 0.0;
    for (int l = 0; l < c.B(); ++l) {
        for (int m = -l; m <= l; ++m) {
            const int am = std::abs(m);
            double p = P[legendre_index(l, am)];
            if (m < 0 && am % 2 == 1) {
                p = -p;
            }
            total += (c.at(l, m) * std::polar(p, m * phi)).real();
        }
    }
    return total;
}

} // namespace schn
