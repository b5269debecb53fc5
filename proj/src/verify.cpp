#include "schn/verify.hpp"

#include "schn/nn/layers.hpp"
#include "schn/nn/model.hpp"
#include "schn/random.hpp"
#include "schn/sht.hpp"
#include "schn/train/optim.hpp"
#include "schn/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>

namespace schn::verify {

namespace {

using nn::Mode;
using nn::Parameter;
using nn::Tape;
using nn::Tensor;
using nn::VarId;
using Graph = std::function<VarId(Tape&, VarId)>;

SpectralCoeffs random_real_coeffs(int B, Rng& rng)
{
    SpectralCoeffs c{Bandlimit(B)};
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

Tensor random_tensor(int n, int c, int B, Rng& rng)
{
    Tensor t(n, c, B);
    for (auto& v : t.data) {
        v = rng.normal();
    }
    return t;
}

Tensor bandlimited_tensor(int n, int c, int B, Rng& rng)
{
    Tensor t(n, c, B);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const auto s = sht_inverse(random_real_coeffs(B, rng), shared_grid(B));
            std::copy(s.values.begin(), s.values.end(), t.map(i, ch));
        }
    }
    return t;
}

void randomize(Parameter& p, Rng& rng, double sigma = 1.0)
{
    for (auto& v : p.value) {
        v = rng.normal(0.0, sigma);
    }
}

Tensor run(const Graph& g, const Tensor& x)
{
    Tape t(false);
    return t.value(g(t, t.input(x)));
}

Tensor rotate_batch(const Tensor& t, const RotationZYZ& r)
{
    Tensor out(t.n, t.c, t.B);
    for (int n = 0; n < t.n; ++n) {
        const FeatureMap f = rotate_feature_map(nn::unstack(t, n), r);
        std::copy(f.values.begin(), f.values.end(), out.map(n, 0));
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Relative error of the tape gradient of <r, graph(x)> over sampled entries
// of the input and of every parameter.
double primitive_gradient_error(const Graph& graph, Tensor x, const std::vector<Parameter*>& params, Rng& rng)
{
    for (auto* p : params) {
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
    Tape tape;
    const VarId in = tape.input(x, true);
    const VarId out = graph(tape, in);
    const Tensor r = random_tensor(tape.value(out).n, tape.value(out).c, tape.value(out).B, rng);
    tape.backward(out, r);
    const Tensor dx = tape.grad(in);

    const double eps = 1e-5;
    const auto loss = [&] { return dot(run(graph, x).data, r.data); };
    double worst = 0.0;
    const auto compare = [&](std::vector<double>& values, const std::vector<double>& analytic) {
        double err = 0.0, scale = 0.0;
        const std::size_t stride = std::max<std::size_t>(1, values.size() / 48);
        for (std::size_t i = 0; i < values.size(); i += stride) {
            const double keep = values[i];
            values[i] = keep + eps;
            const double up = loss();
            values[i] = keep - eps;
            const double down = loss();
            values[i] = keep;
            const double numeric = (up - down) / (2 * eps);
            err = std::max(err, std::abs(numeric - analytic[i]));
            scale = std::max(scale, std::abs(numeric));
        }
        worst = std::max(worst, scale > 0.0 ? err / scale : err);
    };
    compare(x.data, dx.data);
    for (auto* p : params) {
        const std::vector<double> analytic = p->grad;
        compare(p->value, analytic);
    }
    return worst;
}

// Inputs nudged away from the relu kink so differences stay one-sided.
Tensor away_from_zero(Tensor t)
{
    for (auto& v : t.data) {
        v += v > 0 ? 0.1 : -0.1;
    }
    return t;
}

} // namespace

std::string CheckResult::format() const
{
    char buf[64];
    std::string out = suite + " " + name;
    std::snprintf(buf, sizeof buf, " measured=%.3e tolerance=%.1e ", measured, tolerance);
    return out + buf + (passed() ? "PASS" : "FAIL");
}

std::vector<CheckResult> sht_suite(const std::vector<int>& bandlimits, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<CheckResult> out;
    for (int B : bandlimits) {
        const auto grid = shared_grid(B);
        const SpectralCoeffs c = random_real_coeffs(B, rng);
        const SphericalSignal s = sht_inverse(c, grid);
        const SpectralCoeffs back = sht_forward(s);
        const SphericalSignal s2 = sht_inverse(back, grid);
        double round_trip = 0.0;
        for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
            round_trip = std::max(round_trip, std::abs(back.coeffs[i] - c.coeffs[i]));
        }
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            round_trip = std::max(round_trip, std::abs(s2.values[i] - s.values[i]));
        }
        SphericalSignal sq(grid);
        for (std::size_t i = 0; i < sq.values.size(); ++i) {
            sq.values[i] = s.values[i] * s.values[i];
        }
        double energy = 0.0;
        for (const auto& v : c.coeffs) {
            energy += std::norm(v);
        }
        const std::string b = "B=" + std::to_string(B);
        out.push_back({"sht", "round_trip_" + b, round_trip, 1e-9});
        out.push_back({"sht", "parseval_" + b, std::abs(integrate(sq) - energy) / energy, 1e-9});
    }
    return out;
}

std::vector<CheckResult> rotation_suite(std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<CheckResult> out;

    const int B = 8;
    const auto grid = shared_grid(B);
    double analytic = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const SpectralCoeffs c = random_real_coeffs(B, rng);
        const RotationZYZ r = sample_haar(rng);
        const SphericalSignal rotated = rotate_signal(sht_inverse(c, grid), r);
        const Mat3 inv = rotation_matrix(r.inverse());
        for (int j = 0; j < 2 * B; ++j) {
            for (int k = 0; k < 2 * B; ++k) {
                const Vec3 y = schn::apply(inv, node_direction(*grid, j, k));
                const double theta = std::acos(std::clamp(y.z, -1.0, 1.0));
                analytic = std::max(analytic, std::abs(rotated.at(j, k) - evaluate_series(c, theta, std::atan2(y.y, y.x))));
            }
        }
    }
    out.push_back({"rotation", "rotate_signal_vs_series_B=8", analytic, 1e-8});

    const int L = 33;
    double ortho = 0.0, composition = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        const double b1 = rng.uniform(0.0, std::numbers::pi / 2), b2 = rng.uniform(0.0, std::numbers::pi / 2);
        const auto d1 = wigner_d_all(L, b1), d2 = wigner_d_all(L, b2), d12 = wigner_d_all(L, b1 + b2);
        for (int l = 0; l < L; ++l) {
            const int n = 2 * l + 1;
            const auto& a = d1[std::size_t(l)].entries;
            const auto& b = d2[std::size_t(l)].entries;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double gram = 0.0, prod = 0.0;
                    for (int k = 0; k < n; ++k) {
                        gram += a[std::size_t(i * n + k)] * a[std::size_t(j * n + k)];
                        prod += a[std::size_t(i * n + k)] * b[std::size_t(k * n + j)];
                    }
                    ortho = std::max(ortho, std::abs(gram - (i == j ? 1.0 : 0.0)));
                    composition = std::max(composition, std::abs(prod - d12[std::size_t(l)].entries[std::size_t(i * n + j)]));
                }
            }
        }
    }
    out.push_back({"rotation", "wigner_d_orthogonality_l<=32", ortho, 1e-10});
    out.push_back({"rotation", "wigner_d_same_axis_composition_l<=32", composition, 1e-9});
    return out;
}

std::vector<CheckResult> equivariance_suite(int trials, std::uint64_t seed)
{
    Rng rng(seed);
    double conv = 0.0, pw = 0.0, trunc = 0.0, pad = 0.0, norm = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const int B = 4 << (trial % 3);
        const RotationZYZ r = sample_haar(rng);
        const Tensor x = bandlimited_tensor(2, 2, B, rng);
        const Tensor xr = rotate_batch(x, r);

        nn::ParameterSet ps;
        auto& anchors = ps.add("a", {2, 3, std::size_t(std::min(B, 4))});
        auto& bias = ps.add("b", {3});
        auto& weight = ps.add("w", {3, 2});
        auto& scale = ps.add("s", {2});
        auto& shift = ps.add("t", {2});
        auto& mean = ps.add("m", {2}, false);
        auto& var = ps.add("v", {2}, false);
        for (auto* p : {&anchors, &bias, &weight, &scale, &shift}) {
            randomize(*p, rng);
        }
        var.value.assign(2, 1.0);
        const nn::NormParams np{&scale, &shift, &mean, &var};

        const Graph g_conv = [&](Tape& t, VarId v) { return nn::sph_conv(t, v, anchors, bias); };
        const Graph g_pw = [&](Tape& t, VarId v) { return nn::pointwise_conv(t, v, weight, bias); };
        const Graph g_trunc = [B](Tape& t, VarId v) { return nn::spectral_resample(t, v, B / 2); };
        const Graph g_pad = [B](Tape& t, VarId v) { return nn::spectral_resample(t, v, 2 * B); };
        const Graph g_norm = [&](Tape& t, VarId v) { return nn::weighted_norm(t, v, np, Mode::train); };

        conv = std::max(conv, max_abs_diff(rotate_batch(run(g_conv, x), r), run(g_conv, xr)));
        pw = std::max(pw, max_abs_diff(rotate_batch(run(g_pw, x), r), run(g_pw, xr)));
        trunc = std::max(trunc, max_abs_diff(rotate_batch(run(g_trunc, x), r), run(g_trunc, xr)));
        pad = std::max(pad, max_abs_diff(rotate_batch(run(g_pad, x), r), run(g_pad, xr)));
        norm = std::max(norm, max_abs_diff(rotate_batch(run(g_norm, x), r), run(g_norm, xr)));
    }
    const std::string n = "_trials=" + std::to_string(trials);
    return {
        {"equivariance", "spectral_conv" + n, conv, 1e-7},
        {"equivariance", "pointwise_conv" + n, pw, 1e-7},
        {"equivariance", "truncate" + n, trunc, 1e-7},
        {"equivariance", "zeropad" + n, pad, 1e-7},
        {"equivariance", "weighted_norm" + n, norm, 1e-7},
    };
}

std::vector<CheckResult> gradient_suite(std::uint64_t seed, bool include_desk_model)
{
    Rng rng(seed);
    std::vector<CheckResult> out;
    const double tol = 1e-4;
    const int B = 4;
    const auto add = [&](const std::string& name, double err) { out.push_back({"gradients", name, err, tol}); };

    nn::ParameterSet ps;
    auto& anchors = ps.add("a", {3, 2, 4});
    auto& cbias = ps.add("cb", {2});
    auto& weight = ps.add("w", {4, 3});
    auto& pbias = ps.add("pb", {4});
    auto& kernel = ps.add("k", {2, 3, 3, 3});
    auto& kbias = ps.add("kb", {2});
    auto& scale = ps.add("s", {3});
    auto& shift = ps.add("t", {3});
    auto& mean = ps.add("m", {3}, false);
    auto& var = ps.add("v", {3}, false);
    for (auto* p : ps.trainable()) {
        randomize(*p, rng);
    }
    randomize(mean, rng);
    var.value = {1.5, 0.7, 2.0};
    const nn::NormParams np{&scale, &shift, &mean, &var};

    add("sph_conv", primitive_gradient_error([&](Tape& t, VarId v) { return nn::sph_conv(t, v, anchors, cbias); },
                                             random_tensor(2, 3, B, rng), {&anchors, &cbias}, rng));
    add("pointwise_conv",
        primitive_gradient_error([&](Tape& t, VarId v) { return nn::pointwise_conv(t, v, weight, pbias); },
                                 random_tensor(2, 3, B, rng), {&weight, &pbias}, rng));
    add("relu", primitive_gradient_error([](Tape& t, VarId v) { return nn::relu(t, v); },
                                         away_from_zero(random_tensor(2, 2, B, rng)), {}, rng));
    add("add", primitive_gradient_error([](Tape& t, VarId v) { return nn::add(t, v, nn::relu(t, v)); },
                                        away_from_zero(random_tensor(2, 2, B, rng)), {}, rng));
    add("weighted_norm_train",
        primitive_gradient_error([&](Tape& t, VarId v) { return nn::weighted_norm(t, v, np, Mode::train); },
                                 random_tensor(2, 3, B, rng), {&scale, &shift}, rng));
    add("weighted_norm_eval",
        primitive_gradient_error([&](Tape& t, VarId v) { return nn::weighted_norm(t, v, np, Mode::eval); },
                                 random_tensor(2, 3, B, rng), {&scale, &shift}, rng));
    add("truncate", primitive_gradient_error([](Tape& t, VarId v) { return nn::spectral_resample(t, v, 2); },
                                             random_tensor(2, 2, B, rng), {}, rng));
    add("zeropad", primitive_gradient_error([](Tape& t, VarId v) { return nn::spectral_resample(t, v, 8); },
                                            random_tensor(2, 2, B, rng), {}, rng));
    add("avg_pool2", primitive_gradient_error([](Tape& t, VarId v) { return nn::avg_pool2(t, v); },
                                              random_tensor(2, 2, B, rng), {}, rng));
    add("upsample_nearest2", primitive_gradient_error([](Tape& t, VarId v) { return nn::upsample_nearest2(t, v); },
                                                      random_tensor(2, 2, B, rng), {}, rng));
    add("planar_conv3x3",
        primitive_gradient_error([&](Tape& t, VarId v) { return nn::planar_conv3x3(t, v, kernel, kbias); },
                                 random_tensor(2, 3, B, rng), {&kernel, &kbias}, rng));

    {
        Tensor logits = random_tensor(2, 3, B, rng);
        std::vector<LabelMap> labels;
        for (int n = 0; n < 2; ++n) {
            LabelMap y(shared_grid(B), 3);
            for (auto& l : y.labels) {
                l = static_cast<std::uint16_t>(rng.below(3));
            }
            labels.push_back(std::move(y));
        }
        Tensor grad;
        train::weighted_cross_entropy(logits, labels, &grad);
        double err = 0.0, scale_max = 0.0;
        const double eps = 1e-5;
        for (std::size_t i = 0; i < logits.data.size(); ++i) {
            const double keep = logits.data[i];
            logits.data[i] = keep + eps;
            const double up = train::weighted_cross_entropy(logits, labels, nullptr);
            logits.data[i] = keep - eps;
            const double down = train::weighted_cross_entropy(logits, labels, nullptr);
            logits.data[i] = keep;
            const double numeric = (up - down) / (2 * eps);
            err = std::max(err, std::abs(numeric - grad.data[i]));
            scale_max = std::max(scale_max, std::abs(numeric));
        }
        add("cross_entropy", err / scale_max);
    }

    if (!include_desk_model) {
        return out;
    }
    for (nn::Arch arch : {nn::Arch::schn, nn::Arch::planar_baseline}) {
        nn::HourglassConfig cfg = nn::HourglassConfig::desk();
        cfg.arch = arch;
        nn::Hourglass model(cfg);
        model.initialize(seed);
        Tensor x = random_tensor(2, cfg.input_channels, cfg.bandlimit, rng);
        std::vector<LabelMap> labels;
        for (int n = 0; n < 2; ++n) {
            LabelMap y(shared_grid(cfg.bandlimit), cfg.num_classes);
            for (auto& l : y.labels) {
                l = static_cast<std::uint16_t>(rng.below(std::uint64_t(cfg.num_classes)));
            }
            labels.push_back(std::move(y));
        }
        const auto loss = [&](const Tensor& input) {
            Tape t(false);
            return train::weighted_cross_entropy(t.value(model.forward(t, t.input(input), Mode::train)), labels, nullptr);
        };
        model.parameters().zero_grad();
        Tape tape;
        const VarId in = tape.input(x, true);
        const VarId logits = model.forward(tape, in, Mode::train);
        Tensor seed_grad;
        train::weighted_cross_entropy(tape.value(logits), labels, &seed_grad);
        tape.backward(logits, seed_grad);
        const Tensor dx = tape.grad(in);

        // Directional derivatives along a random unit direction per tensor,
        // at three step sizes: a step that straddles a relu kink is spoiled,
        // so the closest of the three is kept. Tensors whose gradient
        // vanishes analytically (biases in front of a normalization) are
        // compared against the largest directional slope.
        struct Probe {
            std::string name;
            double analytic;
            std::vector<double> numeric;
        };
        std::vector<Probe> probes;
        const auto probe = [&](const std::string& name, std::vector<double>& values, const std::vector<double>& grad,
                               const std::function<double()>& f) {
            std::vector<double> d(values.size());
            for (auto& v : d) {
                v = rng.normal();
            }
            const double norm = std::sqrt(dot(d, d));
            for (auto& v : d) {
                v /= norm;
            }
            const std::vector<double> keep = values;
            Probe pr{name, dot(grad, d), {}};
            for (double eps : {1e-5, 1e-6, 1e-7}) {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    values[i] = keep[i] + eps * d[i];
                }
                const double up = f();
                for (std::size_t i = 0; i < values.size(); ++i) {
                    values[i] = keep[i] - eps * d[i];
                }
                const double down = f();
                pr.numeric.push_back((up - down) / (2 * eps));
            }
            values = keep;
            probes.push_back(std::move(pr));
        };
        probe("input", x.data, dx.data, [&] { return loss(x); });
        for (Parameter* p : model.parameters().trainable()) {
            const std::vector<double> grad = p->grad;
            probe(p->name, p->value, grad, [&] { return loss(x); });
        }
        double largest = 0.0;
        for (const auto& p : probes) {
            largest = std::max(largest, std::abs(p.analytic));
        }
        double worst = 0.0;
        std::string worst_name;
        for (const auto& p : probes) {
            double diff = std::numeric_limits<double>::infinity();
            for (double n : p.numeric) {
                diff = std::min(diff, std::abs(p.analytic - n));
            }
            const double err = diff / std::max(std::abs(p.analytic), 1e-3 * largest);
            if (err >= worst) {
                worst = err;
                worst_name = p.name;
            }
        }
        add(std::string("hourglass_") + nn::to_string(arch) + "_desk_" + std::to_string(probes.size()) +
                "_tensors(worst:" + worst_name + ")",
            worst);
    }
    return out;
}

} // namespace schn::verify
