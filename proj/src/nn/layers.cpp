#include "schn/nn/layers.hpp"

#include "schn/error.hpp"
#include "schn/filters.hpp"
#include "schn/sht.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace schn::nn {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw ShapeError(what);
    }
}

std::size_t half_count(int n, int c, const ShtPlan& plan)
{
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * plan.half_size();
}

// dx_p += q_p * synthesize(coeffs)_p, with q the per-ring quadrature area.
void add_weighted_synthesis(const ShtPlan& plan, std::span<const complex> half, double* dx, std::vector<double>& scratch)
{
    const int side = 2 * plan.B();
    scratch.resize(static_cast<std::size_t>(side) * side);
    plan.synthesize(half, scratch);
    for (int j = 0; j < side; ++j) {
        const double q = plan.grid().cell_area(j);
        for (int k = 0; k < side; ++k) {
            dx[static_cast<std::size_t>(j) * side + k] += q * scratch[static_cast<std::size_t>(j) * side + k];
        }
    }
}

// Copies the overlapping degrees between two half layouts (truncate or zero pad).
void resample_half(const ShtPlan& from, std::span<const complex> src, const ShtPlan& to, std::span<complex> dst)
{
    std::fill(dst.begin(), dst.end(), complex(0.0));
    const int keep = std::min(from.B(), to.B());
    for (int m = 0; m < keep; ++m) {
        for (int l = m; l < keep; ++l) {
            dst[to.half_index(l, m)] = src[from.half_index(l, m)];
        }
    }
}

// dst[q] += a * src[(q + shift) mod S] for shift in {-1, 0, 1}.
void shifted_axpy(double* dst, const double* src, int S, int shift, double a)
{
    if (shift == 0) {
        for (int q = 0; q < S; ++q) {
            dst[q] += a * src[q];
        }
        return;
    }
    const int lo = shift < 0 ? 1 : 0;
    const int hi = shift > 0 ? S - 1 : S;
    for (int q = lo; q < hi; ++q) {
        dst[q] += a * src[q + shift];
    }
    if (shift < 0) {
        dst[0] += a * src[S - 1];
    } else {
        dst[S - 1] += a * src[0];
    }
}

// sum_q g[q] * src[(q + shift) mod S]
double shifted_dot(const double* g, const double* src, int S, int shift)
{
    double s = 0.0;
    const int lo = shift < 0 ? 1 : 0;
    const int hi = shift > 0 ? S - 1 : S;
    for (int q = lo; q < hi; ++q) {
        s += g[q] * src[q + shift];
    }
    if (shift < 0) {
        s += g[0] * src[S - 1];
    } else if (shift > 0) {
        s += g[S - 1] * src[0];
    }
    return s;
}

} // namespace

Tensor stack(const std::vector<FeatureMap>& maps)
{
    if (maps.empty()) {
        throw ShapeError("stack: empty batch");
    }
    const int B = maps.front().B();
    const int C = maps.front().channels;
    Tensor t(static_cast<int>(maps.size()), C, B);
    for (std::size_t n = 0; n < maps.size(); ++n) {
        if (maps[n].B() != B || maps[n].channels != C) {
            throw ShapeError("stack: sample " + std::to_string(n) + " has a different shape");
        }
        std::copy(maps[n].values.begin(), maps[n].values.end(), t.map(static_cast<int>(n), 0));
    }
    return t;
}

FeatureMap unstack(const Tensor& t, int sample)
{
    if (sample < 0 || sample >= t.n) {
        throw ShapeError("unstack: sample index out of range");
    }
    const double* p = t.map(sample, 0);
    return FeatureMap(shared_grid(t.B), t.c, std::vector<double>(p, p + static_cast<std::size_t>(t.c) * t.plane()));
}

VarId sph_conv(Tape& tape, VarId x, Parameter& anchors, Parameter& bias)
{
    const Tensor& in = tape.value(x);
    require(anchors.shape.size() == 3, "sph_conv: anchors must be [C_in, C_out, K]");
    const int cin = static_cast<int>(anchors.shape[0]);
    const int cout = static_cast<int>(anchors.shape[1]);
    const int K = static_cast<int>(anchors.shape[2]);
    require(in.c == cin, "sph_conv " + anchors.name + ": input has " + std::to_string(in.c) + " channels, filters expect " +
                             std::to_string(cin));
    require(bias.size() == static_cast<std::size_t>(cout), "sph_conv " + bias.name + ": bias size mismatch");
    const int B = in.B;
    if (K > B) {
        throw ShapeError("sph_conv " + anchors.name + ": K=" + std::to_string(K) + " exceeds bandlimit " +
                         std::to_string(B));
    }
    const ShtPlan& plan = sht_plan(B);
    const std::size_t H = plan.half_size();
    const auto& deg = plan.half_degrees();
    const AnchorInterpolation interp(K, B);
    const int N = in.n;

    // gains[(ci * cout + co) * B + l]
    auto gains = std::make_shared<std::vector<double>>(static_cast<std::size_t>(cin) * cout * B);
    for (int p = 0; p < cin * cout; ++p) {
        interp.apply(anchors.value.data() + static_cast<std::size_t>(p) * K,
                     gains->data() + static_cast<std::size_t>(p) * B);
    }

    auto F = std::make_shared<std::vector<complex>>(half_count(N, cin, plan));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < N * cin; ++i) {
        plan.analyze({in.data.data() + static_cast<std::size_t>(i) * in.plane(), in.plane()},
                     {F->data() + static_cast<std::size_t>(i) * H, H});
    }

    Tensor out(N, cout, B);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < N * cout; ++i) {
        const int n = i / cout, co = i % cout;
        std::vector<complex> mixed(H, complex(0.0));
        for (int ci = 0; ci < cin; ++ci) {
            const double* g = gains->data() + (static_cast<std::size_t>(ci) * cout + co) * B;
            const complex* f = F->data() + (static_cast<std::size_t>(n) * cin + ci) * H;
            for (std::size_t h = 0; h < H; ++h) {
                mixed[h] += g[deg[h]] * f[h];
            }
        }
        double* o = out.map(n, co);
        plan.synthesize(mixed, {o, out.plane()});
        const double b = bias.value[static_cast<std::size_t>(co)];
        for (std::size_t p = 0; p < out.plane(); ++p) {
            o[p] += b;
        }
    }

    Parameter* pa = &anchors;
    Parameter* pb = &bias;
    return tape.push(std::move(out), [x, pa, pb, F, gains, cin, cout, K, B](Tape& t, VarId self) {
        const Tensor& g = t.grad(self);
        const ShtPlan& plan = sht_plan(B);
        const std::size_t H = plan.half_size();
        const auto& deg = plan.half_degrees();
        const auto& ord = plan.half_orders();
        const int N = g.n;

        for (int co = 0; co < cout; ++co) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, co);
                for (std::size_t p = 0; p < g.plane(); ++p) {
                    s += gp[p];
                }
            }
            pb->grad[static_cast<std::size_t>(co)] += s;
        }

        std::vector<complex> Hc(half_count(N, cout, plan));
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < N * cout; ++i) {
            plan.analyze_unweighted({g.data.data() + static_cast<std::size_t>(i) * g.plane(), g.plane()},
                                    {Hc.data() + static_cast<std::size_t>(i) * H, H});
        }

        // gain gradients: sum over all m of Re(F conj(H)); m > 0 counted twice
        std::vector<double> dgain(static_cast<std::size_t>(cin) * cout * B, 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int p = 0; p < cin * cout; ++p) {
            const int ci = p / cout, co = p % cout;
            double* dg = dgain.data() + static_cast<std::size_t>(p) * B;
            for (int n = 0; n < N; ++n) {
                const complex* f = F->data() + (static_cast<std::size_t>(n) * cin + ci) * H;
                const complex* h = Hc.data() + (static_cast<std::size_t>(n) * cout + co) * H;
                for (std::size_t k = 0; k < H; ++k) {
                    const double v = f[k].real() * h[k].real() + f[k].imag() * h[k].imag();
                    dg[deg[k]] += ord[k] == 0 ? v : 2.0 * v;
                }
            }
        }
        const AnchorInterpolation interp(K, B);
        for (int p = 0; p < cin * cout; ++p) {
            interp.accumulate_adjoint(dgain.data() + static_cast<std::size_t>(p) * B,
                                      pa->grad.data() + static_cast<std::size_t>(p) * K);
        }

        if (!t.requires_grad(x)) {
            return;
        }
        Tensor& dx = t.grad(x);
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < N * cin; ++i) {
            const int n = i / cin, ci = i % cin;
            std::vector<complex> e(H, complex(0.0));
            for (int co = 0; co < cout; ++co) {
                const double* gg = gains->data() + (static_cast<std::size_t>(ci) * cout + co) * B;
                const complex* h = Hc.data() + (static_cast<std::size_t>(n) * cout + co) * H;
                for (std::size_t k = 0; k < H; ++k) {
                    e[k] += gg[deg[k]] * h[k];
                }
            }
            std::vector<double> scratch;
            add_weighted_synthesis(plan, e, dx.map(n, ci), scratch);
        }
    });
}

VarId pointwise_conv(Tape& tape, VarId x, Parameter& weight, Parameter& bias)
{
    const Tensor& in = tape.value(x);
    require(weight.shape.size() == 2, "pointwise_conv: weight must be [C_out, C_in]");
    const int cout = static_cast<int>(weight.shape[0]);
    const int cin = static_cast<int>(weight.shape[1]);
    require(in.c == cin, "pointwise_conv " + weight.name + ": input has " + std::to_string(in.c) +
                             " channels, weight expects " + std::to_string(cin));
    require(bias.size() == static_cast<std::size_t>(cout), "pointwise_conv " + bias.name + ": bias size mismatch");
    const int N = in.n;
    const std::size_t P = in.plane();
    Tensor out(N, cout, in.B);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N * cout; ++i) {
        const int n = i / cout, co = i % cout;
        double* o = out.map(n, co);
        std::fill(o, o + P, bias.value[static_cast<std::size_t>(co)]);
        for (int ci = 0; ci < cin; ++ci) {
            const double w = weight.value[static_cast<std::size_t>(co) * cin + ci];
            const double* xi = in.map(n, ci);
            for (std::size_t p = 0; p < P; ++p) {
                o[p] += w * xi[p];
            }
        }
    }
    Parameter* pw = &weight;
    Parameter* pb = &bias;
    return tape.push(std::move(out), [x, pw, pb, cin, cout](Tape& t, VarId self) {
        const Tensor& g = t.grad(self);
        const Tensor& in = t.value(x);
        const int N = g.n;
        const std::size_t P = g.plane();
#pragma omp parallel for schedule(static)
        for (int k = 0; k < cout * cin; ++k) {
            const int co = k / cin, ci = k % cin;
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, co);
                const double* xp = in.map(n, ci);
                for (std::size_t p = 0; p < P; ++p) {
                    s += gp[p] * xp[p];
                }
            }
            pw->grad[static_cast<std::size_t>(k)] += s;
        }
        for (int co = 0; co < cout; ++co) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, co);
                for (std::size_t p = 0; p < P; ++p) {
                    s += gp[p];
                }
            }
            pb->grad[static_cast<std::size_t>(co)] += s;
        }
        if (!t.requires_grad(x)) {
            return;
        }
        Tensor& dx = t.grad(x);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < N * cin; ++i) {
            const int n = i / cin, ci = i % cin;
            double* d = dx.map(n, ci);
            for (int co = 0; co < cout; ++co) {
                const double w = pw->value[static_cast<std::size_t>(co) * cin + ci];
                const double* gp = g.map(n, co);
                for (std::size_t p = 0; p < P; ++p) {
                    d[p] += w * gp[p];
                }
            }
        }
    });
}

VarId relu(Tape& tape, VarId x)
{
    const Tensor& in = tape.value(x);
    Tensor out(in.n, in.c, in.B);
    for (std::size_t i = 0; i < in.data.size(); ++i) {
        out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
    }
    return tape.push(std::move(out), [x](Tape& t, VarId self) {
        if (!t.requires_grad(x)) {
            return;
        }
        const Tensor& g = t.grad(self);
        const Tensor& in = t.value(x);
        Tensor& dx = t.grad(x);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (in.data[i] > 0.0) {
                dx.data[i] += g.data[i];
            }
        }
    });
}

VarId add(Tape& tape, VarId a, VarId b)
{
    const Tensor& va = tape.value(a);
    const Tensor& vb = tape.value(b);
    require(va.same_shape(vb), "add: operand shapes differ " + va.shape_string() + " vs " + vb.shape_string());
    Tensor out = va;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += vb.data[i];
    }
    return tape.push(std::move(out), [a, b](Tape& t, VarId self) {
        const Tensor& g = t.grad(self);
        for (VarId v : {a, b}) {
            if (!t.requires_grad(v)) {
                continue;
            }
            Tensor& d = t.grad(v);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                d.data[i] += g.data[i];
            }
        }
    });
}

VarId weighted_norm(Tape& tape, VarId x, const NormParams& p, Mode mode)
{
    const Tensor& in = tape.value(x);
    const int N = in.n, C = in.c, side = in.side();
    require(p.scale && p.shift && p.running_mean && p.running_var, "weighted_norm: missing parameters");
    require(p.scale->size() == static_cast<std::size_t>(C), "weighted_norm " + p.scale->name + ": channel mismatch");
    const auto& grid = *shared_grid(in.B);
    const auto ring_area = grid.normalized_ring_areas();

    auto xhat = std::make_shared<Tensor>(N, C, in.B);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(C));
    Tensor out(N, C, in.B);
    for (int c = 0; c < C; ++c) {
        double mean, var;
        if (mode == Mode::train) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* xp = in.map(n, c);
                for (int j = 0; j < side; ++j) {
                    double r = 0.0;
                    for (int k = 0; k < side; ++k) {
                        r += xp[j * side + k];
                    }
                    s += ring_area[static_cast<std::size_t>(j)] * r;
                }
            }
            mean = s / N;
            double v = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* xp = in.map(n, c);
                for (int j = 0; j < side; ++j) {
                    double r = 0.0;
                    for (int k = 0; k < side; ++k) {
                        const double d = xp[j * side + k] - mean;
                        r += d * d;
                    }
                    v += ring_area[static_cast<std::size_t>(j)] * r;
                }
            }
            var = v / N;
            auto& rm = p.running_mean->value[static_cast<std::size_t>(c)];
            auto& rv = p.running_var->value[static_cast<std::size_t>(c)];
            rm = kNormMomentum * rm + (1.0 - kNormMomentum) * mean;
            rv = kNormMomentum * rv + (1.0 - kNormMomentum) * var;
        } else {
            mean = p.running_mean->value[static_cast<std::size_t>(c)];
            var = p.running_var->value[static_cast<std::size_t>(c)];
        }
        const double is = 1.0 / std::sqrt(var + kNormEpsilon);
        (*inv_std)[static_cast<std::size_t>(c)] = is;
        const double gamma = p.scale->value[static_cast<std::size_t>(c)];
        const double beta = p.shift->value[static_cast<std::size_t>(c)];
        for (int n = 0; n < N; ++n) {
            const double* xp = in.map(n, c);
            double* hp = xhat->map(n, c);
            double* op = out.map(n, c);
            for (std::size_t i = 0; i < in.plane(); ++i) {
                hp[i] = (xp[i] - mean) * is;
                op[i] = gamma * hp[i] + beta;
            }
        }
    }

    Parameter* scale = p.scale;
    Parameter* shift = p.shift;
    return tape.push(std::move(out), [x, scale, shift, xhat, inv_std, mode, ring_area](Tape& t, VarId self) {
        const Tensor& g = t.grad(self);
        const int N = g.n, C = g.c, side = g.side();
        const bool need_dx = t.requires_grad(x);
        for (int c = 0; c < C; ++c) {
            const double gamma = scale->value[static_cast<std::size_t>(c)];
            double sum_g = 0.0, sum_gh = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, c);
                const double* hp = xhat->map(n, c);
                for (int j = 0; j < side; ++j) {
                    double rg = 0.0, rgh = 0.0;
                    for (int k = 0; k < side; ++k) {
                        rg += gp[j * side + k];
                        rgh += gp[j * side + k] * hp[j * side + k];
                    }
                    sum_g += rg;
                    sum_gh += rgh;
                }
            }
            scale->grad[static_cast<std::size_t>(c)] += sum_gh;
            shift->grad[static_cast<std::size_t>(c)] += sum_g;
            if (!need_dx) {
                continue;
            }
            const double is = (*inv_std)[static_cast<std::size_t>(c)];
            Tensor& dx = t.grad(x);
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, c);
                const double* hp = xhat->map(n, c);
                double* dp = dx.map(n, c);
                for (int j = 0; j < side; ++j) {
                    const double w = ring_area[static_cast<std::size_t>(j)] / N;
                    for (int k = 0; k < side; ++k) {
                        const std::size_t i = static_cast<std::size_t>(j) * side + k;
                        if (mode == Mode::train) {
                            dp[i] += gamma * is * (gp[i] - w * sum_g - w * hp[i] * sum_gh);
                        } else {
                            dp[i] += gamma * is * gp[i];
                        }
                    }
                }
            }
        }
    });
}

VarId spectral_resample(Tape& tape, VarId x, int B_out)
{
    const Tensor& in = tape.value(x);
    Bandlimit check(B_out);
    const ShtPlan& pin = sht_plan(in.B);
    const ShtPlan& pout = sht_plan(check.value());
    const int NC = in.n * in.c;
    Tensor out(in.n, in.c, B_out);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < NC; ++i) {
        std::vector<complex> a(pin.half_size()), b(pout.half_size());
        pin.analyze({in.data.data() + static_cast<std::size_t>(i) * in.plane(), in.plane()}, a);
        resample_half(pin, a, pout, b);
        pout.synthesize(b, {out.data.data() + static_cast<std::size_t>(i) * out.plane(), out.plane()});
    }
    const int B_in = in.B;
    return tape.push(std::move(out), [x, B_in, B_out](Tape& t, VarId self) {
        if (!t.requires_grad(x)) {
            return;
        }
        const Tensor& g = t.grad(self);
        const ShtPlan& pin = sht_plan(B_in);
        const ShtPlan& pout = sht_plan(B_out);
        Tensor& dx = t.grad(x);
        const int NC = g.n * g.c;
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < NC; ++i) {
            std::vector<complex> h(pout.half_size()), e(pin.half_size());
            pout.analyze_unweighted({g.data.data() + static_cast<std::size_t>(i) * g.plane(), g.plane()}, h);
            resample_half(pout, h, pin, e);
            std::vector<double> scratch;
            add_weighted_synthesis(pin, e, dx.data.data() + static_cast<std::size_t>(i) * dx.plane(), scratch);
        }
    });
}

VarId avg_pool2(Tape& tape, VarId x)
{
    const Tensor& in = tape.value(x);
    if (in.B % 2 != 0) {
        throw ShapeError("avg_pool2: bandlimit " + std::to_string(in.B) + " is odd");
    }
    Tensor out(in.n, in.c, in.B / 2);
    const int so = out.side(), si = in.side();
    for (int i = 0; i < in.n * in.c; ++i) {
        const double* xp = in.data.data() + static_cast<std::size_t>(i) * in.plane();
        double* op = out.data.data() + static_cast<std::size_t>(i) * out.plane();
        for (int r = 0; r < so; ++r) {
            for (int q = 0; q < so; ++q) {
                op[r * so + q] = 0.25 * (xp[(2 * r) * si + 2 * q] + xp[(2 * r) * si + 2 * q + 1] +
                                         xp[(2 * r + 1) * si + 2 * q] + xp[(2 * r + 1) * si + 2 * q + 1]);
            }
        }
    }
    return tape.push(std::move(out), [x](Tape& t, VarId self) {
        if (!t.requires_grad(x)) {
            return;
        }
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(x);
        const int so = g.side(), si = dx.side();
        for (int i = 0; i < g.n * g.c; ++i) {
            const double* gp = g.data.data() + static_cast<std::size_t>(i) * g.plane();
            double* dp = dx.data.data() + static_cast<std::size_t>(i) * dx.plane();
            for (int r = 0; r < so; ++r) {
                for (int q = 0; q < so; ++q) {
                    const double v = 0.25 * gp[r * so + q];
                    dp[(2 * r) * si + 2 * q] += v;
                    dp[(2 * r) * si + 2 * q + 1] += v;
                    dp[(2 * r + 1) * si + 2 * q] += v;
                    dp[(2 * r + 1) * si + 2 * q + 1] += v;
                }
            }
        }
    });
}

VarId upsample_nearest2(Tape& tape, VarId x)
{
    const Tensor& in = tape.value(x);
    Tensor out(in.n, in.c, 2 * in.B);
    const int so = out.side(), si = in.side();
    for (int i = 0; i < in.n * in.c; ++i) {
        const double* xp = in.data.data() + static_cast<std::size_t>(i) * in.plane();
        double* op = out.data.data() + static_cast<std::size_t>(i) * out.plane();
        for (int r = 0; r < so; ++r) {
            for (int q = 0; q < so; ++q) {
                op[r * so + q] = xp[(r / 2) * si + q / 2];
            }
        }
    }
    return tape.push(std::move(out), [x](Tape& t, VarId self) {
        if (!t.requires_grad(x)) {
            return;
        }
        const Tensor& g = t.grad(self);
        Tensor& dx = t.grad(x);
        const int so = g.side(), si = dx.side();
        for (int i = 0; i < g.n * g.c; ++i) {
            const double* gp = g.data.data() + static_cast<std::size_t>(i) * g.plane();
            double* dp = dx.data.data() + static_cast<std::size_t>(i) * dx.plane();
            for (int r = 0; r < so; ++r) {
                for (int q = 0; q < so; ++q) {
                    dp[(r / 2) * si + q / 2] += gp[r * so + q];
                }
            }
        }
    });
}

VarId planar_conv3x3(Tape& tape, VarId x, Parameter& kernels, Parameter& bias)
{
    const Tensor& in = tape.value(x);
    require(kernels.shape.size() == 4 && kernels.shape[2] == 3 && kernels.shape[3] == 3,
            "planar_conv3x3: kernels must be [C_out, C_in, 3, 3]");
    const int cout = static_cast<int>(kernels.shape[0]);
    const int cin = static_cast<int>(kernels.shape[1]);
    require(in.c == cin, "planar_conv3x3 " + kernels.name + ": input has " + std::to_string(in.c) +
                             " channels, kernels expect " + std::to_string(cin));
    require(bias.size() == static_cast<std::size_t>(cout), "planar_conv3x3 " + bias.name + ": bias size mismatch");
    const int N = in.n, S = in.side();
    Tensor out(N, cout, in.B);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N * cout; ++i) {
        const int n = i / cout, co = i % cout;
        double* o = out.map(n, co);
        std::fill(o, o + out.plane(), bias.value[static_cast<std::size_t>(co)]);
        for (int ci = 0; ci < cin; ++ci) {
            const double* xp = in.map(n, ci);
            const double* w = kernels.value.data() + (static_cast<std::size_t>(co) * cin + ci) * 9;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const double kw = w[(dr + 1) * 3 + (dc + 1)];
                    if (kw == 0.0) {
                        continue;
                    }
                    const int r0 = std::max(0, -dr), r1 = std::min(S, S - dr);
                    for (int r = r0; r < r1; ++r) {
                        shifted_axpy(o + static_cast<std::size_t>(r) * S, xp + static_cast<std::size_t>(r + dr) * S, S,
                                     dc, kw);
                    }
                }
            }
        }
    }
    Parameter* pk = &kernels;
    Parameter* pb = &bias;
    return tape.push(std::move(out), [x, pk, pb, cin, cout](Tape& t, VarId self) {
        const Tensor& g = t.grad(self);
        const Tensor& in = t.value(x);
        const int N = g.n, S = g.side();
        for (int co = 0; co < cout; ++co) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double* gp = g.map(n, co);
                for (std::size_t p = 0; p < g.plane(); ++p) {
                    s += gp[p];
                }
            }
            pb->grad[static_cast<std::size_t>(co)] += s;
        }
#pragma omp parallel for schedule(static)
        for (int k = 0; k < cout * cin; ++k) {
            const int co = k / cin, ci = k % cin;
            double* dw = pk->grad.data() + static_cast<std::size_t>(k) * 9;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    double s = 0.0;
                    const int r0 = std::max(0, -dr), r1 = std::min(S, S - dr);
                    for (int n = 0; n < N; ++n) {
                        const double* gp = g.map(n, co);
                        const double* xp = in.map(n, ci);
                        for (int r = r0; r < r1; ++r) {
                            s += shifted_dot(gp + static_cast<std::size_t>(r) * S, xp + static_cast<std::size_t>(r + dr) * S,
                                             S, dc);
                        }
                    }
                    dw[(dr + 1) * 3 + (dc + 1)] += s;
                }
            }
        }
        if (!t.requires_grad(x)) {
            return;
        }
        Tensor& dx = t.grad(x);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < N * cin; ++i) {
            const int n = i / cin, ci = i % cin;
            double* d = dx.map(n, ci);
            for (int co = 0; co < cout; ++co) {
                const double* gp = g.map(n, co);
                const double* w = pk->value.data() + (static_cast<std::size_t>(co) * cin + ci) * 9;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const double kw = w[(dr + 1) * 3 + (dc + 1)];
                        const int r0 = std::max(0, -dr), r1 = std::min(S, S - dr);
                        for (int r = r0; r < r1; ++r) {
                            shifted_axpy(d + static_cast<std::size_t>(r + dr) * S, gp + static_cast<std::size_t>(r) * S, S,
                                         -dc, kw);
                        }
                    }
                }
            }
        }
    });
}

} // namespace schn::nn
