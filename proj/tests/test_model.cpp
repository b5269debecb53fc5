#include "schn/error.hpp"
#include "schn/nn/model.hpp"
#include "schn/random.hpp"
#include "schn/sht.hpp"
#include "schn/wigner.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace schn;
using namespace schn::nn;

namespace {

Tensor random_tensor(int n, int c, int B, Rng& rng)
{
    Tensor t(n, c, B);
    for (auto& v : t.data) {
        v = rng.normal();
    }
    return t;
}

HourglassConfig small_config(Arch arch)
{
    HourglassConfig c;
    c.bandlimit = 8;
    c.levels = 2;
    c.channels = {8, 8, 16};
    c.anchors = 4;
    c.num_classes = 4;
    c.arch = arch;
    return c;
}

Tensor forward(Hourglass& model, const Tensor& x, Mode mode)
{
    Tape t(false);
    return t.value(model.forward(t, t.input(x), mode));
}

// Independent parameter count from the layer formulas.
std::size_t expected_trainable(const HourglassConfig& c)
{
    const auto& ch = c.channels;
    auto spatial = [&](int cin, int cout, int level) -> std::size_t {
        const std::size_t taps = c.arch == Arch::schn ? std::size_t(c.level_anchors(level)) : 9u;
        return std::size_t(cin) * cout * taps + cout;
    };
    auto block = [&](int C, int level) {
        const int m = C / c.bottleneck_ratio;
        return std::size_t(C) * m + m + 2u * m + spatial(m, m, level) + 2u * m + std::size_t(m) * C + C;
    };
    std::size_t n = spatial(c.input_channels, ch[0], 0) + 2u * ch[0];
    for (int i = 0; i < c.levels; ++i) {
        n += 2 * std::size_t(c.blocks_per_level) * block(ch[std::size_t(i)], i);
        n += 2 * (std::size_t(ch[std::size_t(i)]) * ch[std::size_t(i) + 1]) + ch[std::size_t(i)] + ch[std::size_t(i) + 1];
    }
    n += std::size_t(c.blocks_per_level) * block(ch[std::size_t(c.levels)], c.levels);
    n += std::size_t(ch[0]) * c.num_classes + c.num_classes;
    return n;
}

} // namespace

TEST_CASE("desk config output shape")
{
    Hourglass model(HourglassConfig::desk());
    model.initialize(1);
    Rng rng(1);
    const Tensor y = forward(model, random_tensor(1, 3, 32, rng), Mode::eval);
    CHECK(y.n == 1);
    CHECK(y.c == 6);
    CHECK(y.side() == 64);
}

TEST_CASE("zero head gives uniform logits")
{
    for (Arch arch : {Arch::schn, Arch::planar_baseline}) {
        Hourglass model(small_config(arch));
        model.initialize(2);
        auto& p = model.parameters();
        std::fill(p.get("head.weight").value.begin(), p.get("head.weight").value.end(), 0.0);
        Rng rng(2);
        const Tensor y = forward(model, random_tensor(2, 3, 8, rng), Mode::train);
        for (double v : y.data) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("all-zero network outputs the head bias")
{
    Hourglass model(small_config(Arch::schn));
    model.initialize(3);
    for (Parameter* p : model.parameters().trainable()) {
        std::fill(p->value.begin(), p->value.end(), 0.0);
    }
    auto& bias = model.parameters().get("head.bias").value;
    bias = {0.5, -1.0, 2.0, 0.0};
    Rng rng(3);
    const Tensor y = forward(model, random_tensor(1, 3, 8, rng), Mode::train);
    for (int c = 0; c < 4; ++c) {
        for (std::size_t i = 0; i < y.plane(); ++i) {
            CHECK(y.map(0, c)[i] == bias[std::size_t(c)]);
        }
    }
}

TEST_CASE("zero expansion makes a residual block the identity")
{
    // With every block's expansion zeroed, the network reduces to stem, mixes and head.
    HourglassConfig cfg = small_config(Arch::schn);
    Hourglass with(cfg);
    with.initialize(4);
    cfg.blocks_per_level = 0;
    Hourglass without(cfg);
    without.initialize(4);
    for (Parameter* p : without.parameters().all()) {
        with.parameters().get(p->name).value = p->value;
    }
    for (Parameter* p : with.parameters().all()) {
        if (p->name.find(".expand.") != std::string::npos) {
            std::fill(p->value.begin(), p->value.end(), 0.0);
        }
    }
    Rng rng(4);
    const Tensor x = random_tensor(2, 3, 8, rng);
    CHECK(forward(with, x, Mode::train).data == forward(without, x, Mode::train).data);
}

TEST_CASE("config validation")
{
    HourglassConfig c = HourglassConfig::desk();
    CHECK_NOTHROW(c.validate());
    c.bandlimit = 36;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = HourglassConfig::desk();
    c.channels = {16, 32, 64};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = HourglassConfig::desk();
    c.channels = {16, 30, 64, 64};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = HourglassConfig::desk();
    c.anchors = 64;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = HourglassConfig::desk();
    c.num_classes = 1;
    CHECK_THROWS_AS(Hourglass{c}, ConfigError);
}

TEST_CASE("per-level anchor counts")
{
    HourglassConfig c = HourglassConfig::desk();
    CHECK(c.level_anchors(0) == 16);
    CHECK(c.level_anchors(1) == 16);
    CHECK(c.level_anchors(2) == 8);
    CHECK(c.level_anchors(3) == 4);
    c.filter_mode = FilterMode::global;
    CHECK(c.level_anchors(0) == 32);
    CHECK(c.level_anchors(3) == 4);
}

TEST_CASE("config text round trip")
{
    HourglassConfig c = HourglassConfig::desk();
    c.arch = Arch::planar_baseline;
    c.filter_mode = FilterMode::global;
    c.channels = {8, 16, 16, 32};
    ConfigText text;
    write_config(c, text);
    const ConfigText parsed = ConfigText::parse(text.format());
    HourglassConfig back;
    for (const auto& [k, v] : parsed.entries()) {
        CHECK(apply_config_key(back, k, v));
    }
    CHECK(back.arch == c.arch);
    CHECK(back.filter_mode == c.filter_mode);
    CHECK(back.channels == c.channels);
    CHECK(back.bandlimit == c.bandlimit);
    CHECK_FALSE(apply_config_key(back, "train.epochs", "3"));
    CHECK_THROWS_AS(apply_config_key(back, "model.arch", "cnn"), ConfigError);
    CHECK_THROWS_AS(apply_config_key(back, "model.levels", "three"), ConfigError);
}

TEST_CASE("config text parsing")
{
    const ConfigText t = ConfigText::parse("# comment\nmodel.levels = 3  # trailing\n\ntrain.lr=0.001\n");
    REQUIRE(t.entries().size() == 2);
    CHECK(*t.find("model.levels") == "3");
    CHECK(*t.find("train.lr") == "0.001");
    CHECK_THROWS_AS(ConfigText::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(ConfigText::parse("just words\n"), ConfigError);
    CHECK(format_double(0.1) == "0.1");
    CHECK(parse_double("x", format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("parameter counts")
{
    for (HourglassConfig c : {HourglassConfig::desk(), HourglassConfig::reference(), small_config(Arch::planar_baseline)}) {
        Hourglass model(c);
        CHECK(model.parameters().trainable_count() == expected_trainable(c));
    }
    // regression value for the reference configuration
    CHECK(Hourglass(HourglassConfig::reference()).parameters().trainable_count() == 253094);
}

TEST_CASE("initialization is deterministic")
{
    Hourglass a(HourglassConfig::desk()), b(HourglassConfig::desk());
    a.initialize(9);
    b.initialize(9);
    for (Parameter* p : a.parameters().all()) {
        CHECK(p->value == b.parameters().get(p->name).value);
    }
}

TEST_CASE("input shape is checked")
{
    Hourglass model(small_config(Arch::schn));
    Tape t(false);
    CHECK_THROWS_AS(model.forward(t, t.input(Tensor(1, 2, 8)), Mode::eval), ShapeError);
    CHECK_THROWS_AS(model.forward(t, t.input(Tensor(1, 3, 16)), Mode::eval), ShapeError);
}

TEST_CASE("whole-network directional derivative")
{
    for (Arch arch : {Arch::schn, Arch::planar_baseline}) {
        Hourglass model(small_config(arch));
        model.initialize(5);
        Rng rng(5);
        const Tensor x = random_tensor(2, 3, 8, rng);
        Tensor r(2, 4, 8);
        for (auto& v : r.data) {
            v = rng.normal();
        }
        auto params = model.parameters().trainable();
        model.parameters().zero_grad();
        Tape tape;
        const VarId out = model.forward(tape, tape.input(x), Mode::train);
        tape.backward(out, r);

        double analytic = 0.0;
        std::vector<std::vector<double>> dir;
        for (Parameter* p : params) {
            dir.emplace_back(p->size());
            for (std::size_t i = 0; i < p->size(); ++i) {
                dir.back()[i] = rng.normal();
                analytic += dir.back()[i] * p->grad[i];
            }
        }
        auto loss_at = [&](double step) {
            std::vector<std::vector<double>> saved;
            for (std::size_t k = 0; k < params.size(); ++k) {
                saved.push_back(params[k]->value);
                for (std::size_t i = 0; i < params[k]->size(); ++i) {
                    params[k]->value[i] += step * dir[k][i];
                }
            }
            const Tensor y = forward(model, x, Mode::train);
            for (std::size_t k = 0; k < params.size(); ++k) {
                params[k]->value = saved[k];
            }
            double s = 0.0;
            for (std::size_t i = 0; i < y.data.size(); ++i) {
                s += y.data[i] * r.data[i];
            }
            return s;
        };
        const double eps = 1e-6;
        const double numeric = (loss_at(eps) - loss_at(-eps)) / (2 * eps);
        CHECK(std::abs(analytic - numeric) / std::abs(numeric) < 1e-4);
    }
}

TEST_CASE("residual block shape and zero-weight identity")
{
    ParameterSet set;
    const BottleneckParams p = add_bottleneck(set, "b", 16, 4, Arch::schn, 4);
    CHECK_THROWS_AS(add_bottleneck(set, "c", 18, 4, Arch::schn, 4), ConfigError);
    Rng rng(6);
    for (Parameter* q : set.trainable()) {
        for (auto& v : q->value) {
            v = rng.normal();
        }
    }
    const Tensor x = random_tensor(2, 16, 8, rng);
    Tape t(false);
    const VarId y = residual_bottleneck(t, t.input(x), p, Arch::schn, Mode::train);
    CHECK(t.value(y).same_shape(x));

    for (Parameter* q : set.trainable()) {
        std::fill(q->value.begin(), q->value.end(), 0.0);
    }
    Tape z(false);
    CHECK(z.value(residual_bottleneck(z, z.input(x), p, Arch::schn, Mode::train)).data == x.data);
}

TEST_CASE("residual block equivariance defect is bounded")
{
    const int B = 16;
    const ShtPlan& plan = sht_plan(B);
    Rng rng(7);
    std::vector<double> defects;
    for (int trial = 0; trial < 50; ++trial) {
        ParameterSet set;
        const BottleneckParams p = add_bottleneck(set, "b", 16, 4, Arch::schn, 8);
        for (Parameter* q : {p.reduce_w, p.mid_w, p.expand_w}) {
            for (auto& v : q->value) {
                v = rng.normal(0.0, std::sqrt(2.0 / static_cast<double>(q->shape[q == p.mid_w ? 0 : 1])));
            }
        }
        Tensor x(1, 16, B);
        std::vector<complex> half(plan.half_size());
        for (int c = 0; c < 16; ++c) {
            std::fill(half.begin(), half.end(), complex(0.0));
            for (int m = 0; m < B / 4; ++m) {
                for (int l = m; l < B / 4; ++l) {
                    half[plan.half_index(l, m)] = complex(rng.normal(), m ? rng.normal() : 0.0);
                }
            }
            plan.synthesize(half, {x.map(0, c), x.plane()});
        }
        const RotationZYZ R = sample_haar(rng);
        auto rot = [&](const Tensor& t) {
            const FeatureMap f = rotate_feature_map(unstack(t, 0), R);
            Tensor o(1, t.c, t.B);
            std::copy(f.values.begin(), f.values.end(), o.data.begin());
            return o;
        };
        auto run = [&](const Tensor& in) {
            Tape t(false);
            return t.value(residual_bottleneck(t, t.input(in), p, Arch::schn, Mode::train));
        };
        const Tensor a = rot(run(x));
        const Tensor b = run(rot(x));
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            diff = std::max(diff, std::abs(a.data[i] - b.data[i]));
            scale = std::max(scale, std::abs(b.data[i]));
        }
        defects.push_back(diff / scale);
    }
    // The spectral rotation of the kinked relu output dominates the defect;
    // relu alone measures 0.07 worst case under the same protocol.
    std::sort(defects.begin(), defects.end());
    MESSAGE("median " << defects[25] << " worst " << defects.back());
    CHECK(defects[25] < 0.05);
    CHECK(defects.back() < 0.1);
}
