#include "schn/nn/model.hpp"

#include "schn/error.hpp"
#include "schn/random.hpp"

#include <algorithm>
#include <cmath>

namespace schn::nn {

namespace {

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string join(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

int to_int(const std::string& key, const std::string& value)
{
    const long long v = parse_int(key, value);
    if (v < -1000000 || v > 1000000) {
        throw ConfigError(key + ": value out of range");
    }
    return static_cast<int>(v);
}

} // namespace

std::string to_string(FilterMode m)
{
    return m == FilterMode::localized ? "localized" : "global";
}

std::string to_string(Arch a)
{
    return a == Arch::schn ? "schn" : "planar_baseline";
}

void HourglassConfig::validate() const
{
    if (levels < 1) {
        throw ConfigError("model.levels must be at least 1");
    }
    if (levels > 12 || bandlimit < 2 || bandlimit % (1 << levels) != 0 || (bandlimit >> levels) < 2) {
        throw ConfigError("model.bandlimit " + std::to_string(bandlimit) + " must be divisible by 2^levels = " +
                          std::to_string(1 << std::min(levels, 12)) + " with at least 2 remaining at the bottom");
    }
    if (input_channels < 1) {
        throw ConfigError("model.input_channels must be positive");
    }
    if (num_classes < 2) {
        throw ConfigError("model.num_classes must be at least 2");
    }
    if (channels.size() != static_cast<std::size_t>(levels) + 1) {
        throw ConfigError("model.channels needs levels + 1 = " + std::to_string(levels + 1) + " entries");
    }
    if (bottleneck_ratio < 1) {
        throw ConfigError("model.bottleneck_ratio must be positive");
    }
    for (int c : channels) {
        if (c < kMinChannels || c > kMaxChannels) {
            throw ConfigError("model.channels entry " + std::to_string(c) + " outside [" +
                              std::to_string(kMinChannels) + ", " + std::to_string(kMaxChannels) + "]");
        }
        if (c % bottleneck_ratio != 0) {
            throw ConfigError("model.channels entry " + std::to_string(c) + " is not divisible by bottleneck_ratio " +
                              std::to_string(bottleneck_ratio));
        }
    }
    if (blocks_per_level < 0) {
        throw ConfigError("model.blocks_per_level must be non-negative");
    }
    if (anchors < 2 || anchors > bandlimit) {
        throw ConfigError("model.anchors must lie in [2, bandlimit]");
    }
}

int HourglassConfig::level_anchors(int level) const
{
    const int B = level_bandlimit(level);
    return filter_mode == FilterMode::global ? B : std::min(anchors, B);
}

HourglassConfig HourglassConfig::desk()
{
    return HourglassConfig{};
}

HourglassConfig HourglassConfig::reference()
{
    HourglassConfig c;
    c.bandlimit = 128;
    c.channels = {32, 64, 128, 256};
    return c;
}

void write_config(const HourglassConfig& cfg, ConfigText& out)
{
    out.set("model.arch", to_string(cfg.arch));
    out.set("model.bandlimit", std::to_string(cfg.bandlimit));
    out.set("model.input_channels", std::to_string(cfg.input_channels));
    out.set("model.num_classes", std::to_string(cfg.num_classes));
    out.set("model.levels", std::to_string(cfg.levels));
    out.set("model.channels", join(cfg.channels));
    out.set("model.blocks_per_level", std::to_string(cfg.blocks_per_level));
    out.set("model.anchors", std::to_string(cfg.anchors));
    out.set("model.filter_mode", to_string(cfg.filter_mode));
    out.set("model.bottleneck_ratio", std::to_string(cfg.bottleneck_ratio));
    out.set("model.skip_mode", "additive");
}

bool apply_config_key(HourglassConfig& cfg, const std::string& key, const std::string& value)
{
    if (key == "model.arch") {
        if (value == "schn") {
            cfg.arch = Arch::schn;
        } else if (value == "planar_baseline") {
            cfg.arch = Arch::planar_baseline;
        } else {
            throw ConfigError(key + ": expected schn or planar_baseline, got '" + value + "'");
        }
    } else if (key == "model.bandlimit") {
        cfg.bandlimit = to_int(key, value);
    } else if (key == "model.input_channels") {
        cfg.input_channels = to_int(key, value);
    } else if (key == "model.num_classes") {
        cfg.num_classes = to_int(key, value);
    } else if (key == "model.levels") {
        cfg.levels = to_int(key, value);
    } else if (key == "model.channels") {
        cfg.channels = parse_int_list(key, value);
    } else if (key == "model.blocks_per_level") {
        cfg.blocks_per_level = to_int(key, value);
    } else if (key == "model.anchors") {
        cfg.anchors = to_int(key, value);
    } else if (key == "model.filter_mode") {
        if (value == "localized") {
            cfg.filter_mode = FilterMode::localized;
        } else if (value == "global") {
            cfg.filter_mode = FilterMode::global;
        } else {
            throw ConfigError(key + ": expected localized or global, got '" + value + "'");
        }
    } else if (key == "model.bottleneck_ratio") {
        cfg.bottleneck_ratio = to_int(key, value);
    } else if (key == "model.skip_mode") {
        if (value != "additive") {
            throw ConfigError(key + ": only additive skips are supported");
        }
    } else {
        return false;
    }
    return true;
}

NormParams add_norm(ParameterSet& set, const std::string& prefix, int channels)
{
    const std::vector<std::size_t> shape{std::size_t(channels)};
    NormParams n;
    n.scale = &set.add(prefix + ".scale", shape);
    n.shift = &set.add(prefix + ".shift", shape);
    n.running_mean = &set.add(prefix + ".running_mean", shape, false);
    n.running_var = &set.add(prefix + ".running_var", shape, false);
    std::fill(n.scale->value.begin(), n.scale->value.end(), 1.0);
    std::fill(n.running_var->value.begin(), n.running_var->value.end(), 1.0);
    return n;
}

BottleneckParams add_bottleneck(ParameterSet& set, const std::string& prefix, int channels, int ratio, Arch arch,
                                int anchors)
{
    if (ratio < 1 || channels % ratio != 0) {
        throw ConfigError(prefix + ": " + std::to_string(channels) + " channels not divisible by bottleneck ratio " +
                          std::to_string(ratio));
    }
    const auto C = std::size_t(channels);
    const auto mid = std::size_t(channels / ratio);
    BottleneckParams b;
    b.reduce_w = &set.add(prefix + ".reduce.weight", {mid, C});
    b.reduce_b = &set.add(prefix + ".reduce.bias", {mid});
    b.norm1 = add_norm(set, prefix + ".norm1", channels / ratio);
    if (arch == Arch::schn) {
        b.mid_w = &set.add(prefix + ".mid.anchors", {mid, mid, std::size_t(anchors)});
    } else {
        b.mid_w = &set.add(prefix + ".mid.kernel", {mid, mid, 3, 3});
    }
    b.mid_b = &set.add(prefix + ".mid.bias", {mid});
    b.norm2 = add_norm(set, prefix + ".norm2", channels / ratio);
    b.expand_w = &set.add(prefix + ".expand.weight", {C, mid});
    b.expand_b = &set.add(prefix + ".expand.bias", {C});
    return b;
}

VarId residual_bottleneck(Tape& tape, VarId x, const BottleneckParams& p, Arch arch, Mode mode)
{
    auto act = [&](VarId v, const NormParams& n) { return relu(tape, weighted_norm(tape, v, n, mode)); };
    VarId h = act(pointwise_conv(tape, x, *p.reduce_w, *p.reduce_b), p.norm1);
    h = arch == Arch::schn ? sph_conv(tape, h, *p.mid_w, *p.mid_b) : planar_conv3x3(tape, h, *p.mid_w, *p.mid_b);
    h = act(h, p.norm2);
    h = pointwise_conv(tape, h, *p.expand_w, *p.expand_b);
    return add(tape, x, h);
}

Hourglass::Hourglass(HourglassConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    const int L = cfg_.levels;
    const auto& ch = cfg_.channels;

    const auto stem_shape = cfg_.arch == Arch::schn
                                ? std::vector<std::size_t>{std::size_t(cfg_.input_channels), std::size_t(ch[0]),
                                                           std::size_t(cfg_.level_anchors(0))}
                                : std::vector<std::size_t>{std::size_t(ch[0]), std::size_t(cfg_.input_channels), 3, 3};
    stem_w_ = &params_.add(cfg_.arch == Arch::schn ? "stem.anchors" : "stem.kernel", stem_shape);
    stem_b_ = &params_.add("stem.bias", {std::size_t(ch[0])});
    stem_norm_ = add_norm(params_, "stem.norm", ch[0]);

    for (int i = 0; i < L; ++i) {
        encoder_.emplace_back();
        for (int k = 0; k < cfg_.blocks_per_level; ++k) {
            encoder_.back().push_back(
                make_block("enc" + std::to_string(i) + ".block" + std::to_string(k), ch[std::size_t(i)], i));
        }
        down_mix_.push_back(make_mix("down" + std::to_string(i), ch[std::size_t(i)], ch[std::size_t(i) + 1]));
    }
    for (int k = 0; k < cfg_.blocks_per_level; ++k) {
        bottom_.push_back(make_block("bottom.block" + std::to_string(k), ch[std::size_t(L)], L));
    }
    up_mix_.resize(std::size_t(L));
    decoder_.resize(std::size_t(L));
    for (int i = L - 1; i >= 0; --i) {
        up_mix_[std::size_t(i)] = make_mix("up" + std::to_string(i), ch[std::size_t(i) + 1], ch[std::size_t(i)]);
        for (int k = 0; k < cfg_.blocks_per_level; ++k) {
            decoder_[std::size_t(i)].push_back(
                make_block("dec" + std::to_string(i) + ".block" + std::to_string(k), ch[std::size_t(i)], i));
        }
    }
    head_ = make_mix("head", ch[0], cfg_.num_classes);
}

Hourglass::Mix Hourglass::make_mix(const std::string& prefix, int cin, int cout)
{
    Mix m;
    m.w = &params_.add(prefix + ".weight", {std::size_t(cout), std::size_t(cin)});
    m.b = &params_.add(prefix + ".bias", {std::size_t(cout)});
    return m;
}

Hourglass::Block Hourglass::make_block(const std::string& prefix, int channels, int level)
{
    return add_bottleneck(params_, prefix, channels, cfg_.bottleneck_ratio, cfg_.arch, cfg_.level_anchors(level));
}

void Hourglass::initialize(std::uint64_t seed)
{
    Rng rng(seed);
    for (Parameter* p : params_.all()) {
        double fill = 0.0;
        double sigma = 0.0;
        if (ends_with(p->name, ".anchors")) {
            sigma = std::sqrt(2.0 / static_cast<double>(p->shape[0]));
        } else if (ends_with(p->name, ".kernel")) {
            sigma = std::sqrt(2.0 / static_cast<double>(p->shape[1] * 9));
        } else if (ends_with(p->name, ".weight")) {
            // Inside blocks the inputs follow a relu; the level mixes and the
            // head read the residual stream directly.
            const double gain = p->name.find(".block") != std::string::npos ? 2.0 : 1.0;
            sigma = std::sqrt(gain / static_cast<double>(p->shape[1]));
        } else if (ends_with(p->name, ".scale") || ends_with(p->name, ".running_var")) {
            fill = 1.0;
        }
        for (auto& v : p->value) {
            v = sigma > 0.0 ? rng.normal(0.0, sigma) : fill;
        }
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
}

VarId Hourglass::downsample(Tape& tape, VarId x, int level)
{
    return cfg_.arch == Arch::schn ? spectral_resample(tape, x, cfg_.level_bandlimit(level + 1)) : avg_pool2(tape, x);
}

VarId Hourglass::upsample(Tape& tape, VarId x, int level)
{
    return cfg_.arch == Arch::schn ? spectral_resample(tape, x, cfg_.level_bandlimit(level))
                                   : upsample_nearest2(tape, x);
}

VarId Hourglass::forward(Tape& tape, VarId x, Mode mode)
{
    const Tensor& in = tape.value(x);
    if (in.c != cfg_.input_channels || in.B != cfg_.bandlimit) {
        throw ShapeError("hourglass input " + in.shape_string() + " does not match config (" +
                         std::to_string(cfg_.input_channels) + " channels at B=" + std::to_string(cfg_.bandlimit) +
                         ")");
    }
    const int L = cfg_.levels;
    VarId h = cfg_.arch == Arch::schn ? sph_conv(tape, x, *stem_w_, *stem_b_) : planar_conv3x3(tape, x, *stem_w_, *stem_b_);
    h = relu(tape, weighted_norm(tape, h, stem_norm_, mode));
    std::vector<VarId> skips;
    for (int i = 0; i < L; ++i) {
        for (const Block& b : encoder_[std::size_t(i)]) {
            h = residual_bottleneck(tape, h, b, cfg_.arch, mode);
        }
        skips.push_back(h);
        h = downsample(tape, h, i);
        h = pointwise_conv(tape, h, *down_mix_[std::size_t(i)].w, *down_mix_[std::size_t(i)].b);
    }
    for (const Block& b : bottom_) {
        h = residual_bottleneck(tape, h, b, cfg_.arch, mode);
    }
    for (int i = L - 1; i >= 0; --i) {
        h = upsample(tape, h, i);
        h = pointwise_conv(tape, h, *up_mix_[std::size_t(i)].w, *up_mix_[std::size_t(i)].b);
        h = add(tape, h, skips[std::size_t(i)]);
        for (const Block& b : decoder_[std::size_t(i)]) {
            h = residual_bottleneck(tape, h, b, cfg_.arch, mode);
        }
    }
    return pointwise_conv(tape, h, *head_.w, *head_.b);
}

} // namespace schn::nn
