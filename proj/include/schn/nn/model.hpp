#pragma once

#include "schn/config.hpp"
#include "schn/nn/layers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace schn::nn {

enum class FilterMode { localized, global };
enum class Arch { schn, planar_baseline };

std::string to_string(FilterMode m);
std::string to_string(Arch a);

struct HourglassConfig {
    int bandlimit = 32;
    int input_channels = 3;
    int num_classes = 6;
    int levels = 3;
    std::vector<int> channels{16, 32, 64, 64};
    int blocks_per_level = 1;
    int anchors = 16;
    FilterMode filter_mode = FilterMode::localized;
    int bottleneck_ratio = 4;
    Arch arch = Arch::schn;

    static constexpr int kMinChannels = 1;
    static constexpr int kMaxChannels = 1024;

    /// Throws ConfigError describing the first violated constraint.
    void validate() const;

    int level_bandlimit(int level) const { return bandlimit >> level; }
    /// Anchor count used by spherical convolutions at a pyramid level. Global
    /// mode uses one anchor per degree; localized mode caps K at the level's
    /// bandlimit.
    int level_anchors(int level) const;

    /// Desk-scale default.
    static HourglassConfig desk();
    /// Reference config at the 256 x 256 resolution.
    static HourglassConfig reference();
};

/// Writes the config as `model.*` entries.
void write_config(const HourglassConfig& cfg, ConfigText& out);
/// Applies one `model.*` entry; returns false for keys outside the section.
bool apply_config_key(HourglassConfig& cfg, const std::string& key, const std::string& value);

/// Parameters of one residual bottleneck block.
struct BottleneckParams {
    Parameter* reduce_w = nullptr;
    Parameter* reduce_b = nullptr;
    NormParams norm1;
    Parameter* mid_w = nullptr;
    Parameter* mid_b = nullptr;
    NormParams norm2;
    Parameter* expand_w = nullptr;
    Parameter* expand_b = nullptr;
};

/// Registers a block under prefix. The middle operator is a spherical
/// convolution with `anchors` anchors (schn) or a 3x3 planar convolution.
/// Throws ConfigError when channels is not divisible by ratio.
BottleneckParams add_bottleneck(ParameterSet& set, const std::string& prefix, int channels, int ratio, Arch arch,
                                int anchors);

/// Registers scale/shift and running statistics for a norm layer.
NormParams add_norm(ParameterSet& set, const std::string& prefix, int channels);

/// y = x + expand(act(mid(act(reduce(x))))), act = weighted_norm then relu.
VarId residual_bottleneck(Tape& tape, VarId x, const BottleneckParams& p, Arch arch, Mode mode);

/// The hourglass network: stem, L encoder levels with residual bottleneck
/// blocks, a bottom stage, L decoder levels with additive skips and a
/// pointwise classification head.
class Hourglass {
public:
    explicit Hourglass(HourglassConfig cfg);

    const HourglassConfig& config() const noexcept { return cfg_; }
    ParameterSet& parameters() noexcept { return params_; }
    const ParameterSet& parameters() const noexcept { return params_; }

    /// Deterministic initialization: He-normal weights, unit norm scales,
    /// zero biases and shifts, running statistics (0, 1).
    void initialize(std::uint64_t seed);

    /// Input [N, input_channels, B_in] -> logits [N, num_classes, B_in].
    VarId forward(Tape& tape, VarId x, Mode mode);

private:
    using Block = BottleneckParams;
    struct Mix {
        Parameter* w;
        Parameter* b;
    };

    Block make_block(const std::string& prefix, int channels, int level);
    Mix make_mix(const std::string& prefix, int cin, int cout);
    VarId downsample(Tape& tape, VarId x, int level);
    VarId upsample(Tape& tape, VarId x, int level);

    HourglassConfig cfg_;
    ParameterSet params_;
    Parameter* stem_w_;
    Parameter* stem_b_;
    NormParams stem_norm_;
    std::vector<std::vector<Block>> encoder_;
    std::vector<Mix> down_mix_;
    std::vector<Block> bottom_;
    std::vector<Mix> up_mix_;
    std::vector<std::vector<Block>> decoder_;
    Mix head_;
};

} // namespace schn::nn
