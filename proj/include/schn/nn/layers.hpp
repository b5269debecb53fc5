#pragma once

#include "schn/grid.hpp"
#include "schn/nn/tape.hpp"

#include <vector>

namespace schn::nn {

/// Packs feature maps of equal shape into one batch tensor.
Tensor stack(const std::vector<FeatureMap>& maps);
/// Extracts one sample of a batch as a feature map on the shared grid.
FeatureMap unstack(const Tensor& t, int sample);

/// Spherical convolution with anchor-localized zonal filters.
/// anchors: [C_in, C_out, K], bias: [C_out]. Each (c_in, c_out) pair owns K
/// anchors interpolated onto the input bandlimit; out_c' = S(sum_c k_{c,c'} A x_c) + b_c'.
VarId sph_conv(Tape& tape, VarId x, Parameter& anchors, Parameter& bias);

/// Per-node channel mix out = W x + b, W: [C_out, C_in], b: [C_out].
VarId pointwise_conv(Tape& tape, VarId x, Parameter& weight, Parameter& bias);

VarId relu(Tape& tape, VarId x);

VarId add(Tape& tape, VarId a, VarId b);

struct NormParams {
    Parameter* scale = nullptr;        // [C]
    Parameter* shift = nullptr;        // [C]
    Parameter* running_mean = nullptr; // [C], buffer
    Parameter* running_var = nullptr;  // [C], buffer
};

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kNormMomentum = 0.9;

/// Quadrature-weighted batch normalization. In train mode uses the
/// area-weighted moments over sphere x batch and updates the running
/// statistics (running = 0.9 running + 0.1 batch); in eval mode applies the
/// running statistics.
VarId weighted_norm(Tape& tape, VarId x, const NormParams& p, Mode mode);

/// Spectral resampling to a new bandlimit: analysis at the input bandlimit,
/// truncation or zero padding of degrees, synthesis on the output grid.
VarId spectral_resample(Tape& tape, VarId x, int B_out);

/// 2x2 average pooling on the equirectangular lattice (B -> B/2).
VarId avg_pool2(Tape& tape, VarId x);
/// Nearest-neighbour 2x upsampling on the equirectangular lattice (B -> 2B).
VarId upsample_nearest2(Tape& tape, VarId x);

/// 3x3 cross-correlation; circular padding in azimuth, zero padding at the
/// first and last colatitude rows. kernels: [C_out, C_in, 3, 3], bias: [C_out].
VarId planar_conv3x3(Tape& tape, VarId x, Parameter& kernels, Parameter& bias);

} // namespace schn::nn
