#pragma once

#include "schn/config.hpp"
#include "schn/grid.hpp"
#include "schn/sht.hpp"
#include "schn/wigner.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace schn::scenes {

inline constexpr int kBackground = 0;
inline constexpr int kFloor = 1;
inline constexpr int kSky = 2;
inline constexpr int kFirstObject = 3;

/// Bandlimit of the illumination field.
inline constexpr int kIlluminationBandlimit = 4;

/// Generator settings shared by every scene of a dataset. Angles in degrees.
struct SceneParams {
    int bandlimit = 32;
    int num_classes = 6;
    /// Each object class gets one cap; up to this many more are added with random classes.
    int extra_caps = 2;
    double min_radius_deg = 15.0;
    double max_radius_deg = 40.0;
    /// Cap centers are drawn with colatitude in [90 - spread, 90 + spread].
    double center_spread_deg = 30.0;
    /// Sky and floor band extents are drawn from [band_min_deg, band_max_deg].
    double band_min_deg = 20.0;
    double band_max_deg = 30.0;
    /// Per-scene perturbation of the class colors.
    double color_jitter = 0.1;
    /// RMS of the random per-channel illumination field.
    double illumination = 0.15;
    /// Brightness difference between zenith and nadir of the overhead light (all channels).
    double ceiling_light = 0.0;
    double noise_sigma = 0.1;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

void write_config(const SceneParams& p, ConfigText& out);
/// Applies one "scenes.*" key; returns false for keys outside that section.
bool apply_config_key(SceneParams& p, const std::string& key, const std::string& value);

/// Spherical cap painted with one label.
struct Cap {
    Vec3 center;
    double radius = 0.0; // radians
    int label = 0;
};

/// Complete geometric and photometric description of one scene. Rendering
/// is a pure function of this struct and the grid.
struct SceneSpec {
    std::uint64_t seed = 0;
    int num_classes = 0;
    int bandlimit = 0;
    /// Sky pole; the floor band is centered on the antipode.
    Vec3 up{0.0, 0.0, 1.0};
    double sky_extent = 0.0;   // radians
    double floor_extent = 0.0; // radians
    /// In painting order: farthest first.
    std::vector<Cap> caps;
    std::vector<std::array<double, 3>> colors;
    std::array<SpectralCoeffs, 3> illumination{SpectralCoeffs(Bandlimit(kIlluminationBandlimit)),
                                               SpectralCoeffs(Bandlimit(kIlluminationBandlimit)),
                                               SpectralCoeffs(Bandlimit(kIlluminationBandlimit))};
    double noise_sigma = 0.0;
    /// Rotation applied to the canonical scene.
    RotationZYZ pose;
};

struct RenderedScene {
    FeatureMap input;
    LabelMap labels;
    SceneSpec spec;
};

/// Base color of class c before jitter, channels in [0, 1].
std::array<double, 3> class_color(int c);

/// Canonical-pose scene drawn from the seed. Throws ConfigError for C < 4.
SceneSpec sample_spec(std::uint64_t seed, const SceneParams& params);
/// Class label of a direction.
int label_at(const SceneSpec& spec, const Vec3& x);
FeatureMap render_input(const SceneSpec& spec);
LabelMap render_labels(const SceneSpec& spec);

RenderedScene sample_scene(std::uint64_t seed, const SceneParams& params);

/// Rotates cap centers and the band axis analytically and the illumination spectrally.
SceneSpec rotate_spec(const SceneSpec& spec, const RotationZYZ& r);
/// Re-renders the rotated scene; no resampling of rendered data.
RenderedScene rotate_scene(const SceneSpec& spec, const RotationZYZ& r);

} // namespace schn::scenes
