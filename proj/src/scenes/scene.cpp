#include "schn/scenes/scene.hpp"

#include "schn/error.hpp"
#include "schn/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace schn::scenes {

namespace {

constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kColorStream = 2;
constexpr std::uint64_t kLightStream = 3;
constexpr std::uint64_t kNoiseStream = 4;

constexpr double kDeg = std::numbers::pi / 180.0;

double dot(const Vec3& a, const Vec3& b)
{
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

Vec3 direction(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

void check_range(const std::string& key, double v, double lo, double hi)
{
    if (!(v >= lo && v <= hi)) {
        throw ConfigError(key + " must lie in [" + format_double(lo) + ", " + format_double(hi) + "], got " +
                          format_double(v));
    }
}

} // namespace

// Fixed palette for background, floor, sky and the first objects; further
// classes step around a hue circle.
std::array<double, 3> class_color(int c)
{
    static constexpr std::array<std::array<double, 3>, 8> palette{{
        {0.50, 0.50, 0.50},
        {0.65, 0.45, 0.30},
        {0.55, 0.70, 0.90},
        {0.85, 0.25, 0.25},
        {0.25, 0.70, 0.30},
        {0.90, 0.80, 0.20},
        {0.55, 0.30, 0.75},
        {0.20, 0.30, 0.60},
    }};
    if (c < static_cast<int>(palette.size())) {
        return palette[static_cast<std::size_t>(c)];
    }
    std::array<double, 3> out{};
    const double hue = 0.6180339887498949 * c;
    for (int k = 0; k < 3; ++k) {
        out[std::size_t(k)] = 0.5 + 0.35 * std::cos(2.0 * std::numbers::pi * (hue + k / 3.0));
    }
    return out;
}

void SceneParams::validate() const
{
    if (bandlimit < kIlluminationBandlimit || bandlimit > 1024) {
        throw ConfigError("scenes.bandlimit must lie in [4, 1024]");
    }
    if (num_classes < 4 || num_classes > 1000) {
        throw ConfigError("scenes.num_classes must be at least 4 (background, floor, sky and one object class)");
    }
    if (extra_caps < 0 || extra_caps > 64) {
        throw ConfigError("scenes.extra_caps must lie in [0, 64]");
    }
    check_range("scenes.min_radius_deg", min_radius_deg, 10.0, 60.0);
    check_range("scenes.max_radius_deg", max_radius_deg, min_radius_deg, 60.0);
    check_range("scenes.center_spread_deg", center_spread_deg, 0.0, 30.0);
    check_range("scenes.band_min_deg", band_min_deg, 0.0, 30.0);
    check_range("scenes.band_max_deg", band_max_deg, band_min_deg, 30.0);
    check_range("scenes.color_jitter", color_jitter, 0.0, 10.0);
    check_range("scenes.illumination", illumination, 0.0, 10.0);
    check_range("scenes.ceiling_light", ceiling_light, -10.0, 10.0);
    check_range("scenes.noise_sigma", noise_sigma, 0.0, 10.0);
}

void write_config(const SceneParams& p, ConfigText& out)
{
    out.set("scenes.bandlimit", std::to_string(p.bandlimit));
    out.set("scenes.num_classes", std::to_string(p.num_classes));
    out.set("scenes.extra_caps", std::to_string(p.extra_caps));
    out.set("scenes.min_radius_deg", format_double(p.min_radius_deg));
    out.set("scenes.max_radius_deg", format_double(p.max_radius_deg));
    out.set("scenes.center_spread_deg", format_double(p.center_spread_deg));
    out.set("scenes.band_min_deg", format_double(p.band_min_deg));
    out.set("scenes.band_max_deg", format_double(p.band_max_deg));
    out.set("scenes.color_jitter", format_double(p.color_jitter));
    out.set("scenes.illumination", format_double(p.illumination));
    out.set("scenes.ceiling_light", format_double(p.ceiling_light));
    out.set("scenes.noise_sigma", format_double(p.noise_sigma));
}

bool apply_config_key(SceneParams& p, const std::string& key, const std::string& value)
{
    auto as_int = [&] {
        const long long v = parse_int(key, value);
        if (v < -1000000 || v > 1000000) {
            throw ConfigError(key + ": value out of range");
        }
        return static_cast<int>(v);
    };
    if (key == "scenes.bandlimit") {
        p.bandlimit = as_int();
    } else if (key == "scenes.num_classes") {
        p.num_classes = as_int();
    } else if (key == "scenes.extra_caps") {
        p.extra_caps = as_int();
    } else if (key == "scenes.min_radius_deg") {
        p.min_radius_deg = parse_double(key, value);
    } else if (key == "scenes.max_radius_deg") {
        p.max_radius_deg = parse_double(key, value);
    } else if (key == "scenes.center_spread_deg") {
        p.center_spread_deg = parse_double(key, value);
    } else if (key == "scenes.band_min_deg") {
        p.band_min_deg = parse_double(key, value);
    } else if (key == "scenes.band_max_deg") {
        p.band_max_deg = parse_double(key, value);
    } else if (key == "scenes.color_jitter") {
        p.color_jitter = parse_double(key, value);
    } else if (key == "scenes.illumination") {
        p.illumination = parse_double(key, value);
    } else if (key == "scenes.ceiling_light") {
        p.ceiling_light = parse_double(key, value);
    } else if (key == "scenes.noise_sigma") {
        p.noise_sigma = parse_double(key, value);
    } else {
        return false;
    }
    return true;
}

SceneSpec sample_spec(std::uint64_t seed, const SceneParams& params)
{
    params.validate();
    SceneSpec s;
    s.seed = seed;
    s.num_classes = params.num_classes;
    s.bandlimit = params.bandlimit;
    s.noise_sigma = params.noise_sigma;

    Rng geo(mix_seed(seed, kGeometryStream));
    s.sky_extent = geo.uniform(params.band_min_deg, params.band_max_deg) * kDeg;
    s.floor_extent = geo.uniform(params.band_min_deg, params.band_max_deg) * kDeg;
    std::vector<int> labels;
    for (int c = kFirstObject; c < params.num_classes; ++c) {
        labels.push_back(c);
    }
    const auto extra = static_cast<int>(geo.below(static_cast<std::uint64_t>(params.extra_caps) + 1));
    for (int i = 0; i < extra; ++i) {
        labels.push_back(kFirstObject + static_cast<int>(geo.below(static_cast<std::uint64_t>(params.num_classes - kFirstObject))));
    }
    std::vector<std::pair<double, Cap>> placed;
    for (int label : labels) {
        const double theta = (90.0 + geo.uniform(-params.center_spread_deg, params.center_spread_deg)) * kDeg;
        const double phi = geo.uniform(0.0, 2.0 * std::numbers::pi);
        const double radius = geo.uniform(params.min_radius_deg, params.max_radius_deg) * kDeg;
        const double depth = geo.uniform();
        placed.push_back({depth, Cap{direction(theta, phi), radius, label}});
    }
    std::stable_sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (auto& [depth, cap] : placed) {
        s.caps.push_back(cap);
    }

    Rng color(mix_seed(seed, kColorStream));
    for (int c = 0; c < params.num_classes; ++c) {
        auto base = class_color(c);
        for (auto& v : base) {
            v += params.color_jitter * color.normal();
        }
        s.colors.push_back(base);
    }

    // Random real field per channel with the requested RMS over the sphere,
    // plus a shared overhead light varying as cos(theta).
    Rng light(mix_seed(seed, kLightStream));
    const int L = kIlluminationBandlimit;
    const double per_coeff = params.illumination * std::sqrt(4.0 * std::numbers::pi / (L * L - 1));
    for (auto& f : s.illumination) {
        for (int l = 1; l < L; ++l) {
            f.at(l, 0) = {per_coeff * light.normal(), 0.0};
            for (int m = 1; m <= l; ++m) {
                const complex v = per_coeff / std::numbers::sqrt2 * complex(light.normal(), light.normal());
                f.at(l, m) = v;
                f.at(l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(v);
            }
        }
        // cos(theta) = sqrt(4 pi / 3) Y_1^0; zenith-nadir difference = ceiling_light.
        f.at(1, 0) += 0.5 * params.ceiling_light * std::sqrt(4.0 * std::numbers::pi / 3.0);
    }
    return s;
}

int label_at(const SceneSpec& spec, const Vec3& x)
{
    int label = kBackground;
    const double up = dot(x, spec.up);
    if (up > std::cos(spec.sky_extent)) {
        label = kSky;
    } else if (-up > std::cos(spec.floor_extent)) {
        label = kFloor;
    }
    for (const Cap& c : spec.caps) {
        if (dot(x, c.center) > std::cos(c.radius)) {
            label = c.label;
        }
    }
    return label;
}

LabelMap render_labels(const SceneSpec& spec)
{
    const auto grid = shared_grid(spec.bandlimit);
    LabelMap out(grid, spec.num_classes);
    const int side = grid->resolution();
    for (int j = 0; j < side; ++j) {
        for (int k = 0; k < side; ++k) {
            out.labels[std::size_t(j) * side + k] = static_cast<std::uint16_t>(label_at(spec, node_direction(*grid, j, k)));
        }
    }
    return out;
}

FeatureMap render_input(const SceneSpec& spec)
{
    const auto grid = shared_grid(spec.bandlimit);
    const LabelMap labels = render_labels(spec);
    FeatureMap out(grid, 3);
    Rng noise(mix_seed(spec.seed, kNoiseStream));
    const std::size_t nodes = grid->node_count();
    for (int c = 0; c < 3; ++c) {
        SpectralCoeffs padded{Bandlimit(spec.bandlimit)};
        const auto& f = spec.illumination[std::size_t(c)];
        for (int l = 0; l < kIlluminationBandlimit; ++l) {
            for (int m = -l; m <= l; ++m) {
                padded.at(l, m) = f.at(l, m);
            }
        }
        const SphericalSignal light = sht_inverse(padded, grid);
        auto channel = out.channel(c);
        for (std::size_t p = 0; p < nodes; ++p) {
            channel[p] = spec.colors[labels.labels[p]][std::size_t(c)] + light.values[p] +
                         spec.noise_sigma * noise.normal();
        }
    }
    return out;
}

RenderedScene sample_scene(std::uint64_t seed, const SceneParams& params)
{
    SceneSpec spec = sample_spec(seed, params);
    return {render_input(spec), render_labels(spec), std::move(spec)};
}

SceneSpec rotate_spec(const SceneSpec& spec, const RotationZYZ& r)
{
    SceneSpec out = spec;
    const Mat3 m = rotation_matrix(r);
    out.up = schn::apply(m, spec.up);
    for (Cap& c : out.caps) {
        c.center = schn::apply(m, c.center);
    }
    for (auto& f : out.illumination) {
        f = rotate_coeffs(f, r);
    }
    out.pose = compose(r, spec.pose);
    return out;
}

RenderedScene rotate_scene(const SceneSpec& spec, const RotationZYZ& r)
{
    SceneSpec rotated = rotate_spec(spec, r);
    return {render_input(rotated), render_labels(rotated), std::move(rotated)};
}

} // namespace schn::scenes
