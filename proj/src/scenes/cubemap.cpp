#include "schn/scenes/cubemap.hpp"

#include "schn/error.hpp"

#include <algorithm>
#include <cmath>

namespace schn::scenes {

namespace {

struct FaceBasis {
    Vec3 axis, right, up;
};

// Right-handed viewer frames: right = axis x up.
constexpr std::array<FaceBasis, 6> kBases{{
    {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}},
    {{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
    {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}},
    {{0, -1, 0}, {-1, 0, 0}, {0, 0, 1}},
    {{0, 0, 1}, {0, -1, 0}, {-1, 0, 0}},
    {{0, 0, -1}, {0, -1, 0}, {1, 0, 0}},
}};

double dot(const Vec3& a, const Vec3& b)
{
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

double bilinear(const RgbImage& img, double x, double y, int channel)
{
    const int S = img.width;
    x = std::clamp(x, 0.0, S - 1.0);
    y = std::clamp(y, 0.0, S - 1.0);
    const int x0 = std::min(static_cast<int>(x), S - 1), y0 = std::min(static_cast<int>(y), S - 1);
    const int x1 = std::min(x0 + 1, S - 1), y1 = std::min(y0 + 1, S - 1);
    const double fx = x - x0, fy = y - y0;
    const auto v = [&](int px, int py) { return static_cast<double>(img.at(px, py)[channel]); };
    return (1 - fy) * ((1 - fx) * v(x0, y0) + fx * v(x1, y0)) + fy * ((1 - fx) * v(x0, y1) + fx * v(x1, y1));
}

} // namespace

void CubeFaceSet::validate() const
{
    const int S = faces[0].width;
    for (std::size_t f = 0; f < 6; ++f) {
        const auto& img = faces[f];
        if (img.width <= 0 || img.width != img.height) {
            throw ConfigError(std::string("cube face ") + kCubeFaceNames[f] + " must be square and non-empty");
        }
        if (img.width != S) {
            throw ConfigError(std::string("cube face ") + kCubeFaceNames[f] + " is " + std::to_string(img.width) +
                              " pixels wide, front is " + std::to_string(S));
        }
    }
}

CubeFaceSet read_cube_faces(const std::filesystem::path& dir)
{
    CubeFaceSet set;
    for (std::size_t f = 0; f < 6; ++f) {
        const auto path = dir / (std::string(kCubeFaceNames[f]) + ".png");
        if (!std::filesystem::exists(path)) {
            throw IoError(path.string() + ": missing cube face " + kCubeFaceNames[f]);
        }
        set.faces[f] = read_png(path);
    }
    set.validate();
    return set;
}

FaceSample cube_lookup(const Vec3& d, int face_size)
{
    const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
    CubeFace face;
    if (ax >= ay && ax >= az) {
        face = d.x >= 0 ? CubeFace::front : CubeFace::back;
    } else if (ay >= az) {
        face = d.y >= 0 ? CubeFace::left : CubeFace::right;
    } else {
        face = d.z >= 0 ? CubeFace::up : CubeFace::down;
    }
    const FaceBasis& b = kBases[static_cast<std::size_t>(face)];
    const double depth = dot(d, b.axis);
    const double u = dot(d, b.right) / depth, v = dot(d, b.up) / depth;
    return {face, (u + 1.0) * 0.5 * face_size - 0.5, (1.0 - v) * 0.5 * face_size - 0.5};
}

FeatureMap cubemap_to_sphere(const CubeFaceSet& faces, int B)
{
    faces.validate();
    const auto grid = shared_grid(B);
    FeatureMap out(grid, 3);
    const int side = grid->resolution();
    const int S = faces.faces[0].width;
    for (int j = 0; j < side; ++j) {
        for (int k = 0; k < side; ++k) {
            const FaceSample s = cube_lookup(node_direction(*grid, j, k), S);
            const RgbImage& img = faces.face(s.face);
            const std::size_t p = static_cast<std::size_t>(j) * side + k;
            for (int c = 0; c < 3; ++c) {
                out.channel(c)[p] = bilinear(img, s.x, s.y, c) / 255.0;
            }
        }
    }
    return out;
}

} // namespace schn::scenes
