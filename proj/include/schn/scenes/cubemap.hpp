#pragma once

#include "schn/grid.hpp"
#include "schn/image.hpp"

#include <array>
#include <filesystem>
#include <string>

namespace schn::scenes {

enum class CubeFace { front, back, left, right, up, down };

/// File stems in CubeFace order; faces look along +x, -x, +y, -y, +z, -z.
inline constexpr std::array<const char*, 6> kCubeFaceNames{"front", "back", "left", "right", "up", "down"};

struct CubeFaceSet {
    std::array<RgbImage, 6> faces;

    const RgbImage& face(CubeFace f) const { return faces[static_cast<std::size_t>(f)]; }
    /// Throws ConfigError unless all six faces are square, non-empty and equal in size.
    void validate() const;
};

/// Reads <dir>/<name>.png for every face. Throws IoError naming a missing face.
CubeFaceSet read_cube_faces(const std::filesystem::path& dir);

/// Face index and pixel coordinates (continuous, pixel centers at integers)
/// hit by a direction.
struct FaceSample {
    CubeFace face;
    double x;
    double y;
};
FaceSample cube_lookup(const Vec3& d, int face_size);

/// Samples each grid direction from the face with the largest axis component
/// (gnomonic projection, bilinear filtering); output channels in [0, 1].
FeatureMap cubemap_to_sphere(const CubeFaceSet& faces, int B);

} // namespace schn::scenes
