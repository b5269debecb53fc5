#include "schn/image.hpp"

#include "schn/error.hpp"

#include <png.h>

#include <string>

namespace schn {

RgbImage read_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError(path.string() + ": cannot read PNG: " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": cannot decode PNG: " + message);
    }
    return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path)
{
    png_image info{};
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(image.width);
    info.height = static_cast<png_uint_32>(image.height);
    info.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&info, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
        throw IoError(path.string() + ": cannot write PNG: " + info.message);
    }
}

} // namespace schn
