#pragma once

#include <filesystem>

#include "prnu/plane.hpp"

namespace prnu {

/// Decodes an 8-bit PNG, JPEG or PGM/PPM file into a luminance plane.
/// Color inputs are combined with `to_grayscale`.
Plane load_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are rounded and clamped to [0, 255].
void save_png(const Plane& image, const std::filesystem::path& path);

}  // namespace prnu
