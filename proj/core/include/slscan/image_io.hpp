#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "slscan/image.hpp"

namespace slscan {

/// Integer grey image at its native depth. `maxval` is 255 for 8-bit data and
/// up to 65535 for deeper data.
struct GrayImage {
  Image<std::uint16_t> pixels;
  int maxval = 255;

  int bit_depth() const noexcept { return maxval > 255 ? 16 : 8; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

enum class PgmEncoding { binary, ascii };

/// P2 and P5, maxval up to 65535 (big-endian samples when above 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image, PgmEncoding encoding = PgmEncoding::binary);

/// 8- or 16-bit greyscale PNG. Writing requires maxval 255 or 65535.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// Dispatches on the extension (.pgm or .png).
GrayImage read_gray(const std::filesystem::path& path);
void write_gray(const std::filesystem::path& path, const GrayImage& image);

/// Divides by maxval.
ImageD to_unit(const GrayImage& image);
/// Scales [0, 1] to the `bits` grid (8..16), rounding half up and clamping.
GrayImage from_unit(const ImageD& image, int bits);

/// Headerless little-endian float32, row-major.
void write_float_map(const std::filesystem::path& path, const ImageD& image);
/// Throws DataError when the file size does not match width * height.
ImageD read_float_map(const std::filesystem::path& path, int width, int height);

/// A directory of float32 maps described by a JSON manifest:
///   {"width": W, "height": H, "dtype": "float32", "byte_order": "little",
///    "maps": {"depth": "depth.f32", ...}}
void write_map_bundle(const std::filesystem::path& manifest, const std::map<std::string, ImageD>& maps);
std::map<std::string, ImageD> read_map_bundle(const std::filesystem::path& manifest);

}  // namespace slscan
