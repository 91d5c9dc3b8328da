#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "slscan/point_cloud.hpp"

namespace slscan {

enum class PlyFormat { ascii, binary_little_endian };

/// Vertex properties written: float x y z, float u_c v_c (source camera pixel)
/// and, when the cloud has it, float intensity. ASCII output uses the shortest
/// text that reads back to the same float, so both encodings carry identical values.
std::string encode_ply(const PointCloud& cloud, PlyFormat format, const std::vector<std::string>& comments = {});
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format,
               const std::vector<std::string>& comments = {});

struct PlyFile {
  PointCloud cloud;
  std::vector<std::string> comments;
  PlyFormat format = PlyFormat::binary_little_endian;
};

/// Reads the vertex element of an ASCII or binary little-endian PLY. Scalar
/// property types are converted; x, y and z are required. Throws DataError on a
/// malformed header or truncated body.
PlyFile decode_ply(const std::string& bytes);
PlyFile read_ply(const std::filesystem::path& path);

}  // namespace slscan
