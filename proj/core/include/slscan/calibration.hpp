#pragma once

#include <filesystem>
#include <string>

#include "slscan/geometry.hpp"

namespace slscan {

// Calibration file layout (JSON):
//
//   {
//     "camera":    {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..,
//                   "dist":[k1, k2, p1, p2, k3]},
//     "projector": { same fields },
//     "extrinsics": {"R": [9 values, row-major], "t": [3 values, metres]}
//   }
//
// "dist" may be omitted for a distortion-free device. R and t map camera-frame
// points into the projector frame.

StereoRig rig_from_json(const std::string& text);
std::string rig_to_json(const StereoRig& rig);

/// Throws ConfigError when the file is missing or invalid.
StereoRig load_rig(const std::filesystem::path& path);
void save_rig(const StereoRig& rig, const std::filesystem::path& path);

}  // namespace slscan
