#include "slscan/calibration.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace slscan {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw ConfigError("calibration: missing field '" + where + name + "'");
  }
  return obj.at(name);
}

double number(const json& obj, const char* name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_number()) throw ConfigError("calibration: field '" + where + name + "' is not a number");
  return v.get<double>();
}

DeviceModel device_from_json(const json& j, const std::string& where) {
  const Intrinsics k(number(j, "fx", where), number(j, "fy", where), number(j, "cx", where),
                     number(j, "cy", where), static_cast<int>(number(j, "width", where)),
                     static_cast<int>(number(j, "height", where)));
  Distortion d;
  if (j.contains("dist")) {
    const json& c = j.at("dist");
    if (!c.is_array() || c.size() != 5) {
      throw ConfigError("calibration: '" + where + "dist' must hold [k1, k2, p1, p2, k3]");
    }
    d = Distortion(c[0].get<double>(), c[1].get<double>(), c[2].get<double>(),
                   c[3].get<double>(), c[4].get<double>());
  }
  return DeviceModel(k, d);
}

json device_to_json(const DeviceModel& m) {
  const auto& k = m.intrinsics();
  const auto& d = m.distortion();
  return json{{"fx", k.fx()},           {"fy", k.fy()},
              {"cx", k.cx()},           {"cy", k.cy()},
              {"width", k.width()},     {"height", k.height()},
              {"dist", {d.k1(), d.k2(), d.p1(), d.p2(), d.k3()}}};
}

}  // namespace

StereoRig rig_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
  try {
    const json& ext = field(j, "extrinsics", "");
    const json& r = field(ext, "R", "extrinsics.");
    const json& t = field(ext, "t", "extrinsics.");
    if (!r.is_array() || r.size() != 9) throw ConfigError("calibration: extrinsics.R needs 9 values");
    if (!t.is_array() || t.size() != 3) throw ConfigError("calibration: extrinsics.t needs 3 values");
    Mat3 rot;
    for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[i].get<double>();
    const Vec3 trans(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    return StereoRig(device_from_json(field(j, "camera", ""), "camera."),
                     device_from_json(field(j, "projector", ""), "projector."),
                     Extrinsics(rot, trans));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
}

std::string rig_to_json(const StereoRig& rig) {
  const Mat3& r = rig.projector_pose().rotation();
  const Vec3& t = rig.projector_pose().translation();
  json ext;
  ext["R"] = {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)};
  ext["t"] = {t.x(), t.y(), t.z()};
  json j{{"camera", device_to_json(rig.camera())},
         {"projector", device_to_json(rig.projector())},
         {"extrinsics", ext}};
  return j.dump(2);
}

StereoRig load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("calibration: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return rig_from_json(ss.str());
}

void save_rig(const StereoRig& rig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("calibration: cannot write '" + path.string() + "'");
  out << rig_to_json(rig) << '\n';
}

}  // namespace slscan
