#include "slscan/frame_io.hpp"

#include <algorithm>
#include <cstdio>

#include "json_support.hpp"
#include "slscan/image_io.hpp"

namespace slscan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

void check_dimension(const char* field, int expected, int actual, const fs::path& file) {
  if (expected != actual) {
    throw DataError("frame manifest field '" + std::string(field) + "' is " + std::to_string(expected) + " but '" +
                    file.filename().string() + "' has " + std::to_string(actual));
  }
}

}  // namespace

std::string pattern_spec_to_json(const PatternSpec& spec) { return detail::to_json(spec).dump(2); }

PatternSpec pattern_spec_from_json(const std::string& text) {
  return detail::pattern_spec_from(detail::parse_json(text, "pattern", ErrorKind::config));
}

fs::path write_frame_set(const fs::path& directory, const FrameSet& frames, const FrameWriteOptions& options) {
  frames.check_consistent();
  fs::create_directories(directory);
  json j{{"width", frames.width()},
         {"height", frames.height()},
         {"bit_depth", options.bit_depth},
         {"pattern", detail::to_json(frames.spec)}};
  j["frames"] = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%02zu.%s", i, options.extension.c_str());
    write_gray(directory / name, from_unit(*frames.images[i], options.bit_depth));
    json entry{{"file", name}};
    if (i < frames.timestamps.size()) entry["timestamp"] = frames.timestamps[i];
    j["frames"].push_back(std::move(entry));
  }
  if (frames.valid) {
    GrayImage mask;
    mask.maxval = 255;
    mask.pixels = Image<std::uint16_t>(frames.width(), frames.height());
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) mask.pixels[i] = (*frames.valid)[i] ? 255 : 0;
    write_pgm(directory / "valid.pgm", mask);
    j["valid_mask"] = "valid.pgm";
  }
  const fs::path manifest = directory / "frames.json";
  detail::write_text(manifest, j.dump(2) + "\n");
  return manifest;
}

FrameSet read_frame_set(const fs::path& manifest) {
  const std::string where = "frame manifest '" + manifest.string() + "'";
  const json j = detail::parse_json(detail::read_text(manifest, ErrorKind::config), where, ErrorKind::data);
  const int w = get<int>(j, "width", where);
  const int h = get<int>(j, "height", where);
  FrameSet fs_out;
  fs_out.spec = detail::pattern_spec_from(require(j, "pattern", where));
  const json& frames = require(j, "frames", where);
  if (!frames.is_array()) throw DataError(where + ": field 'frames' must be an array");
  const fs::path dir = manifest.parent_path();
  bool have_times = true;
  for (const auto& f : frames) {
    const fs::path file = dir / get<std::string>(f, "file", where);
    ImageD img = to_unit(read_gray(file));
    check_dimension("width", w, img.width(), file);
    check_dimension("height", h, img.height(), file);
    fs_out.images.push_back(make_handle(std::move(img)));
    if (f.contains("timestamp")) {
      fs_out.timestamps.push_back(f.at("timestamp").get<double>());
    } else {
      have_times = false;
    }
  }
  if (!have_times) fs_out.timestamps.clear();
  const std::size_t expected = static_cast<std::size_t>(2 * fs_out.spec.steps);
  if (fs_out.images.size() != expected) {
    throw DataError(where + ": field 'frames' lists " + std::to_string(fs_out.images.size()) + " images but the pattern needs " +
                    std::to_string(expected));
  }
  if (j.contains("valid_mask")) {
    const fs::path file = dir / get<std::string>(j, "valid_mask", where);
    const GrayImage m = read_gray(file);
    check_dimension("width", w, m.pixels.width(), file);
    check_dimension("height", h, m.pixels.height(), file);
    Mask mask(w, h);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = m.pixels[i] ? 1 : 0;
    fs_out.valid = std::move(mask);
  }
  fs_out.check_consistent();
  return fs_out;
}

SyncStreams read_sync_manifest(const fs::path& path) {
  const std::string where = "sync manifest '" + path.string() + "'";
  const json j = detail::parse_json(detail::read_text(path, ErrorKind::config), where, ErrorKind::data);
  SyncStreams s;
  s.sequence_length = j.value("sequence_length", s.sequence_length);
  const double dt = get<double>(j, "dt_img", where);
  s.config = SyncConfig::with_interval(dt);
  s.config.tol_lower = j.value("tol_lower", s.config.tol_lower);
  s.config.tol_upper = j.value("tol_upper", s.config.tol_upper);
  s.config.validate();
  for (const auto& t : require(j, "triggers", where)) {
    s.triggers.push_back({get<double>(t, "t", where), get<std::int64_t>(t, "sequence", where), get<int>(t, "index", where)});
  }
  std::int64_t next_id = 0;
  for (const auto& im : require(j, "images", where)) {
    const std::int64_t id = im.contains("id") ? im.at("id").get<std::int64_t>() : next_id;
    next_id = id + 1;
    s.images.push_back({get<double>(im, "t", where), id, nullptr});
  }
  std::stable_sort(s.triggers.begin(), s.triggers.end(), [](const auto& a, const auto& b) { return a.t_p < b.t_p; });
  std::stable_sort(s.images.begin(), s.images.end(), [](const auto& a, const auto& b) { return a.t_c < b.t_c; });
  return s;
}

void write_sync_manifest(const fs::path& path, const SyncStreams& streams) {
  json j{{"sequence_length", streams.sequence_length},
         {"dt_img", streams.config.dt_img},
         {"tol_lower", streams.config.tol_lower},
         {"tol_upper", streams.config.tol_upper}};
  j["triggers"] = json::array();
  for (const auto& t : streams.triggers) j["triggers"].push_back({{"t", t.t_p}, {"sequence", t.sequence_id}, {"index", t.pattern_index}});
  j["images"] = json::array();
  for (const auto& im : streams.images) j["images"].push_back({{"t", im.t_c}, {"id", im.id}});
  detail::write_text(path, j.dump(2) + "\n");
}

}  // namespace slscan
